"""The two small hardware-demonstration instances, in signed-index notation."""

from .cnf import CnfFormula, parse_formula

FOUR_QUBIT_TEXT = (
    "{[-0, +2, +3], [+0, +2, -3], [-1, +2, -3], [-1, -2, -3], "
    "[-1, -2, +3], [+1, +2, -3], [+0, +2, +3], [-0, +1, -3]}"
)
FIVE_QUBIT_TEXT = (
    "{[+1, -2, -3], [-1, -3, +4], [+0, -2, -4], [-0, -2, +3], "
    "[+2, +3, +4], [-0, +1, +2], [+0, -2, 4], [-1, +2, -4]}"
)


def four_qubit() -> CnfFormula:
    return parse_formula(FOUR_QUBIT_TEXT, "json")


def five_qubit() -> CnfFormula:
    return parse_formula(FIVE_QUBIT_TEXT, "json")
