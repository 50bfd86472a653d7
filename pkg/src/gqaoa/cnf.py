"""3-CNF formulas: parsing, random generation and exhaustive evaluation.

Assignments are plain integers: bit ``i`` holds the truth value of
variable ``i``.  Everything that needs a ground truth (energies, spectra,
solution sets) is computed here by brute force over all ``2**n``
assignments, which makes this module the oracle for the simulators.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

#: Largest ``n`` accepted by the exhaustive routines unless overridden.
DEFAULT_ENUMERATION_CAP = 30

# assignments processed per block when scanning the full 2**n range
_CHUNK = 1 << 20


class FormulaError(ValueError):
    """Raised for malformed or inconsistent CNF input."""


class Literal(NamedTuple):
    var: int
    sign: int  # +1 plain, -1 negated

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}{self.var}"

    def satisfied_by(self, assignment: int) -> bool:
        bit = (assignment >> self.var) & 1
        return bool(bit) == (self.sign > 0)


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, Literal, Literal]

    def __post_init__(self) -> None:
        lits = tuple(Literal(int(v), int(s)) for v, s in self.literals)
        if len(lits) != 3:
            raise FormulaError(f"clause must have exactly 3 literals, got {len(lits)}")
        for lit in lits:
            if lit.sign not in (1, -1):
                raise FormulaError(f"literal sign must be +1 or -1, got {lit.sign}")
            if lit.var < 0:
                raise FormulaError(f"negative variable index {lit.var}")
        if len({lit.var for lit in lits}) != 3:
            raise FormulaError(f"repeated variable in clause {[str(x) for x in lits]}")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *signed: tuple[int, int]) -> "Clause":
        return cls(tuple(Literal(v, s) for v, s in signed))

    def key(self) -> frozenset[Literal]:
        return frozenset(self.literals)

    @property
    def mask(self) -> int:
        return sum(1 << lit.var for lit in self.literals)

    @property
    def pattern(self) -> int:
        """Bits of the single local assignment that falsifies the clause."""
        return sum(1 << lit.var for lit in self.literals if lit.sign < 0)

    def __str__(self) -> str:
        return "[" + ", ".join(str(lit) for lit in self.literals) + "]"


@dataclass(frozen=True)
class CnfFormula:
    """A 3-CNF formula over ``n`` variables with duplicate clauses removed."""

    n: int
    clauses: tuple[Clause, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n < 0:
            raise FormulaError("variable count must be non-negative")
        seen: set[frozenset[Literal]] = set()
        unique = []
        for clause in self.clauses:
            if not isinstance(clause, Clause):
                clause = Clause(tuple(clause))
            for lit in clause.literals:
                if lit.var >= self.n:
                    raise FormulaError(f"variable {lit.var} out of range for n={self.n}")
            if clause.key() in seen:
                continue
            seen.add(clause.key())
            unique.append(clause)
        object.__setattr__(self, "clauses", tuple(unique))

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def density(self) -> Fraction:
        return Fraction(self.m, self.n) if self.n else Fraction(0)

    def canonical(self) -> "CnfFormula":
        """Same formula with literals and clauses in sorted order."""
        clauses = [Clause(tuple(sorted(c.literals))) for c in self.clauses]
        clauses.sort(key=lambda c: [(lit.var, lit.sign) for lit in c.literals])
        return CnfFormula(self.n, tuple(clauses))

    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        masks = np.array([c.mask for c in self.clauses], dtype=np.int64)
        patterns = np.array([c.pattern for c in self.clauses], dtype=np.int64)
        return masks, patterns

    def __str__(self) -> str:
        return "{" + ", ".join(str(c) for c in self.clauses) + "}"


@dataclass(frozen=True)
class EnergySpectrum:
    """Number of assignments ``counts[E]`` violating exactly ``E`` clauses."""

    n: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if counts.size == 0 or (counts < 0).any():
            raise ValueError("spectrum counts must be non-empty and non-negative")
        if int(counts.sum()) != 1 << self.n:
            raise ValueError(f"spectrum counts sum to {int(counts.sum())}, expected 2**{self.n}")

    @property
    def m(self) -> int:
        return self.counts.size - 1

    @property
    def solution_count(self) -> int:
        return int(self.counts[0])

    @property
    def min_energy(self) -> int:
        return int(np.flatnonzero(self.counts)[0])

    @property
    def satisfiable(self) -> bool:
        return self.solution_count > 0

    @property
    def levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupied energies and their counts."""
        energies = np.flatnonzero(self.counts)
        return energies, self.counts[energies]

    @property
    def solution_probability(self) -> float:
        """Fraction of assignments that satisfy the formula (P)."""
        return self.solution_count / 2.0**self.n

    @property
    def min_energy_probability(self) -> float:
        """Fraction of assignments attaining the minimum energy (D)."""
        return int(self.counts[self.min_energy]) / 2.0**self.n

    def to_dict(self) -> dict:
        return {"n": self.n, "counts": [int(c) for c in self.counts]}


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"^[+-]?\d+$")
_GROUP = re.compile(r"\[([^\[\]]*)\]")


def _signed_token(tok: object) -> Literal:
    if isinstance(tok, bool):
        raise FormulaError(f"bad literal {tok!r}")
    if isinstance(tok, int):
        return Literal(abs(tok), -1 if tok < 0 else 1)
    text = str(tok).strip().strip("\"'")
    if not _TOKEN.match(text):
        raise FormulaError(f"bad literal {tok!r}")
    return Literal(abs(int(text)), -1 if text.startswith("-") else 1)


def _from_lists(groups: Sequence[Sequence[object]], n: int | None) -> CnfFormula:
    clauses = []
    for group in groups:
        lits = [_signed_token(t) for t in group]
        if len(lits) != 3:
            raise FormulaError(f"clause must have exactly 3 literals, got {len(lits)}")
        clauses.append(Clause(tuple(lits)))
    if n is None:
        n = 1 + max((lit.var for c in clauses for lit in c.literals), default=-1)
    return CnfFormula(n, tuple(clauses))


def _parse_json(text: str) -> CnfFormula:
    stripped = text.strip()
    if stripped.startswith("{") and '"clauses"' in stripped:
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise FormulaError(f"invalid JSON: {exc}") from None
        if not isinstance(obj.get("clauses"), list):
            raise FormulaError("'clauses' must be a list")
        n = obj.get("n")
        if n is not None and (not isinstance(n, int) or n < 0):
            raise FormulaError(f"bad variable count {n!r}")
        return _from_lists(obj["clauses"], n)
    # Bare list (or set-style braces) of clauses.  Tokens are read textually so
    # that "-0" keeps its sign, which a JSON number cannot express.
    if not stripped or stripped[0] not in "[{" or stripped[-1] not in "]}":
        raise FormulaError("expected a list of clauses")
    inner = stripped[1:-1]
    groups = _GROUP.findall(inner)
    leftover = _GROUP.sub("", inner).replace(",", "").strip()
    if leftover:
        raise FormulaError(f"unexpected content outside clauses: {leftover[:30]!r}")
    return _from_lists([[t for t in g.split(",") if t.strip()] for g in groups], None)


def _parse_dimacs(text: str) -> CnfFormula:
    n = declared = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):  # SATLIB trailer
            break
        if line.startswith("p"):
            parts = line.split()
            if n is not None or len(parts) != 4 or parts[1] != "cnf":
                raise FormulaError(f"line {lineno}: bad header {line!r}")
            try:
                n, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise FormulaError(f"line {lineno}: bad header {line!r}") from None
            if n < 0 or declared < 0:
                raise FormulaError(f"line {lineno}: bad header {line!r}")
            continue
        if n is None:
            raise FormulaError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise FormulaError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > n:
                raise FormulaError(f"line {lineno}: variable {abs(lit)} exceeds n={n}")
            else:
                current.append(lit)
    if n is None:
        raise FormulaError("missing 'p cnf' header")
    if current:
        raise FormulaError("last clause is not terminated by 0")
    if len(clauses) != declared:
        raise FormulaError(f"header declares {declared} clauses, found {len(clauses)}")
    out = []
    for lits in clauses:
        if len(lits) != 3:
            raise FormulaError(f"clause {lits} does not have exactly 3 literals")
        out.append(Clause(tuple(Literal(abs(x) - 1, 1 if x > 0 else -1) for x in lits)))
    return CnfFormula(n, tuple(out))


def parse_formula(text: str | bytes, format: str = "dimacs") -> CnfFormula:
    """Parse DIMACS or JSON text into a formula; duplicate clauses collapse."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if format == "dimacs":
        return _parse_dimacs(text)
    if format == "json":
        return _parse_json(text)
    raise FormulaError(f"unknown format {format!r}")


def load_formula(path) -> CnfFormula:
    """Read a formula file, picking the format from its extension."""
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = "json" if str(path).endswith(".json") else "dimacs"
    return parse_formula(data, fmt)


def to_dimacs(formula: CnfFormula, canonical: bool = False) -> str:
    f = formula.canonical() if canonical else formula
    lines = [f"p cnf {f.n} {f.m}"]
    for c in f.clauses:
        lines.append(" ".join(str(lit.sign * (lit.var + 1)) for lit in c.literals) + " 0")
    return "\n".join(lines) + "\n"


def to_json(formula: CnfFormula, canonical: bool = False) -> str:
    f = formula.canonical() if canonical else formula
    clauses = [[str(lit) for lit in c.literals] for c in f.clauses]
    return json.dumps({"n": f.n, "clauses": clauses})


# -- random instances ----------------------------------------------------------


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _random_formula(n: int, d: float, rng: np.random.Generator) -> CnfFormula:
    clauses = []
    for _ in range(round_half_away(n * d)):
        vars_ = rng.choice(n, size=3, replace=False)
        signs = rng.integers(0, 2, size=3) * 2 - 1
        clauses.append(Clause(tuple(Literal(int(v), int(s)) for v, s in zip(vars_, signs))))
    return CnfFormula(n, tuple(clauses))


def generate_random_instance(
    n: int,
    density_range: float | tuple[float, float],
    regime: str = "any",
    seed: int = 0,
    max_resamples: int = 1000,
) -> CnfFormula:
    """Random 3-SAT instance with ``round(n*d)`` clauses before deduplication.

    ``d`` is drawn uniformly from ``density_range`` (a bare number fixes it).
    With ``regime`` set to ``"satisfiable"`` or ``"unsatisfiable"`` whole
    instances are redrawn from fresh child seeds until the exhaustive check
    agrees.
    """
    if n < 3:
        raise ValueError("need at least 3 variables")
    if regime not in ("any", "satisfiable", "unsatisfiable"):
        raise ValueError(f"unknown regime {regime!r}")
    lo, hi = (density_range, density_range) if np.isscalar(density_range) else density_range
    if not 0 < lo <= hi:
        raise ValueError(f"bad density range {density_range!r}")
    root = np.random.SeedSequence(seed)
    for child in root.spawn(max_resamples):
        rng = np.random.default_rng(child)
        d = lo if lo == hi else rng.uniform(lo, hi)
        formula = _random_formula(n, d, rng)
        if regime == "any":
            return formula
        sat = compute_spectrum(formula).satisfiable
        if sat == (regime == "satisfiable"):
            return formula
    raise RuntimeError(
        f"no {regime} instance found in {max_resamples} draws (n={n}, d in {density_range})"
    )


# -- exhaustive evaluation -------------------------------------------------------


def evaluate_energy(formula: CnfFormula, assignment: int) -> int:
    """Number of clauses left unsatisfied by ``assignment``."""
    return sum(1 for c in formula.clauses if assignment & c.mask == c.pattern)


def _energy_blocks(formula: CnfFormula, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    masks, patterns = formula.masks()
    total = 1 << formula.n
    for start in range(0, total, chunk):
        tau = np.arange(start, min(start + chunk, total), dtype=np.int64)
        energy = np.zeros(tau.size, dtype=np.int32)
        for mask, pattern in zip(masks, patterns):
            energy += (tau & mask) == pattern
        yield energy


def _check_cap(formula: CnfFormula, cap: int) -> None:
    if formula.n > cap:
        raise ValueError(f"n={formula.n} exceeds the enumeration cap of {cap}")


def energy_table(formula: CnfFormula, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Energy of every assignment, indexed by assignment."""
    _check_cap(formula, cap)
    return np.concatenate(list(_energy_blocks(formula)))


def compute_spectrum(formula: CnfFormula, cap: int = DEFAULT_ENUMERATION_CAP) -> EnergySpectrum:
    _check_cap(formula, cap)
    counts = np.zeros(formula.m + 1, dtype=np.int64)
    for energy in _energy_blocks(formula):
        counts += np.bincount(energy, minlength=formula.m + 1)
    return EnergySpectrum(formula.n, counts)


def enumerate_solutions(formula: CnfFormula, cap: int = DEFAULT_ENUMERATION_CAP) -> list[int]:
    """All satisfying assignments in ascending order."""
    _check_cap(formula, cap)
    out: list[int] = []
    for block, energy in enumerate(_energy_blocks(formula)):
        out.extend(int(x) + block * _CHUNK for x in np.flatnonzero(energy == 0))
    return out


def bitstring(assignment: int, n: int) -> str:
    """Bitstring with variable 0 leftmost."""
    return "".join("1" if (assignment >> i) & 1 else "0" for i in range(n))


def from_bitstring(bits: str) -> int:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"bad bitstring {bits!r}")
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")


def state_index(assignment: int, n: int) -> int:
    """Decimal value of the bitstring, i.e. variable 0 as most significant bit."""
    return int(bitstring(assignment, n), 2) if n else 0


def formula_from_tokens(clauses: Iterable[Iterable[str]], n: int | None = None) -> CnfFormula:
    """Build a formula from signed string tokens such as ``["-0", "+2", "+3"]``."""
    return _from_lists([list(c) for c in clauses], n)
