import itertools

import numpy as np
import pytest

from gqaoa.cnf import Clause, CnfFormula, Literal, generate_random_instance
from gqaoa.instances import five_qubit, four_qubit


def brute_energy(formula, assignment):
    """Independent clause evaluation straight from the literal definition."""
    bits = [(assignment >> i) & 1 for i in range(formula.n)]
    bad = 0
    for clause in formula.clauses:
        if not any(bits[lit.var] == (1 if lit.sign > 0 else 0) for lit in clause.literals):
            bad += 1
    return bad


def single_clause(n=3):
    return CnfFormula(n, (Clause.of((0, 1), (1, 1), (2, 1)),))


@pytest.fixture
def four():
    return four_qubit()


@pytest.fixture
def five():
    return five_qubit()


@pytest.fixture(scope="session")
def random_formulas():
    out = []
    for i, n in enumerate(itertools.chain(range(3, 9), range(3, 13))):
        out.append(generate_random_instance(n, (1.0, 5.0), "any", seed=1000 + i))
    return out


def random_schedule(rng, p):
    return rng.uniform(0, 2 * np.pi, p), rng.uniform(0, 2 * np.pi, p)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
