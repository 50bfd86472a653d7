import math

import numpy as np
import pytest

from gqaoa.cnf import Clause, CnfFormula, energy_table, generate_random_instance
from gqaoa.compiler import (Gate, GateList, apply_gates, cost_report, emit_circuit_text,
                            grover_iterations, lower_grover_mixer, lower_problem_unitary,
                            lower_round, lower_x_mixer, parse_circuit_text,
                            problem_unitary_matrix, same_up_to_phase)

from conftest import single_clause


def round_unitary(formula, beta, gamma, mixer):
    """Dense e^{-i beta H_M} e^{-i gamma H_P} built from its definition."""
    n = formula.n
    dim = 1 << n
    phase = np.diag(np.exp(-1j * gamma * energy_table(formula)))
    if mixer == "grover":
        plus = np.full(dim, dim ** -0.5)
        mix = np.eye(dim) + (np.exp(-1j * beta) - 1) * np.outer(plus, plus)
    else:
        one = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])
        mix = np.array([[1.0]])
        for _ in range(n):
            mix = np.kron(one, mix)
    return mix @ phase


def test_empty_formula_gives_empty_list():
    assert len(lower_problem_unitary(CnfFormula(4), 0.3)) == 0


def test_single_clause_six_entangling():
    assert lower_problem_unitary(single_clause(), 0.3).entangling_count() == 6


def test_problem_unitary_diagonal_four_qubit(four):
    gamma = 1.234
    u, leak = problem_unitary_matrix(lower_problem_unitary(four, gamma))
    assert leak == 0.0
    assert np.allclose(u - np.diag(np.diag(u)), 0, atol=1e-12)
    assert same_up_to_phase(np.diag(u), np.exp(-1j * gamma * energy_table(four)), 1e-9)


def test_mixer_n3_structure():
    g = lower_grover_mixer(3, 0.5)
    assert g.num_ancillas == 0
    kinds = [x.kind for x in g.gates]
    assert kinds == ["H"] * 3 + ["X"] * 3 + ["CCZ_PHASE"] + ["X"] * 3 + ["H"] * 3
    assert g.entangling_count() == 5


def test_mixer_n5_counts():
    g = lower_grover_mixer(5, 0.5)
    assert g.num_ancillas == 2
    assert g.entangling_count() == 25


def test_mixer_requires_three_qubits():
    with pytest.raises(ValueError):
        lower_grover_mixer(2, 0.1)


@pytest.mark.parametrize("n", range(3, 9))
def test_mixer_unitary_and_clean_ancillas(n):
    beta = 0.37 * n
    u, leak = problem_unitary_matrix(lower_grover_mixer(n, beta))
    dim = 1 << n
    plus = np.full(dim, dim ** -0.5)
    ref = np.eye(dim) + (np.exp(-1j * beta) - 1) * np.outer(plus, plus)
    assert leak < 1e-12
    assert same_up_to_phase(u, ref, 1e-9)


@pytest.mark.parametrize("mixer", ["grover", "transverse_x"])
def test_round_unitary_small_n(mixer):
    rng = np.random.default_rng(7)
    for n in range(3, 9):
        f = generate_random_instance(n, (1.0, 4.0), seed=n)
        beta, gamma = rng.uniform(0, 2 * np.pi, 2)
        u, leak = problem_unitary_matrix(lower_round(f, beta, gamma, mixer))
        assert leak < 1e-12
        assert same_up_to_phase(u, round_unitary(f, beta, gamma, mixer), 1e-9)


def test_x_mixer_has_no_entanglers():
    assert lower_x_mixer(6, 0.3).entangling_count() == 0


def test_count_formulas_exhaustive():
    # constructed gate lists against the closed forms, n in [3, 30], m in [0, 200]
    clause = Clause.of((0, 1), (1, -1), (2, 1))
    per_clause = lower_problem_unitary(CnfFormula(3, (clause,)), 0.1).entangling_count()
    assert per_clause == 6
    for n in range(3, 31):
        mixer = lower_grover_mixer(n, 0.2)
        assert mixer.entangling_count() == 5 * (2 * n - 5)
        assert mixer.num_ancillas == n - 3
        for m in range(0, 201):
            x = cost_report("x_qaoa", n, m, rounds=1)
            g = cost_report("g_qaoa", n, m, rounds=1)
            assert x.entangling_per_round == m * per_clause == 6 * m
            assert g.entangling_per_round == m * per_clause + mixer.entangling_count()
            assert g.ancillas == n - 3 and x.ancillas == 0
            assert cost_report("grover_baseline", n, m, P=0.25).ancillas == 2 * m


def test_full_round_gate_list_count():
    f = generate_random_instance(9, 3.0, seed=1)
    gates = lower_round(f, 0.1, 0.2)
    assert gates.entangling_count() == cost_report("g_qaoa", f.n, f.m, rounds=1).entangling_per_round


def test_cost_report_examples():
    assert cost_report("x_qaoa", 4, 8, rounds=2).entangling_total == 96
    assert cost_report("g_qaoa", 5, 8, rounds=1).entangling_total == 73
    gb = cost_report("grover_baseline", 12, 10, P=0.25)
    assert gb.entangling_per_round == 500 and gb.ancillas == 20 and gb.rounds == 1
    assert gb.estimate and not cost_report("x_qaoa", 4, 8, rounds=1).estimate
    assert grover_iterations(1 / 1024) == math.ceil(math.pi / 8 * 32)


@pytest.mark.parametrize("kwargs", [
    dict(algorithm="grover_baseline", n=5, m=3, P=0.0),
    dict(algorithm="grover_baseline", n=5, m=3, P=1.5),
    dict(algorithm="grover_baseline", n=5, m=3),
    dict(algorithm="x_qaoa", n=5, m=3),
    dict(algorithm="g_qaoa", n=2, m=3, rounds=1),
    dict(algorithm="other", n=5, m=3, rounds=1),
])
def test_cost_report_errors(kwargs):
    with pytest.raises(ValueError):
        cost_report(**kwargs)


def test_text_empty_list_is_header_only():
    text = emit_circuit_text(GateList(3))
    assert text.splitlines() == ["# gqaoa circuit v1", "qubits 3 ancillas 0"]
    assert parse_circuit_text(text).gates == []


def test_text_roundtrip_four_qubit_round(four):
    gates = lower_round(four, 0.77, 2.31)
    again = parse_circuit_text(emit_circuit_text(gates))
    assert again.gates == gates.gates
    assert (again.num_problem, again.num_ancillas) == (4, 1)


def test_text_parse_errors():
    with pytest.raises(ValueError):
        parse_circuit_text("H 0\n")
    with pytest.raises(ValueError):
        parse_circuit_text("qubits 2 ancillas 0\nFOO 0\n")
    with pytest.raises(ValueError):
        parse_circuit_text("qubits 2 ancillas 0\nCNOT 0 5\n")


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("ZZ", (0, 0), 0.1)
    with pytest.raises(ValueError):
        Gate("RZ", (0,))
    with pytest.raises(ValueError):
        Gate("H", (0,), 0.3)


def test_apply_gates_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        apply_gates(lower_x_mixer(3, 0.1), np.zeros((4, 1)))
