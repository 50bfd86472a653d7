import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gqaoa.cnf import (Clause, CnfFormula, FormulaError, Literal, bitstring, compute_spectrum,
                       energy_table, enumerate_solutions, evaluate_energy, from_bitstring,
                       generate_random_instance, parse_formula, round_half_away, state_index,
                       to_dimacs, to_json)
from gqaoa.instances import FOUR_QUBIT_TEXT

from conftest import brute_energy, single_clause


# -- parsing ---------------------------------------------------------------------


def test_minimal_dimacs():
    f = parse_formula(b"p cnf 3 1\n1 2 3 0")
    assert f.n == 3 and f.m == 1
    assert f.clauses[0].literals == (Literal(0, 1), Literal(1, 1), Literal(2, 1))


def test_footnote_four_qubit_json():
    text = "[[-0,+2,+3],[+0,+2,-3],[-1,+2,-3],[-1,-2,-3],[-1,-2,+3],[+1,+2,-3],[+0,+2,+3],[-0,+1,-3]]"
    f = parse_formula(text, "json")
    assert (f.n, f.m) == (4, 8)
    assert f.clauses[0].literals[0] == Literal(0, -1)
    assert f == parse_formula(FOUR_QUBIT_TEXT, "json")


def test_duplicate_clauses_collapse():
    f = parse_formula("p cnf 3 2\n1 2 3 0\n1 2 3 0\n")
    assert f.m == 1


def test_duplicates_are_set_equal_not_order_equal():
    f = parse_formula("p cnf 3 2\n1 2 3 0\n3 1 2 0\n")
    assert f.m == 1


def test_json_object_form_with_explicit_n():
    f = parse_formula('{"n": 6, "clauses": [["-0", "+2", "+3"]]}', "json")
    assert f.n == 6 and f.clauses[0].literals[0].sign == -1


@pytest.mark.parametrize("text", [
    "p cnf 3 1\n1 2 0",                 # clause of length 2
    "p cnf 3 1\n1 1 2 0",               # repeated variable
    "p cnf 3 1\n1 2 4 0",               # variable out of range
    "1 2 3 0",                          # no header
    "p cnf 3 2\n1 2 3 0",               # clause count mismatch
    "p cnf 3 1\n1 2 x 0",               # bad token
    "p cnf 3 1\n1 2 3",                 # unterminated
])
def test_dimacs_errors(text):
    with pytest.raises(FormulaError):
        parse_formula(text)


@pytest.mark.parametrize("text", ["[[0, 1]]", "[[0, 0, 1]]", "oops", '{"clauses": 3}'])
def test_json_errors(text):
    with pytest.raises(FormulaError):
        parse_formula(text, "json")


def test_clause_requires_distinct_variables():
    with pytest.raises(FormulaError):
        Clause.of((0, 1), (0, -1), (2, 1))


def test_formula_range_check():
    with pytest.raises(FormulaError):
        CnfFormula(2, (Clause.of((0, 1), (1, 1), (2, 1)),))


def test_roundtrip_serializations(random_formulas):
    for f in random_formulas:
        assert parse_formula(to_dimacs(f)) == f
        assert parse_formula(to_json(f), "json") == f
        assert parse_formula(to_dimacs(f, canonical=True)) == f.canonical()


# -- generation --------------------------------------------------------------------


def test_rounding_rule():
    assert round_half_away(42.6) == 43
    assert round_half_away(2.5) == 3
    assert round_half_away(-2.5) == -3
    assert round_half_away(40.0) == 40


def test_generator_clause_count_fixed_density():
    f = generate_random_instance(10, 4.0, seed=3)
    assert f.m <= 40
    assert all(len({lit.var for lit in c.literals}) == 3 for c in f.clauses)
    f = generate_random_instance(10, 4.26, seed=3)
    assert f.m <= 43


def test_generator_counts_before_dedup(monkeypatch):
    import gqaoa.cnf as cnf
    seen = []
    orig = cnf.CnfFormula

    class Spy(orig):
        def __post_init__(self):
            seen.append(len(self.clauses))
            super().__post_init__()

    monkeypatch.setattr(cnf, "CnfFormula", Spy)
    cnf.generate_random_instance(10, 4.26, seed=11)
    assert seen[0] == 43


def test_generator_satisfiable_regime():
    f = generate_random_instance(8, (2.0, 4.5), "satisfiable", seed=7)
    assert compute_spectrum(f).solution_count >= 1


def test_generator_unsatisfiable_regime():
    f = generate_random_instance(6, (6.0, 8.0), "unsatisfiable", seed=7)
    assert compute_spectrum(f).solution_count == 0


def test_generator_deterministic():
    a = generate_random_instance(9, (2.0, 4.5), "satisfiable", seed=42)
    b = generate_random_instance(9, (2.0, 4.5), "satisfiable", seed=42)
    assert a == b
    assert a != generate_random_instance(9, (2.0, 4.5), "satisfiable", seed=43)


def test_generator_unattainable_regime():
    with pytest.raises(RuntimeError):
        generate_random_instance(3, 0.34, "unsatisfiable", seed=0, max_resamples=5)


@pytest.mark.parametrize("args", [(2, 3.0), (5, (0.0, 1.0)), (5, (3.0, 2.0))])
def test_generator_bad_inputs(args):
    with pytest.raises(ValueError):
        generate_random_instance(*args)


# -- evaluation ---------------------------------------------------------------------


def test_energy_single_clause():
    f = single_clause()
    assert evaluate_energy(f, 0b000) == 1
    assert evaluate_energy(f, from_bitstring("100")) == 0


def test_energy_table_matches_brute_force(random_formulas):
    for f in random_formulas:
        table = energy_table(f)
        ref = [brute_energy(f, a) for a in range(1 << f.n)]
        assert table.tolist() == ref
        assert all(evaluate_energy(f, a) == ref[a] for a in range(0, 1 << f.n, 7))


def test_four_qubit_solutions(four):
    sols = enumerate_solutions(four)
    ref = [a for a in range(16) if brute_energy(four, a) == 0]
    assert sols == ref and sols
    assert all(evaluate_energy(four, a) == 0 for a in sols)


def test_spectrum_trivial_cases():
    assert compute_spectrum(CnfFormula(3)).counts.tolist() == [8]
    assert compute_spectrum(single_clause()).counts.tolist() == [7, 1]
    assert enumerate_solutions(CnfFormula(3)) == list(range(8))
    assert len(enumerate_solutions(single_clause())) == 7


def test_five_qubit_spectrum(five):
    s = compute_spectrum(five)
    ref = np.bincount([brute_energy(five, a) for a in range(32)], minlength=five.m + 1)
    assert s.counts.tolist() == ref.tolist()
    assert s.counts.sum() == 32


def test_spectrum_invariants(random_formulas):
    for f in random_formulas:
        s = compute_spectrum(f)
        assert s.counts.sum() == 2**f.n
        # every clause is falsified by exactly 2**(n-3) assignments
        assert int(np.dot(np.arange(f.m + 1), s.counts)) == f.m * 2 ** (f.n - 3)
        assert (s.min_energy == 0) == s.satisfiable
        assert s.solution_probability == s.counts[0] / 2**f.n


def test_enumeration_cap():
    f = CnfFormula(12)
    with pytest.raises(ValueError):
        compute_spectrum(f, cap=10)
    with pytest.raises(ValueError):
        enumerate_solutions(f, cap=10)


def test_absent_variable_doubles_solutions():
    base = single_clause(3)
    wider = CnfFormula(4, base.clauses)
    assert len(enumerate_solutions(wider)) == 2 * len(enumerate_solutions(base))


def test_bit_conventions():
    assert bitstring(0b001, 3) == "100"
    assert from_bitstring("100") == 1
    assert state_index(0b001, 3) == 4
    with pytest.raises(ValueError):
        from_bitstring("102")


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.lists(st.tuples(st.permutations(range(8)),
                                             st.lists(st.sampled_from([1, -1]), min_size=3,
                                                      max_size=3)), max_size=12),
       st.data())
def test_energy_bounds_property(n, raw, data):
    clauses = [Clause(tuple(Literal(v % n, s) for v, s in zip(perm[:3], signs)))
               for perm, signs in raw if len({v % n for v in perm[:3]}) == 3]
    f = CnfFormula(n, tuple(clauses))
    a = data.draw(st.integers(0, 2**n - 1))
    e = evaluate_energy(f, a)
    assert 0 <= e <= f.m
    assert e == brute_energy(f, a)
    assert parse_formula(to_dimacs(f)) == f
