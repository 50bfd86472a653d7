import math
import time

import numpy as np
import pytest

from gqaoa.cnf import CnfFormula, compute_spectrum, energy_table, generate_random_instance
from gqaoa.manifold import (AngleSchedule, EffectiveState, ManifoldModel, NormalizationError,
                            angle_grid, apply_round, expected_energy, init_uniform,
                            landscape_grid, read_landscape_csv, run_schedule, success_probability,
                            write_landscape_csv)
from gqaoa.statevector import evolve

from conftest import random_schedule, single_clause


def dense_grover_state(formula, betas, gammas):
    """Reference evolution with explicit 2^n x 2^n matrices."""
    n = formula.n
    dim = 1 << n
    e = energy_table(formula)
    plus = np.full(dim, dim ** -0.5)
    proj = np.outer(plus, plus)
    psi = plus.astype(complex)
    for b, g in zip(betas, gammas):
        psi = np.exp(-1j * g * e) * psi
        mixer = np.eye(dim) + (np.exp(-1j * b) - 1) * proj
        psi = mixer @ psi
    return psi


def test_init_uniform_trivial():
    s = init_uniform(compute_spectrum(CnfFormula(3)))
    assert s.energies.tolist() == [0] and s.counts.tolist() == [8]
    assert s.amplitudes[0] == pytest.approx(1 / math.sqrt(8))


def test_init_uniform_single_clause():
    s = init_uniform(compute_spectrum(single_clause()))
    assert np.allclose(s.amplitudes, 1 / math.sqrt(8))
    assert success_probability(s) == pytest.approx(7 / 8)


def test_init_uniform_normalized(five):
    assert init_uniform(compute_spectrum(five)).norm() == pytest.approx(1.0, abs=1e-12)


def test_beta_zero_keeps_probabilities(five):
    s0 = init_uniform(compute_spectrum(five))
    s1 = apply_round(s0, 0.0, 1.234)
    assert np.allclose(s1.level_probabilities, s0.level_probabilities, atol=1e-15)


def test_gamma_zero_keeps_solution_probability(five):
    s0 = init_uniform(compute_spectrum(five))
    s1 = apply_round(s0, 2.1, 0.0)
    assert success_probability(s1) == pytest.approx(success_probability(s0), abs=1e-15)


def test_single_clause_pi_pi():
    # closed form: a0 = (1 - 2 * 6/8) / sqrt(8) -> probability 7 * (1/4) / 8
    f = single_clause()
    s = apply_round(init_uniform(compute_spectrum(f)), math.pi, math.pi)
    assert success_probability(s) == pytest.approx(7 / 32, abs=1e-14)
    psi = dense_grover_state(f, [math.pi], [math.pi])
    assert (np.abs(psi[1:]) ** 2).sum() == pytest.approx(7 / 32, abs=1e-14)


def test_p_zero_is_uniform(five):
    spec = compute_spectrum(five)
    s = run_schedule(spec, AngleSchedule.single(0, 1.0, 1.0))
    assert success_probability(s) == pytest.approx(spec.solution_probability)


def test_single_pair_equals_repeated_per_round(five):
    spec = compute_spectrum(five)
    a = run_schedule(spec, AngleSchedule.single(2, 0.7, 1.9))
    b = run_schedule(spec, AngleSchedule.per_round([(0.7, 1.9), (0.7, 1.9)]))
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-12)


def test_matches_dense_matrix_oracle(random_formulas):
    rng = np.random.default_rng(5)
    for f in random_formulas:
        if f.n > 9:
            continue
        betas, gammas = random_schedule(rng, 5)
        state = run_schedule(compute_spectrum(f), AngleSchedule.per_round(zip(betas, gammas)))
        probs = state.assignment_probabilities(energy_table(f))
        ref = np.abs(dense_grover_state(f, betas, gammas)) ** 2
        assert np.abs(probs - ref).max() < 1e-10


def test_ten_variable_against_statevector():
    f = generate_random_instance(10, (2.0, 4.5), "satisfiable", seed=99)
    rng = np.random.default_rng(2)
    betas, gammas = random_schedule(rng, 5)
    state = run_schedule(compute_spectrum(f), AngleSchedule.per_round(zip(betas, gammas)))
    table = energy_table(f)
    psi = evolve(table, f.n, betas, gammas, "grover")
    # the manifold amplitude equals every statevector amplitude in that manifold
    for e, a in zip(state.energies, state.amplitudes):
        assert np.abs(psi[table == e] - a).max() < 1e-10


def test_expected_energy_uniform_is_m_over_8(random_formulas):
    for f in random_formulas:
        assert expected_energy(init_uniform(compute_spectrum(f))) == pytest.approx(f.m / 8, abs=1e-12)
    assert expected_energy(init_uniform(compute_spectrum(CnfFormula(4)))) == 0.0


def test_objectives():
    f = generate_random_instance(8, (6.0, 8.0), "unsatisfiable", seed=4)
    spec = compute_spectrum(f)
    s = init_uniform(spec)
    assert success_probability(s, "solutions") == 0.0
    assert success_probability(s, "min_energy") == pytest.approx(spec.min_energy_probability)
    sat = init_uniform(compute_spectrum(single_clause()))
    assert success_probability(sat, "solutions") == success_probability(sat, "min_energy")
    with pytest.raises(ValueError):
        success_probability(sat, "other")


def test_normalization_over_many_rounds(five):
    rng = np.random.default_rng(0)
    s = init_uniform(compute_spectrum(five))
    for b, g in rng.uniform(0, 2 * np.pi, size=(10_000, 2)):
        s = apply_round(s, b, g)
    assert abs(s.norm() - 1.0) < 1e-12


def test_periodicity(five):
    s = init_uniform(compute_spectrum(five))
    a = apply_round(s, 0.4, 1.1)
    b = apply_round(s, 0.4 + 2 * np.pi, 1.1)
    c = apply_round(s, 0.4, 1.1 + 2 * np.pi)
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-13)
    assert np.allclose(a.amplitudes, c.amplitudes, atol=1e-13)


def test_norm_drift_raises():
    bad = EffectiveState(3, np.array([0]), np.array([8]), np.array([0.5 + 0j]))
    with pytest.raises(NormalizationError):
        apply_round(bad, 0.1, 0.2)


def test_schedule_validation_and_reduction():
    s = AngleSchedule.single(3, -0.5, 7.0)
    assert 0 <= s.betas[0] < 2 * np.pi and s.gammas[0] == pytest.approx(7.0 - 2 * np.pi)
    with pytest.raises(ValueError):
        AngleSchedule(2, "per_round", (0.1,), (0.2,))
    with pytest.raises(ValueError):
        AngleSchedule(-1, "single_pair", (0.1,), (0.2,))
    assert AngleSchedule.from_dict(s.to_dict()) == s


def test_mirror_schedule_same_statistics(five):
    spec = compute_spectrum(five)
    s = AngleSchedule.per_round([(0.3, 1.2), (2.0, 0.4)])
    a = run_schedule(spec, s)
    b = run_schedule(spec, s.conjugate())
    assert np.allclose(a.level_probabilities, b.level_probabilities, atol=1e-13)
    assert s.canonical().gammas[0] <= s.conjugate().canonical().gammas[0] + 1e-15


def test_model_matches_reference_path(five):
    spec = compute_spectrum(five)
    model = ManifoldModel(spec)
    rng = np.random.default_rng(8)
    betas, gammas = random_schedule(rng, 4)
    ref = expected_energy(run_schedule(spec, AngleSchedule.per_round(zip(betas, gammas))))
    assert model.schedule_cost(betas, gammas) == pytest.approx(ref, abs=1e-12)
    pts = model.point_costs(3, betas, gammas)
    for b, g, c in zip(betas, gammas, pts):
        ref = expected_energy(run_schedule(spec, AngleSchedule.single(3, b, g)))
        assert c == pytest.approx(ref, abs=1e-12)


def test_landscape_edges_exact(random_formulas):
    grid = angle_grid(np.pi / 18)
    for f in random_formulas[:6]:
        for p in (1, 3):
            land = landscape_grid(compute_spectrum(f), p, grid, grid)
            assert land.shape == (36, 36)
            assert np.abs(land[0] - f.m / 8).max() < 1e-12
            assert np.abs(land[:, 0] - f.m / 8).max() < 1e-12


def test_angle_grid():
    g = angle_grid()
    assert g.size == 360 and g[0] == 0 and g[-1] < 2 * np.pi
    assert angle_grid(np.pi / 18).size == 36


def test_landscape_csv_roundtrip(tmp_path, five):
    grid = angle_grid(np.pi / 9)
    land = landscape_grid(compute_spectrum(five), 2, grid, grid)
    path = tmp_path / "l.csv"
    write_landscape_csv(path, grid, grid, land)
    assert path.read_text().startswith("beta\\gamma,")
    b, g, l2 = read_landscape_csv(path)
    assert np.array_equal(b, grid) and np.array_equal(g, grid) and np.array_equal(l2, land)


def test_state_json(five):
    s = init_uniform(compute_spectrum(five))
    rows = __import__("json").loads(s.to_json())
    assert [r[0] for r in rows] == s.energies.tolist()


def test_round_cost_linear_in_p():
    spec = compute_spectrum(generate_random_instance(12, 4.0, seed=1))
    model = ManifoldModel(spec)
    b = np.full(2000, 0.3)
    g = np.full(2000, 0.7)
    model.point_costs(1, b, g)  # compile

    def timed(p):
        t = time.perf_counter()
        model.point_costs(p, b, g)
        return time.perf_counter() - t

    short, long = min(timed(20) for _ in range(3)), min(timed(200) for _ in range(3))
    assert long < 10 * short * 3  # 10x rounds, generous slack against timer noise
