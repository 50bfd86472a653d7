"""Exact Grover-mixer QAOA in the space of energy manifolds.

The Grover mixer ``|+><+|`` and the diagonal cost unitary both treat all
assignments of equal energy alike, so starting from ``|+>`` every basis
state in a manifold keeps the same amplitude.  One complex number per
occupied energy level is therefore a complete description of the state,
and a round costs O(L) for L occupied levels.

Kernels work with amplitudes rescaled by ``2**(n/2)`` (uniform state = 1)
and level weights ``c_E / 2**n``; the public types store true amplitudes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .cnf import EnergySpectrum

TWO_PI = 2.0 * math.pi
NORM_TOLERANCE = 1e-9


class NormalizationError(RuntimeError):
    """State norm drifted beyond tolerance; indicates a simulation bug."""


def reduce_angle(x: float) -> float:
    r = float(x) % TWO_PI
    return 0.0 if r >= TWO_PI else r


@dataclass(frozen=True)
class AngleSchedule:
    """QAOA angles: one (beta, gamma) pair reused ``p`` times, or ``p`` pairs."""

    p: int
    mode: str
    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError("round count must be non-negative")
        if self.mode not in ("single_pair", "per_round"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        expected = 1 if self.mode == "single_pair" else self.p
        if len(self.betas) != expected or len(self.gammas) != expected:
            raise ValueError(f"{self.mode} schedule with p={self.p} needs {expected} angle pairs")
        object.__setattr__(self, "betas", tuple(reduce_angle(b) for b in self.betas))
        object.__setattr__(self, "gammas", tuple(reduce_angle(g) for g in self.gammas))

    @classmethod
    def single(cls, p: int, beta: float, gamma: float) -> "AngleSchedule":
        return cls(p, "single_pair", (beta,), (gamma,))

    @classmethod
    def per_round(cls, pairs: Sequence[tuple[float, float]]) -> "AngleSchedule":
        pairs = list(pairs)
        return cls(len(pairs), "per_round", tuple(b for b, _ in pairs), tuple(g for _, g in pairs))

    def rounds(self) -> list[tuple[float, float]]:
        if self.mode == "single_pair":
            return [(self.betas[0], self.gammas[0])] * self.p
        return list(zip(self.betas, self.gammas))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-round beta and gamma arrays of length ``p``."""
        rounds = self.rounds()
        return (np.array([b for b, _ in rounds], dtype=float),
                np.array([g for _, g in rounds], dtype=float))

    def conjugate(self) -> "AngleSchedule":
        """Mirror schedule (-beta, -gamma); yields the complex-conjugate state."""
        return AngleSchedule(self.p, self.mode,
                             tuple(-b for b in self.betas), tuple(-g for g in self.gammas))

    def canonical(self) -> "AngleSchedule":
        """Of the schedule and its mirror, the one with the smaller first gamma.

        Both give identical measurement statistics, so this only fixes which
        representative gets reported.
        """
        if not self.gammas:
            return self
        mirror = self.conjugate()
        return mirror if (mirror.gammas[0], mirror.betas[0]) < (self.gammas[0], self.betas[0]) else self

    def to_dict(self) -> dict:
        return {"p": self.p, "mode": self.mode, "betas": list(self.betas), "gammas": list(self.gammas)}

    @classmethod
    def from_dict(cls, d: dict) -> "AngleSchedule":
        return cls(int(d["p"]), d["mode"], tuple(d["betas"]), tuple(d["gammas"]))


@dataclass(frozen=True)
class EffectiveState:
    """Amplitude shared by every assignment of each occupied energy level."""

    n: int
    energies: np.ndarray
    counts: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        for name in ("energies", "counts", "amplitudes"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def level_probabilities(self) -> np.ndarray:
        return self.counts * np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(self.level_probabilities.sum())

    def assignment_probabilities(self, energy_table: np.ndarray) -> np.ndarray:
        """Probability of each assignment, given the energy of every assignment."""
        lookup = np.zeros(int(energy_table.max(initial=0)) + 1)
        lookup[self.energies] = np.abs(self.amplitudes) ** 2
        return lookup[energy_table]

    def to_json(self) -> str:
        return json.dumps([[int(e), int(c), float(a.real), float(a.imag)]
                           for e, c, a in zip(self.energies, self.counts, self.amplitudes)])


def _check_norm(state: EffectiveState) -> EffectiveState:
    drift = abs(state.norm() - 1.0)
    if drift > NORM_TOLERANCE:
        raise NormalizationError(f"state norm drifted by {drift:.3e}")
    return state


def init_uniform(spectrum: EnergySpectrum) -> EffectiveState:
    energies, counts = spectrum.levels
    amps = np.full(energies.size, 2.0 ** (-spectrum.n / 2), dtype=complex)
    return EffectiveState(spectrum.n, energies, counts, amps)


def apply_round(state: EffectiveState, beta: float, gamma: float) -> EffectiveState:
    """Phase by exp(-i*gamma*H_P), then mix by exp(-i*beta*|+><+|)."""
    a = state.amplitudes * np.exp(-1j * gamma * state.energies)
    overlap = np.dot(state.counts, a) * 2.0 ** (-state.n)
    a = a + (np.exp(-1j * beta) - 1.0) * overlap
    return _check_norm(EffectiveState(state.n, state.energies, state.counts, a))


def run_schedule(spectrum: EnergySpectrum, schedule: AngleSchedule) -> EffectiveState:
    state = init_uniform(spectrum)
    for beta, gamma in schedule.rounds():
        state = apply_round(state, beta, gamma)
    return state


def expected_energy(state: EffectiveState) -> float:
    return float(np.dot(state.level_probabilities, state.energies))


def success_probability(state: EffectiveState, objective: str = "solutions") -> float:
    """Weight on the solutions (energy 0) or on the lowest occupied level."""
    if objective == "solutions":
        if state.energies.size == 0 or state.energies[0] != 0:
            return 0.0
        level = 0
    elif objective == "min_energy":
        level = 0
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return float(state.counts[level] * abs(state.amplitudes[level]) ** 2)


# -- compiled kernels ------------------------------------------------------------


@numba.njit(cache=True)
def _evolve(energies, weights, betas, gammas):
    L = energies.size
    b = np.ones(L, dtype=np.complex128)
    for k in range(betas.size):
        alpha = np.exp(-1j * betas[k]) - 1.0
        s = 0j
        for l in range(L):
            b[l] *= np.exp(-1j * gammas[k] * energies[l])
            s += weights[l] * b[l]
        s *= alpha
        for l in range(L):
            b[l] += s
    return b


@numba.njit(cache=True)
def _single_pair_energy(energies, weights, p, beta, gamma, phase, b):
    L = energies.size
    alpha = np.exp(-1j * beta) - 1.0
    for l in range(L):
        phase[l] = np.exp(-1j * gamma * energies[l])
        b[l] = 1.0
    for _ in range(p):
        s = 0j
        for l in range(L):
            b[l] *= phase[l]
            s += weights[l] * b[l]
        s *= alpha
        for l in range(L):
            b[l] += s
    e = 0.0
    for l in range(L):
        e += weights[l] * (b[l].real * b[l].real + b[l].imag * b[l].imag) * energies[l]
    return e


@numba.njit(cache=True)
def _grid_energy(energies, weights, p, betas, gammas):
    L = energies.size
    out = np.empty((betas.size, gammas.size))
    phase = np.empty(L, dtype=np.complex128)
    b = np.empty(L, dtype=np.complex128)
    for i in range(betas.size):
        for j in range(gammas.size):
            out[i, j] = _single_pair_energy(energies, weights, p, betas[i], gammas[j], phase, b)
    return out


@numba.njit(cache=True)
def _points_energy(energies, weights, p, betas, gammas):
    L = energies.size
    out = np.empty(betas.size)
    phase = np.empty(L, dtype=np.complex128)
    b = np.empty(L, dtype=np.complex128)
    for i in range(betas.size):
        out[i] = _single_pair_energy(energies, weights, p, betas[i], gammas[i], phase, b)
    return out


class ManifoldModel:
    """Cost evaluator over a spectrum, used by the optimizer."""

    def __init__(self, spectrum: EnergySpectrum):
        self.spectrum = spectrum
        self.n = spectrum.n
        energies, counts = spectrum.levels
        self.energies = energies.astype(float)
        self.weights = counts / 2.0**spectrum.n

    def grid_costs(self, p: int, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        return _grid_energy(self.energies, self.weights, p,
                            np.asarray(betas, float), np.asarray(gammas, float))

    def point_costs(self, p: int, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        return _points_energy(self.energies, self.weights, p,
                              np.asarray(betas, float), np.asarray(gammas, float))

    def _amplitudes(self, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        return _evolve(self.energies, self.weights,
                       np.asarray(betas, float), np.asarray(gammas, float))

    def schedule_cost(self, betas: np.ndarray, gammas: np.ndarray) -> float:
        b = self._amplitudes(betas, gammas)
        return float(np.dot(self.weights * (b.real**2 + b.imag**2), self.energies))

    def success(self, betas: np.ndarray, gammas: np.ndarray, objective: str) -> float:
        if objective == "solutions" and self.energies[0] != 0:
            return 0.0
        if objective not in ("solutions", "min_energy"):
            raise ValueError(f"unknown objective {objective!r}")
        b = self._amplitudes(betas, gammas)
        return float(self.weights[0] * abs(b[0]) ** 2)

    def baseline(self, objective: str) -> float:
        """Success probability of the uniform state."""
        return self.success(np.empty(0), np.empty(0), objective)


def angle_grid(spacing: float = math.pi / 180) -> np.ndarray:
    """Uniform grid over [0, 2*pi) with the given spacing."""
    count = int(round(TWO_PI / spacing))
    return np.arange(count) * (TWO_PI / count)


def landscape_grid(spectrum: EnergySpectrum, p: int,
                   betas: np.ndarray | None = None,
                   gammas: np.ndarray | None = None) -> np.ndarray:
    """Expected energy of the single-pair schedule; rows beta, columns gamma."""
    betas = angle_grid() if betas is None else np.asarray(betas, float)
    gammas = angle_grid() if gammas is None else np.asarray(gammas, float)
    return ManifoldModel(spectrum).grid_costs(p, betas, gammas)


def write_landscape_csv(path, betas, gammas, grid) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta\\gamma"] + [repr(float(g)) for g in gammas])
        for beta, row in zip(betas, grid):
            w.writerow([repr(float(beta))] + [repr(float(v)) for v in row])


def read_landscape_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    gammas = np.array([float(x) for x in rows[0][1:]])
    betas = np.array([float(r[0]) for r in rows[1:]])
    grid = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return betas, gammas, grid
