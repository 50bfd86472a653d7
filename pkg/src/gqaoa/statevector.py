"""Full statevector simulation of Grover-mixer and transverse-field QAOA.

Amplitude ``k`` belongs to assignment ``k`` (bit ``i`` of ``k`` is variable
``i``).  Files written for people use the bitstring convention instead:
variable 0 is the leftmost character, so the decimal "state index" treats
variable 0 as the most significant bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cnf import CnfFormula, bitstring, energy_table, from_bitstring, state_index
from .manifold import AngleSchedule

DEFAULT_MAX_QUBITS = 20
MIXERS = ("grover", "transverse_x")


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class OutputDistribution:
    """Probabilities per assignment, plus raw counts when sampled."""

    n: int
    probabilities: np.ndarray
    counts: np.ndarray | None = None

    @property
    def shots(self) -> int:
        return 0 if self.counts is None else int(self.counts.sum())

    def mass(self, assignments: Sequence[int]) -> float:
        return float(self.probabilities[np.asarray(assignments, dtype=np.int64)].sum())

    @classmethod
    def from_counts(cls, n: int, counts: np.ndarray) -> "OutputDistribution":
        counts = np.asarray(counts, dtype=np.int64)
        total = counts.sum()
        if total <= 0:
            raise ValueError("no shots recorded")
        return cls(n, counts / total, counts)


def _apply_x_mixer(psi: np.ndarray, n: int, beta) -> np.ndarray:
    """exp(-i*beta*X) on every qubit.

    ``psi`` may carry leading batch axes, in which case ``beta`` is an array
    with one angle per batch row.
    """
    batch = psi.shape[:-1]
    beta = np.asarray(beta, dtype=float).reshape(batch + (1, 1, 1))
    c, s = np.cos(beta), -1j * np.sin(beta)
    for q in range(n):
        t = psi.reshape(batch + (1 << (n - q - 1), 2, 1 << q))
        psi = (c * t + s * t[..., ::-1, :]).reshape(batch + (-1,))
    return psi


def _apply_grover_mixer(psi: np.ndarray, beta: float) -> np.ndarray:
    # <+|psi>|+> is the mean amplitude on every basis state
    return psi + (np.exp(-1j * beta) - 1.0) * psi.mean(axis=-1, keepdims=True)


def evolve(energies: np.ndarray, n: int, betas, gammas, mixer: str) -> np.ndarray:
    """Raw evolution from |+> given the energy of every assignment."""
    if mixer not in MIXERS:
        raise ValueError(f"unknown mixer {mixer!r}")
    distinct = np.unique(energies)
    psi = np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)
    for beta, gamma in zip(betas, gammas):
        lookup = np.zeros(int(distinct[-1]) + 1, dtype=complex)
        lookup[distinct] = np.exp(-1j * gamma * distinct)
        psi = psi * lookup[energies]
        if mixer == "grover":
            psi = _apply_grover_mixer(psi, beta)
        else:
            psi = _apply_x_mixer(psi, n, beta)
    return psi


def simulate(formula: CnfFormula, schedule: AngleSchedule, mixer: str = "grover",
             max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    if formula.n > max_qubits:
        raise ValueError(f"n={formula.n} exceeds the statevector cap of {max_qubits}")
    betas, gammas = schedule.arrays()
    psi = evolve(energy_table(formula), formula.n, betas, gammas, mixer)
    return StateVector(formula.n, psi)


def exact_distribution(state: StateVector) -> OutputDistribution:
    return OutputDistribution(state.n, np.abs(state.amplitudes) ** 2)


def sample(dist: OutputDistribution, shots: int, seed: int = 0) -> OutputDistribution:
    """Draw ``shots`` measurements by inverse-CDF lookup."""
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.probabilities)
    idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    idx = np.minimum(idx, cdf.size - 1)
    counts = np.bincount(idx, minlength=cdf.size)
    return OutputDistribution.from_counts(dist.n, counts)


class StatevectorModel:
    """Cost evaluator for the optimizer backed by full statevectors."""

    def __init__(self, formula: CnfFormula, mixer: str = "grover",
                 max_qubits: int = DEFAULT_MAX_QUBITS):
        if formula.n > max_qubits:
            raise ValueError(f"n={formula.n} exceeds the statevector cap of {max_qubits}")
        if mixer not in MIXERS:
            raise ValueError(f"unknown mixer {mixer!r}")
        self.formula = formula
        self.mixer = mixer
        self.n = formula.n
        self.energies = energy_table(formula)
        self.min_energy = int(self.energies.min())

    def _batch(self, p: int, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        """Final states for many single-pair schedules at once; shape (k, 2**n)."""
        psi = np.full((betas.size, 1 << self.n), 2.0 ** (-self.n / 2), dtype=complex)
        phase = np.exp(-1j * np.outer(gammas, self.energies))
        for _ in range(p):
            psi = psi * phase
            if self.mixer == "grover":
                psi = psi + (np.exp(-1j * betas) - 1.0)[:, None] * psi.mean(axis=1, keepdims=True)
            else:
                psi = _apply_x_mixer(psi, self.n, betas)
        return psi

    def point_costs(self, p: int, betas: np.ndarray, gammas: np.ndarray,
                    batch: int = 4096) -> np.ndarray:
        betas, gammas = np.asarray(betas, float), np.asarray(gammas, float)
        out = np.empty(betas.size)
        for start in range(0, betas.size, batch):
            sl = slice(start, start + batch)
            probs = np.abs(self._batch(p, betas[sl], gammas[sl])) ** 2
            out[sl] = probs @ self.energies
        return out

    def grid_costs(self, p: int, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
        bb, gg = np.meshgrid(np.asarray(betas, float), np.asarray(gammas, float), indexing="ij")
        return self.point_costs(p, bb.ravel(), gg.ravel()).reshape(bb.shape)

    def _state(self, betas, gammas) -> np.ndarray:
        return evolve(self.energies, self.n, betas, gammas, self.mixer)

    def schedule_cost(self, betas, gammas) -> float:
        return float(np.abs(self._state(betas, gammas)) ** 2 @ self.energies)

    def success(self, betas, gammas, objective: str) -> float:
        if objective == "solutions":
            target = 0
        elif objective == "min_energy":
            target = self.min_energy
        else:
            raise ValueError(f"unknown objective {objective!r}")
        probs = np.abs(self._state(betas, gammas)) ** 2
        return float(probs[self.energies == target].sum())

    def baseline(self, objective: str) -> float:
        return self.success([], [], objective)


# -- file formats ------------------------------------------------------------------


def counts_to_json(dist: OutputDistribution) -> str:
    if dist.counts is None:
        raise ValueError("distribution carries no counts")
    return json.dumps({bitstring(i, dist.n): int(c)
                       for i, c in enumerate(dist.counts) if c > 0}, sort_keys=True)


def counts_from_json(text: str | bytes, n: int) -> OutputDistribution:
    """Read a bitstring -> count map (variable 0 leftmost)."""
    data = json.loads(text)
    if not isinstance(data, dict) or not data:
        raise ValueError("count file is empty or not a JSON object")
    counts = np.zeros(1 << n, dtype=np.int64)
    for bits, count in data.items():
        if len(bits) != n:
            raise ValueError(f"bitstring {bits!r} has width {len(bits)}, expected {n}")
        if not isinstance(count, int) or count < 0:
            raise ValueError(f"bad count {count!r} for {bits!r}")
        counts[from_bitstring(bits)] += count
    return OutputDistribution.from_counts(n, counts)


def write_distribution_csv(path, dist: OutputDistribution) -> None:
    rows = sorted((state_index(i, dist.n), float(p)) for i, p in enumerate(dist.probabilities))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_index", "probability"])
        for idx, prob in rows:
            w.writerow([idx, repr(prob)])
