"""Fair-sampling metrics for a distribution over assignments.

Two numbers per distribution: the expected number of shots until every
solution has been seen, and the number of shots a chi-square goodness of
fit test needs to reject "all solutions equally likely".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np
from scipy.optimize import brentq

from .statevector import OutputDistribution

DEFAULT_ALPHA = 0.05
DEFAULT_CAP = 100_000
_EPS = 1e-16
_TINY = 1e-300


def _lower_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError("shape must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def chi_square_pvalue(statistic: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if dof < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if statistic < 0:
        raise ValueError("statistic must be non-negative")
    return regularized_upper_gamma(dof / 2.0, statistic / 2.0)


def chi_square_critical(alpha: float, dof: int) -> float:
    """Statistic at which the p-value equals ``alpha``."""
    hi = max(10.0, 2.0 * dof)
    while chi_square_pvalue(hi, dof) > alpha:
        hi *= 2.0
    return brentq(lambda s: chi_square_pvalue(s, dof) - alpha, 0.0, hi, xtol=1e-14, rtol=1e-15)


class ShotsToAll(NamedTuple):
    mean: float
    half_width: float

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean - self.half_width, self.mean + self.half_width)


def _solution_probs(dist: OutputDistribution, solutions: Sequence[int]) -> np.ndarray:
    sols = np.asarray(list(solutions), dtype=np.int64)
    if sols.size == 0:
        raise ValueError("no solutions given")
    if np.unique(sols).size != sols.size:
        raise ValueError("duplicate solutions")
    return dist.probabilities[sols]


@numba.njit(cache=True)
def _coupon_trials(cdf, k, trials, seed):
    np.random.seed(seed)
    out = np.empty(trials, dtype=np.int64)
    seen = np.zeros(k, dtype=np.bool_)
    for t in range(trials):
        seen[:] = False
        missing = k
        draws = 0
        while missing > 0:
            j = np.searchsorted(cdf, np.random.random() * cdf[-1], side="right")
            draws += 1
            if j < k and not seen[j]:
                seen[j] = True
                missing -= 1
        out[t] = draws
    return out


def shots_to_all_solutions(dist: OutputDistribution, solutions: Sequence[int],
                           trials: int = 100_000, seed: int = 0) -> ShotsToAll:
    """Monte Carlo mean of shots until every solution shows up, with 95% CI."""
    if trials < 1:
        raise ValueError("trials must be positive")
    probs = _solution_probs(dist, solutions)
    if (probs <= 0).any():
        raise ValueError("a solution has zero probability; shots-to-all is infinite")
    other = max(0.0, 1.0 - float(probs.sum()))
    cdf = np.cumsum(np.append(probs, other))
    draws = _coupon_trials(cdf, probs.size, trials, seed)
    half = 1.959963984540054 * draws.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
    return ShotsToAll(float(draws.mean()), float(half))


@numba.njit(cache=True)
def _sequential_trials(cdf, k, crit, cap, trials, seed):
    np.random.seed(seed)
    out = np.empty(trials, dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    for t in range(trials):
        counts[:] = 0
        sumsq = 0
        out[t] = cap + 1
        for n in range(1, cap + 1):
            j = np.searchsorted(cdf, np.random.random() * cdf[-1], side="right")
            j = min(j, k - 1)
            sumsq += 2 * counts[j] + 1
            counts[j] += 1
            if k * sumsq / n - n > crit:
                out[t] = n
                break
    return out


def _median_pvalue(stats: np.ndarray, dof: int) -> float:
    s = np.sort(stats)
    mid = (s.size - 1) // 2
    lo = chi_square_pvalue(float(s[s.size - 1 - mid]), dof)
    hi = chi_square_pvalue(float(s[mid]), dof)
    return 0.5 * (lo + hi)


def shots_to_reject_fairness(dist: OutputDistribution, solutions: Sequence[int],
                             trials: int = 10_000, alpha: float = DEFAULT_ALPHA,
                             cap: int = DEFAULT_CAP, seed: int = 0,
                             method: str = "fixed_n") -> int | None:
    """Draws needed before a chi-square test rejects uniform solution sampling.

    Draws come from the distribution restricted to the solutions.  With
    ``method="fixed_n"`` the answer is the smallest N at which the median
    p-value over ``trials`` independent N-draw samples falls below
    ``alpha``.  With ``method="sequential"`` each trial tests after every
    draw and stops at its first rejection; the answer is the median stopping
    time.  Returns None when no rejection happens within ``cap`` draws.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    probs = _solution_probs(dist, solutions)
    k = probs.size
    if k < 2:
        raise ValueError("need at least two solutions to test uniformity")
    if probs.sum() <= 0:
        raise ValueError("solutions carry no probability")
    cond = probs / probs.sum()
    dof = k - 1

    if method == "sequential":
        crit = chi_square_critical(alpha, dof)
        stops = _sequential_trials(np.cumsum(cond), k, crit, cap, trials, seed)
        median = float(np.median(stops))
        return None if median > cap else int(math.ceil(median))
    if method != "fixed_n":
        raise ValueError(f"unknown method {method!r}")

    rng = np.random.default_rng(seed)
    cache: dict[int, bool] = {}

    def rejects(n: int) -> bool:
        if n not in cache:
            counts = rng.multinomial(n, cond, size=trials)
            stats = np.maximum(k * (counts.astype(float) ** 2).sum(axis=1) / n - n, 0.0)
            cache[n] = _median_pvalue(stats, dof) < alpha
        return cache[n]

    lo, hi = 0, 1
    while not rejects(hi):
        if hi >= cap:
            return None
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rejects(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class FairnessReport:
    solution_fraction: float
    shots_to_all: ShotsToAll | None
    shots_to_reject: int | None
    trials_all: int
    trials_reject: int
    alpha: float
    cap: int
    method: str
    unobserved: int = 0
    reject_defined: bool = True

    def to_dict(self) -> dict:
        return {
            "solution_percent": 100.0 * self.solution_fraction,
            "shots_to_all": None if self.shots_to_all is None else {
                "mean": self.shots_to_all.mean,
                "ci95": list(self.shots_to_all.interval)},
            "shots_to_all_status": "ok" if self.shots_to_all is not None else "not observed",
            "shots_to_reject": (self.shots_to_reject if self.shots_to_reject is not None
                                else "cap" if self.reject_defined else "n/a"),
            "trials_all": self.trials_all,
            "trials_reject": self.trials_reject,
            "alpha": self.alpha,
            "cap": self.cap,
            "method": self.method,
            "unobserved_solutions": self.unobserved,
        }


def fairness_report(dist: OutputDistribution, solutions: Sequence[int],
                    trials_all: int = 100_000, trials_reject: int = 10_000,
                    alpha: float = DEFAULT_ALPHA, cap: int = DEFAULT_CAP,
                    seed: int = 0, method: str = "fixed_n") -> FairnessReport:
    """Both metrics; solutions the distribution never produces are flagged."""
    probs = _solution_probs(dist, solutions)
    unobserved = int((probs <= 0).sum())
    to_all = None if unobserved else shots_to_all_solutions(dist, solutions, trials_all, seed)
    to_reject = None
    defined = len(probs) >= 2 and probs.sum() > 0
    if defined:
        to_reject = shots_to_reject_fairness(dist, solutions, trials_reject, alpha, cap,
                                             seed + 1, method)
    return FairnessReport(float(probs.sum()), to_all, to_reject, trials_all, trials_reject,
                          alpha, cap, method, unobserved, defined)
