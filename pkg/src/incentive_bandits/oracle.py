"""Exact expectations for tiny Bernoulli instances by enumerating every outcome path.

The decision rule is re-implemented here in plain Python on purpose: this
module is the independent reference the simulator is checked against.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import LOG_T, run_arms
from .env import DriftModel, NoiseModel
from .errors import BudgetExceeded, InvalidParameter
from .harness import trial_rng

MAX_ORACLE_ARMS = 3
MAX_ORACLE_HORIZON = 8


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def brute_force_expectation(
    p: Sequence[float],
    T: int,
    ell: float = 0.5,
    log_mode: str = LOG_T,
) -> tuple[float, float]:
    """Exact (expected cumulative pseudo-regret, expected cumulative compensation)."""
    p = [float(v) for v in p]
    if not 1 <= len(p) <= MAX_ORACLE_ARMS or not 1 <= T <= MAX_ORACLE_HORIZON:
        raise BudgetExceeded(
            f"oracle handles at most {MAX_ORACLE_ARMS} arms and T <= {MAX_ORACLE_HORIZON}, "
            f"got {len(p)} arms and T={T}",
            len(p) * 2**T,
        )
    if any(not 0.0 <= v <= 1.0 for v in p):
        raise InvalidParameter("Bernoulli means must lie in [0,1]")
    if ell < 0:
        raise InvalidParameter("drift slope must be >= 0")
    best = max(p)
    K = len(p)

    def walk(t: int, pulls: list[int], sums: list[float]) -> tuple[float, float]:
        if t > T:
            return 0.0, 0.0
        means = [s / n if n else 0.0 for s, n in zip(sums, pulls)]
        log_value = math.log(t) if log_mode == LOG_T else math.log(T)
        ucb = [math.inf if n == 0 else m + math.sqrt(2.0 * log_value / n) for m, n in zip(means, pulls)]
        a = _argmax(ucb)
        g = _argmax(means)
        kappa = means[g] - means[a]
        regret, comp = best - p[a], kappa
        for outcome, prob in ((1.0, p[a]), (0.0, 1.0 - p[a])):
            if prob == 0.0:
                continue
            pulls2, sums2 = list(pulls), list(sums)
            pulls2[a] += 1
            sums2[a] += outcome + ell * kappa
            r, c = walk(t + 1, pulls2, sums2)
            regret += prob * r
            comp += prob * c
        return regret, comp

    return walk(1, [0] * K, [0.0] * K)


def monte_carlo_expectation(
    p: Sequence[float],
    T: int,
    ell: float = 0.5,
    episodes: int = 100_000,
    master_seed: int = 0,
    log_mode: str = LOG_T,
) -> dict[str, float]:
    """Simulator estimate of the same expectations, with standard errors."""
    noise = NoiseModel(distribution="bernoulli")
    driftm = DriftModel(ell, ell)
    best = max(p)
    regret = np.empty(episodes)
    comp = np.empty(episodes)
    for i in range(episodes):
        r = run_arms(p, best, noise, driftm, T, trial_rng(master_seed, i), log_mode)
        regret[i] = r.cum_pseudo_regret[-1]
        comp[i] = r.cum_compensation[-1]
    n = math.sqrt(episodes)
    return {
        "regret": float(regret.mean()),
        "regret_se": float(regret.std(ddof=1) / n) if episodes > 1 else 0.0,
        "compensation": float(comp.mean()),
        "compensation_se": float(comp.std(ddof=1) / n) if episodes > 1 else 0.0,
    }
