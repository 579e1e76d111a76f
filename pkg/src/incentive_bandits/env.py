"""Reward landscape, observation noise and the compensation-driven drift."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter

LINEAR_STOCHASTIC = "linear-stochastic"
LINEAR_CONTEXTUAL = "linear-contextual"
CONSTANT = "constant"


@dataclass(frozen=True)
class MeanRewardModel:
    """Mean reward as a function of arm (and context).

    ``linear-stochastic``: mu(a) = L * sum(a).
    ``linear-contextual``: nu(a, x) = L * (sum(a) + sum(x)).
    ``constant``: every arm has mean ``level`` (used as a Lipschitz sanity case).
    """

    kind: str = LINEAR_STOCHASTIC
    L: float = 1.0
    d_a: int = 1
    d_x: int = 0
    level: float = 0.5

    def __post_init__(self):
        if self.kind not in (LINEAR_STOCHASTIC, LINEAR_CONTEXTUAL, CONSTANT):
            raise InvalidParameter(f"unknown reward model kind {self.kind!r}")
        if not self.L > 0:
            raise InvalidParameter(f"Lipschitz constant must be positive, got {self.L}")
        if self.d_a < 1 or self.d_x < 0:
            raise InvalidParameter(f"bad dimensions d_a={self.d_a}, d_x={self.d_x}")
        if self.kind == LINEAR_CONTEXTUAL and self.d_x < 1:
            raise InvalidParameter("contextual model needs d_x >= 1")
        if self.kind == LINEAR_STOCHASTIC and self.d_x != 0:
            raise InvalidParameter("stochastic model must have d_x = 0")

    @property
    def contextual(self) -> bool:
        return self.kind == LINEAR_CONTEXTUAL

    def _check(self, a: np.ndarray, x) -> np.ndarray | None:
        if a.shape[-1] != self.d_a:
            raise InvalidParameter(f"arm has dimension {a.shape[-1]}, model has d_a={self.d_a}")
        if self.contextual:
            if x is None:
                raise InvalidParameter("contextual model requires a context")
            x = np.asarray(x, dtype=float).reshape(-1)
            if x.shape[0] != self.d_x:
                raise InvalidParameter(f"context has dimension {x.shape[0]}, model has d_x={self.d_x}")
            return x
        return None

    def mean(self, a, x=None) -> float:
        a = np.asarray(a, dtype=float).reshape(-1)
        x = self._check(a, x)
        if self.kind == CONSTANT:
            return float(self.level)
        if x is None:
            return float(self.L * a.sum())
        return float(self.L * (a.sum() + x.sum()))

    def means(self, points: np.ndarray, x=None) -> np.ndarray:
        """Vectorised :meth:`mean` over the rows of ``points``."""
        points = np.asarray(points, dtype=float)
        x = self._check(points, x)
        if self.kind == CONSTANT:
            return np.full(points.shape[0], float(self.level))
        if x is None:
            return self.L * points.sum(axis=1)
        return self.L * (points.sum(axis=1) + x.sum())

    def optimum(self, x=None) -> float:
        """Supremum of the mean over the whole arm cube (all-ones arm)."""
        if self.kind == CONSTANT:
            return float(self.level)
        if self.contextual:
            x = np.asarray(x, dtype=float).reshape(-1)
            return float(self.L * (self.d_a + x.sum()))
        return float(self.L * self.d_a)


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise around the mean.

    ``scale`` is read as a variance unless ``interpretation == "std"``.
    The Bernoulli variant ignores ``scale`` and requires means in [0, 1].
    """

    scale: float = 0.05
    interpretation: str = "variance"
    clip: bool = False
    distribution: str = "gaussian"

    def __post_init__(self):
        if self.scale < 0:
            raise InvalidParameter(f"noise scale must be >= 0, got {self.scale}")
        if self.interpretation not in ("variance", "std"):
            raise InvalidParameter(f"unknown noise interpretation {self.interpretation!r}")
        if self.distribution not in ("gaussian", "bernoulli"):
            raise InvalidParameter(f"unknown noise distribution {self.distribution!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.scale) if self.interpretation == "variance" else self.scale

    def sample(self, mean: float, rng: np.random.Generator) -> float:
        # exactly one generator call per sample keeps streams aligned across runs
        if self.distribution == "bernoulli":
            if not 0.0 <= mean <= 1.0:
                raise InvalidParameter(f"Bernoulli mean must lie in [0,1], got {mean}")
            value = 1.0 if rng.random() < mean else 0.0
        else:
            value = mean + self.std * rng.standard_normal()
        if self.clip:
            value = min(max(value, 0.0), 1.0)
        return float(value)


@dataclass(frozen=True)
class DriftModel:
    """Linear drift gamma_t(kappa) = ell_t * kappa, ell_t ~ U[ell_low, ell_high] each round."""

    ell_low: float = 0.45
    ell_high: float = 0.55

    def __post_init__(self):
        if self.ell_low < 0 or self.ell_high < self.ell_low:
            raise InvalidParameter(
                f"need 0 <= ell_low <= ell_high, got [{self.ell_low}, {self.ell_high}]"
            )

    @property
    def ell(self) -> float:
        return self.ell_high

    def draw_ell(self, rng: np.random.Generator) -> float:
        # one uniform per round, even when the interval is degenerate
        u = rng.random()
        return float(self.ell_low + (self.ell_high - self.ell_low) * u)

    def __call__(self, kappa: float, rng: np.random.Generator) -> tuple[float, float]:
        return drift(self, kappa, rng)


def mean_reward(model: MeanRewardModel, a, x=None) -> float:
    return model.mean(a, x)


def sample_reward(model: MeanRewardModel, noise: NoiseModel, a, x, rng: np.random.Generator) -> float:
    return noise.sample(model.mean(a, x), rng)


def drift(model: DriftModel, kappa: float, rng: np.random.Generator) -> tuple[float, float]:
    """Draw ell_t and return ``(gamma, ell_t)`` with gamma = ell_t * kappa."""
    if kappa < 0:
        raise InvalidParameter(f"compensation must be non-negative, got {kappa}")
    ell_t = model.draw_ell(rng)
    return ell_t * kappa, ell_t


def product_distance(model: MeanRewardModel, p, q) -> float:
    """l-infinity on arms, plus l-infinity on contexts for the contextual model."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if model.contextual:
        da = model.d_a
        return float(np.max(np.abs(p[:da] - q[:da])) + np.max(np.abs(p[da:] - q[da:])))
    return float(np.max(np.abs(p - q)))


def lipschitz_ratio(model: MeanRewardModel, p, q) -> float:
    """|mean(p) - mean(q)| / distance(p, q); ``p`` and ``q`` are arm (+context) vectors."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    dist = product_distance(model, p, q)
    if dist == 0:
        return 0.0
    da = model.d_a
    mp = model.mean(p[:da], p[da:] if model.contextual else None)
    mq = model.mean(q[:da], q[da:] if model.contextual else None)
    return abs(mp - mq) / dist


def lipschitz_ceiling(model: MeanRewardModel) -> float:
    """Largest ratio the model can attain under :func:`product_distance`."""
    if model.kind == CONSTANT:
        return 0.0
    return model.L * max(model.d_a, model.d_x)


def verify_lipschitz(model: MeanRewardModel, n_pairs: int, rng: np.random.Generator) -> float:
    """Maximum observed Lipschitz ratio over ``n_pairs`` uniform random pairs."""
    if n_pairs < 1:
        raise InvalidParameter("n_pairs must be >= 1")
    dim = model.d_a + model.d_x
    p = rng.random((n_pairs, dim))
    q = rng.random((n_pairs, dim))
    return max(lipschitz_ratio(model, p[i], q[i]) for i in range(n_pairs))
