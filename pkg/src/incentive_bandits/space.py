"""Uniform grid covers of the unit hypercube.

A cover with ``k`` points per axis places one representative at the center
of each of the ``k**d`` axis-aligned cells of side ``1/k``.  Under the
max-coordinate (l-infinity) metric every cell has diameter ``1/k`` and every
point of the cube lies within ``1/(2k)`` of its cell center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BudgetExceeded, InvalidParameter

DEFAULT_MAX_ARMS = 2**21
MAX_DIM = 16


def points_per_dim(psi: float) -> int:
    """Number of grid points per axis needed for cells of diameter <= psi."""
    if not psi > 0 or not math.isfinite(psi):
        raise InvalidParameter(f"psi must be a positive finite number, got {psi!r}")
    if psi >= 1.0:
        return 1
    return math.ceil(1.0 / psi)


def optimal_psi(T: int, L: float, d: int, c: float = 1.0) -> float:
    """Discretization scale c * (ln T / (T L^2)) ** (1/(d+2))."""
    if T < 2:
        raise InvalidParameter(f"horizon must be >= 2 for the log factor, got T={T}")
    if not L > 0:
        raise InvalidParameter(f"Lipschitz constant must be positive, got L={L}")
    if d < 1:
        raise InvalidParameter(f"dimension must be >= 1, got d={d}")
    if not c > 0:
        raise InvalidParameter(f"scale multiplier must be positive, got c={c}")
    return c * (math.log(T) / (T * L * L)) ** (1.0 / (d + 2))


def linf(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


@dataclass(frozen=True)
class GridCover:
    """Cell-center grid over [0,1]^d, points indexed in lexicographic axis order
    (first axis varies slowest)."""

    d: int
    psi_target: float
    k: int

    @cached_property
    def axis(self) -> np.ndarray:
        return (2.0 * np.arange(self.k) + 1.0) / (2.0 * self.k)

    @property
    def size(self) -> int:
        return self.k**self.d

    def __len__(self) -> int:
        return self.size

    @property
    def radius(self) -> float:
        """Largest l-infinity distance from any point of the cube to its snap."""
        return 1.0 / (2 * self.k)

    @property
    def cell_diameter(self) -> float:
        return 1.0 / self.k

    @cached_property
    def points(self) -> np.ndarray:
        grids = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=1)
        pts.setflags(write=False)
        return pts

    def multi_index(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise InvalidParameter(f"cover index {index} out of range [0, {self.size})")
        out = []
        for _ in range(self.d):
            index, r = divmod(index, self.k)
            out.append(r)
        return tuple(reversed(out))

    def point(self, index: int) -> np.ndarray:
        return self.axis[list(self.multi_index(index))]

    def snap(self, q) -> int:
        return snap(q, self)


def build_cover(d: int, psi: float, max_arms: int = DEFAULT_MAX_ARMS) -> GridCover:
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= MAX_DIM:
        raise InvalidParameter(f"dimension must be an integer in [1, {MAX_DIM}], got {d!r}")
    k = points_per_dim(psi)
    n = k**d
    if n > max_arms:
        raise BudgetExceeded(
            f"cover needs k^d = {k}^{d} = {n} points, above the budget of {max_arms}", n
        )
    return GridCover(d=int(d), psi_target=float(psi), k=k)


def snap(q, cover: GridCover) -> int:
    """Index of the nearest cover point under l-infinity, ties to the lowest index.

    The grid is a product, so the l-infinity distance to the nearest point is
    the largest of the per-axis nearest distances.  Every point whose per-axis
    distances all stay within that value is a tie; the lowest index among them
    takes the lowest admissible coordinate on each axis.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != cover.d:
        raise InvalidParameter(f"point has dimension {q.shape[0]}, cover has d={cover.d}")
    k = cover.k
    axis = cover.axis
    nearest = []
    for v in q:
        i = min(max(math.ceil(v * k) - 1, 0), k - 1)
        # correct for rounding in v*k so the choice agrees with float distances
        if i + 1 < k and abs(v - axis[i + 1]) < abs(v - axis[i]):
            i += 1
        nearest.append(i)
    radius = max(abs(v - axis[i]) for v, i in zip(q, nearest))
    index = 0
    for v, i in zip(q, nearest):
        while i > 0 and abs(v - axis[i - 1]) <= radius:
            i -= 1
        index = index * k + i
    return index
