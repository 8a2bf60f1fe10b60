"""Radial exterior-domain grids, damping profiles and weighted quadrature.

Every field in the package lives on a uniform radial mesh ``r0 <= r <= r_max``
with ``r0 > 0``; the spatial dimension ``dim`` only enters through the radial
measure ``omega_N r^(N-1) dr`` and the radial Laplacian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from dampwave.io import write_csv

MIN_NODES = 16


def japanese_bracket(r):
    """``<r> = (1 + r^2)^(1/2)``."""
    return np.sqrt(1.0 + np.asarray(r, dtype=float) ** 2)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def smooth_bump(s):
    """``exp(-1/(1-s^2))`` on ``|s| < 1``, zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class RadialGrid:
    r0: float
    r_max: float
    n: int
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not self.r_max > self.r0:
            raise ValueError(f"r_max ({self.r_max}) must exceed r0 ({self.r0})")
        if self.n < MIN_NODES:
            raise ValueError(f"n must be >= {MIN_NODES}, got {self.n}")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r0) / (self.n - 1)

    @cached_property
    def r(self) -> np.ndarray:
        nodes = np.linspace(self.r0, self.r_max, self.n)
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def measure(self) -> np.ndarray:
        """Radial volume density ``omega_N r^(N-1)``."""
        m = sphere_area(self.dim) * self.r ** (self.dim - 1)
        m.flags.writeable = False
        return m

    def refine(self) -> "RadialGrid":
        """Grid with half the spacing on the same interval (``2n - 1`` nodes)."""
        return RadialGrid(self.r0, self.r_max, 2 * self.n - 1, self.dim)

    def index_of(self, radius: float) -> int:
        """Index of the node nearest to ``radius``."""
        return int(round((radius - self.r0) / self.dr))


def build_grid(r0: float, r_max: float, n: int, dim: int) -> RadialGrid:
    return RadialGrid(float(r0), float(r_max), int(n), int(dim))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples at the nodes of ``grid``."""

    values: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"field has shape {values.shape}, grid has {self.grid.n} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "Field":
        return cls(np.zeros(grid.n), grid)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def __len__(self):
        return self.grid.n

    def to_csv(self, path: str | Path, name: str = "value") -> Path:
        return write_csv(path, {"r": self.grid.r, name: self.values})


@dataclass(frozen=True)
class Perturbation:
    """Smooth compactly supported radial bump with peak value ``height`` at ``center``."""

    height: float
    center: float
    width: float

    def __call__(self, r):
        return self.height * math.e * smooth_bump((np.asarray(r, dtype=float) - self.center) / self.width)


@dataclass(frozen=True)
class DampingProfile:
    """``a(r) = a0 r^alpha + perturbation(r)``."""

    alpha: float
    a0: float
    perturbation: Perturbation | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.a0 > 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("damping is only defined for r > 0")
        a = self.a0 * r**self.alpha
        if self.perturbation is not None:
            a = a + self.perturbation(r)
        return a

    def on_grid(self, grid: RadialGrid) -> Field:
        a = self(grid.r)
        if np.any(a <= 0):
            raise ValueError("damping must be positive on the grid")
        return Field(a, grid)

    def growth_bounds(self, grid: RadialGrid) -> tuple[float, float]:
        """Measured ``(a1, a2)`` with ``a1 <r>^alpha <= a(r) <= a2 <r>^alpha`` on the nodes."""
        ratio = self(grid.r) / japanese_bracket(grid.r) ** self.alpha
        return float(ratio.min()), float(ratio.max())


def damping_eval(p: DampingProfile, r, r0: float | None = None):
    """Evaluate ``a(r)``; rejects radii inside the obstacle when ``r0`` is given."""
    if r0 is not None and np.any(np.asarray(r) < r0):
        raise ValueError(f"radius below inner boundary r0={r0}")
    a = p(r)
    if np.any(a <= 0):
        raise ValueError("damping evaluated to a non-positive value")
    return a


@dataclass(frozen=True)
class InitialData:
    u0: Field
    u1: Field
    support_radius: float

    def __post_init__(self):
        grid = self.u0.grid
        if self.u1.grid != grid:
            raise ValueError("u0 and u1 live on different grids")
        if not self.support_radius < grid.r_max:
            raise ValueError("support radius must be below r_max")
        outside = grid.r >= self.support_radius
        if np.any(self.u0.values[outside] != 0) or np.any(self.u1.values[outside] != 0):
            raise ValueError("initial data does not vanish beyond the support radius")
        if self.u0.values[0] != 0 or self.u1.values[0] != 0:
            raise ValueError("initial data must vanish on the inner boundary")

    @property
    def grid(self) -> RadialGrid:
        return self.u0.grid


def bump_initial_data(
    grid: RadialGrid, center: float, width: float, amp_u0: float, amp_u1: float
) -> InitialData:
    if width <= 0:
        raise ValueError("bump width must be positive")
    if not (grid.r0 < center - width and center + width < grid.r_max):
        raise ValueError(
            f"bump [{center - width}, {center + width}] must lie strictly inside "
            f"({grid.r0}, {grid.r_max})"
        )
    shape = smooth_bump((grid.r - center) / width)
    return InitialData(
        Field(amp_u0 * shape, grid),
        Field(amp_u1 * shape, grid),
        support_radius=center + width,
    )


def simpson_weights(n: int, dr: float) -> np.ndarray:
    """Composite Simpson weights; an even node count gets a trapezoid last panel."""
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 1
    w[:m:2] = 2.0
    w[1:m:2] = 4.0
    w[0] = w[m - 1] = 1.0
    w[:m] *= dr / 3.0
    if m < n:
        w[m - 1] += dr / 2.0
        w[m] += dr / 2.0
    return w


def quadrature(samples, weight=None, grid: RadialGrid | None = None) -> float:
    """Approximate ``int samples * weight * omega_N r^(N-1) dr`` over the grid.

    ``samples``/``weight`` may be Fields or arrays; with plain arrays pass ``grid``.
    """
    if grid is None:
        grid = samples.grid if isinstance(samples, Field) else getattr(weight, "grid", None)
    if grid is None:
        raise ValueError("quadrature needs a grid")
    s = samples.values if isinstance(samples, Field) else np.asarray(samples, dtype=float)
    if weight is None:
        w = np.ones_like(s)
    else:
        w = weight.values if isinstance(weight, Field) else np.asarray(weight, dtype=float)
    if s.shape != (grid.n,) or w.shape != (grid.n,):
        raise ValueError(
            f"length mismatch: samples {s.shape}, weight {w.shape}, grid {grid.n}"
        )
    return float(np.dot(_radial_weights(grid), s * w))


def quadrature_weights(grid: RadialGrid) -> np.ndarray:
    """Read-only Simpson weights times the radial measure."""
    return _radial_weights(grid)


_WEIGHT_CACHE: dict[RadialGrid, np.ndarray] = {}


def _radial_weights(grid: RadialGrid) -> np.ndarray:
    w = _WEIGHT_CACHE.get(grid)
    if w is None:
        w = simpson_weights(grid.n, grid.dr) * grid.measure
        w.flags.writeable = False
        if len(_WEIGHT_CACHE) > 64:
            _WEIGHT_CACHE.clear()
        _WEIGHT_CACHE[grid] = w
    return w


WeightKind = Literal["lebesgue", "dmu", "dmu_sqrt_a_outside"]


def weighted_l2_norm(f: Field, p: DampingProfile, weight_kind: WeightKind = "dmu") -> float:
    """``(int |f|^2 w omega_N r^(N-1) dr)^(1/2)`` with ``w = 1`` or ``w = a``.

    ``dmu`` and ``dmu_sqrt_a_outside`` coincide: ``||f||_{L^2_{dmu}} = ||sqrt(a) f||_{L^2}``.
    """
    if weight_kind == "lebesgue":
        w = np.ones(f.grid.n)
    elif weight_kind in ("dmu", "dmu_sqrt_a_outside"):
        w = p.on_grid(f.grid).values
    else:
        raise ValueError(f"unknown weight kind {weight_kind!r}")
    return math.sqrt(max(quadrature(f.values**2, w, grid=f.grid), 0.0))


def field_from_function(grid: RadialGrid, func: Callable[[np.ndarray], np.ndarray]) -> Field:
    return Field(func(grid.r), grid)
