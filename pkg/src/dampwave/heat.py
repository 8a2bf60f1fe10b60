"""Crank-Nicolson solver for ``v_t - a^{-1} Lap v = 0`` and the Duhamel reconstruction of ``u``.

The generator ``L = -a^{-1} Lap`` is symmetric and nonnegative for the
weighted measure ``a dx``; the discrete version uses the same centred radial
stencil as the wave solver so that both sides of the Duhamel identity see one
operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from dampwave.grid import DampingProfile, Field, InitialData, RadialGrid
from dampwave.io import write_csv
from dampwave.wave import WaveSnapshot, laplacian_values

TAIL_THRESHOLD = 1e-10


class InsufficientSnapshots(ValueError):
    """The wave series does not provide the time nodes the quadrature needs."""


@dataclass(frozen=True)
class HeatState:
    v: Field
    t: float

    def __post_init__(self):
        if self.v.values[0] != 0.0:
            raise ValueError("heat state must vanish at r0")


def heat_initial_from_wave(data: InitialData, p: DampingProfile) -> Field:
    """``v0 = u0 + u1 / a``."""
    a = p.on_grid(data.grid).values
    return Field(data.u0.values + data.u1.values / a, data.grid)


def apply_generator(f: Field, grid: RadialGrid | None = None, p: DampingProfile | None = None) -> Field:
    """``-a^{-1} Lap_h f``; boundary nodes are zero."""
    if p is None:
        raise ValueError("a damping profile is required")
    grid = grid or f.grid
    a = p.on_grid(grid).values
    return Field(-laplacian_values(f.values, grid) / a, grid)


def _check_dominance(grid: RadialGrid) -> None:
    # off-diagonal stencil weights keep their sign only if dr < 2 r0 / (N - 1)
    if grid.dim > 1 and not grid.dr < 2.0 * grid.r0 / (grid.dim - 1):
        raise ValueError(
            f"dr={grid.dr:.4g} too coarse near r0={grid.r0}: need dr < 2 r0/(N-1) "
            "for a diagonally dominant Crank-Nicolson system"
        )


class CrankNicolson:
    """Crank-Nicolson stepper for one ``(grid, profile, dt)``.

    Both Dirichlet values are held at zero.
    """

    def __init__(self, grid: RadialGrid, p: DampingProfile, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        _check_dominance(grid)
        self.grid, self.p, self.dt = grid, p, float(dt)
        a = p.on_grid(grid).values
        r = grid.r
        dr = grid.dr
        n = grid.n
        lo = (1.0 / dr**2 - (grid.dim - 1) / (2.0 * r * dr)) / a
        di = (-2.0 / dr**2) / a
        up = (1.0 / dr**2 + (grid.dim - 1) / (2.0 * r * dr)) / a
        # rows 1..n-2 carry the stencil; rows 0 and n-1 are identity
        self._lo, self._di, self._up = lo, di, up
        half = 0.5 * self.dt
        ab = np.zeros((3, n))
        ab[0, 2:] = -half * up[1:-1]
        ab[1, 1:-1] = 1.0 - half * di[1:-1]
        ab[2, :-2] = -half * lo[1:-1]
        ab[1, 0] = ab[1, -1] = 1.0
        self._ab = ab

    def _apply_half(self, v: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[1:-1] += 0.5 * self.dt * (
            self._lo[1:-1] * v[:-2] + self._di[1:-1] * v[1:-1] + self._up[1:-1] * v[2:]
        )
        out[0] = out[-1] = 0.0
        return out

    def step(self, v: np.ndarray) -> np.ndarray:
        out = solve_banded((1, 1), self._ab, self._apply_half(v), check_finite=False)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite heat field")
        return out

    def advance(self, v: np.ndarray, n_steps: int) -> np.ndarray:
        for _ in range(n_steps):
            v = self.step(v)
        return v


def step_heat(s: HeatState, grid: RadialGrid, p: DampingProfile, dt: float) -> HeatState:
    v = CrankNicolson(grid, p, dt).step(s.v.values)
    return HeatState(Field(v, grid), s.t + dt)


@dataclass
class HeatRun:
    times: list[float] = field(default_factory=list)
    fields: list[Field] = field(default_factory=list)
    tail_warning: bool = False
    tail_ratio: float = 0.0

    def __iter__(self):
        return iter(zip(self.times, self.fields))

    def __len__(self):
        return len(self.times)

    def to_csv(self, path, index: int = -1):
        f = self.fields[index]
        return write_csv(path, {"r": f.grid.r, "v": f.values})


def evolve_heat(
    v0: Field,
    T: float,
    dt: float,
    p: DampingProfile,
    sample_times: Sequence[float] | None = None,
) -> HeatRun:
    """March ``v0`` to ``T``; snapshots at the steps nearest ``sample_times`` (default: every step).

    ``tail_warning`` is set when ``|v|`` at the last interior node ever exceeds
    ``1e-10`` times the Euclidean size of ``v``: the Dirichlet truncation at
    ``r_max`` is then visible.
    """
    grid = v0.grid
    if v0.values[0] != 0.0 or v0.values[-1] != 0.0:
        raise ValueError("initial heat data must vanish on both boundaries")
    cn = CrankNicolson(grid, p, dt)
    n_steps = int(math.floor(T / dt + 1e-9))
    if sample_times is None:
        wanted = set(range(n_steps + 1))
    else:
        wanted = {min(int(round(ts / dt)), n_steps) for ts in sample_times}
    run = HeatRun()
    v = v0.values.copy()
    for k in range(n_steps + 1):
        if k > 0:
            v = cn.step(v)
        norm = float(np.sqrt(np.dot(v, v)))
        if norm > 0:
            ratio = abs(v[-2]) / norm
            run.tail_ratio = max(run.tail_ratio, ratio)
        if k in wanted:
            run.times.append(k * dt)
            run.fields.append(Field(v, grid))
    run.tail_warning = run.tail_ratio > TAIL_THRESHOLD
    return run


def heat_outer_radius(T: float, alpha: float, R0: float) -> float:
    """Smallest truncation radius kept clear of the self-similar spreading scale."""
    return 5.0 * T ** (1.0 / (2.0 + alpha)) + R0


def _lookup(series: dict[int, WaveSnapshot], t: float, tol: float) -> WaveSnapshot:
    key = int(round(t / tol))
    for k in (key, key - 1, key + 1):
        s = series.get(k)
        if s is not None and abs(s.t - t) <= 0.5 * tol:
            return s
    raise InsufficientSnapshots(f"no wave snapshot at t={t:.6g}")


def _semigroup_sum(
    cn: CrankNicolson,
    terms: list[np.ndarray],
    gap: int,
    last_gap: int,
) -> np.ndarray:
    """``sum_j S(t - s_j) f_j`` for equispaced ``s_j``, by one accumulated march.

    Gaps are counted in heat steps: ``gap`` separates successive nodes and
    ``last_gap`` is ``t - s_last``.
    """
    y = np.zeros(cn.grid.n)
    for j, f in enumerate(terms):
        if j > 0:
            y = cn.advance(y, gap)
        y = y + f
    return cn.advance(y, last_gap)


def duhamel_reconstruct(
    wave_series: Sequence[WaveSnapshot],
    p: DampingProfile,
    grid: RadialGrid,
    t: float,
    dt_quad: float,
    heat_substeps: int = 1,
) -> Field:
    """Rebuild ``u(t)`` from the heat semigroup ``S`` and wave data.

    ``u(t) = S(t) v0 - int_{t/2}^{t} S(t-s) a^{-1} u_tt ds - S(t/2) a^{-1} u_t(t/2)
    + int_0^{t/2} L S(t-s) a^{-1} u_t ds``, with ``v0 = u0 + a^{-1} u1``.

    Both integrals use the midpoint rule with step ``dt_quad``; ``t/2`` must be a
    multiple of ``dt_quad`` and the series must contain snapshots at ``0``,
    ``t/2`` and every midpoint.  The semigroup is Crank-Nicolson with
    ``heat_substeps`` steps per ``dt_quad / 2``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = p.on_grid(grid).values
    tol = 1e-9 * max(1.0, t) + 1e-12
    if not wave_series:
        raise InsufficientSnapshots("empty wave series")
    tick = min(
        (abs(b.t - c.t) for b, c in zip(wave_series, wave_series[1:]) if b.t != c.t),
        default=dt_quad,
    )
    tick = min(tick, dt_quad) / 4.0
    series = {int(round(s.t / tick)): s for s in wave_series}
    s0 = _lookup(series, 0.0, tick)
    v0 = s0.u.values + s0.u_t.values / a
    if t == 0.0:
        return Field(v0 - s0.u_t.values / a, grid)

    n_half = t / (2.0 * dt_quad)
    m = int(round(n_half))
    if m < 1 or abs(n_half - m) > tol:
        raise InsufficientSnapshots(f"t/2={t / 2:.6g} is not a positive multiple of dt_quad={dt_quad:.6g}")
    cn = CrankNicolson(grid, p, dt_quad / (2.0 * heat_substeps))
    sub = heat_substeps  # heat steps per half quadrature step

    main = cn.advance(v0.copy(), 4 * m * sub)
    mid = _lookup(series, t / 2.0, tick)
    middle = cn.advance(mid.u_t.values / a, 2 * m * sub)

    def midpoints(lo):
        return [lo + (j + 0.5) * dt_quad for j in range(m)]

    late = [dt_quad * _lookup(series, s, tick).u_tt.values / a for s in midpoints(t / 2.0)]
    early = [dt_quad * _lookup(series, s, tick).u_t.values / a for s in midpoints(0.0)]
    # t - s_last = dt_quad/2 for both integrals; the early one then waits t/2 more
    first = _semigroup_sum(cn, late, 2 * sub, sub)
    third = _semigroup_sum(cn, early, 2 * sub, sub + 2 * m * sub)
    third = -laplacian_values(third, grid) / a
    u = main - first - middle + third
    u[0] = u[-1] = 0.0
    return Field(u, grid)
