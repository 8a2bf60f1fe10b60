"""Leapfrog solver for the radial damped wave equation ``u_tt - Lap u + a u_t = 0``.

The damping term is centred in time and therefore solved pointwise, so the
step size is limited by the wave speed only, not by ``a(r_max)``.  Data is
compactly supported and the run length is capped so the light cone never
reaches ``r_max``; the outer node is held at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from dampwave.grid import DampingProfile, Field, InitialData, RadialGrid

MAX_CFL = 0.9


class SolverDivergence(RuntimeError):
    """Raised when a time step produces NaN or Inf."""


def laplacian_values(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """``f'' + (N-1)/r f'`` by centred differences; zero on the two boundary nodes."""
    f = values
    dr = grid.dr
    r = grid.r[1:-1]
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dr**2 + (grid.dim - 1) / r * (
        f[2:] - f[:-2]
    ) / (2.0 * dr)
    return out


def radial_laplacian(f: Field, grid: RadialGrid | None = None) -> Field:
    grid = grid or f.grid
    return Field(laplacian_values(f.values, grid), grid)


def gradient_values(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Radial derivative: centred inside, second-order one-sided at both ends."""
    f = values
    dr = grid.dr
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dr)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dr)
    return g


@dataclass(frozen=True)
class WaveState:
    u_now: Field
    u_prev: Field
    t: float
    dt: float


@dataclass(frozen=True)
class WaveRunConfig:
    dt: float
    T: float
    sample_times: tuple[float, ...] = ()
    cfl: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "sample_times", tuple(float(s) for s in self.sample_times))
        if any(s < 0 or s > self.T for s in self.sample_times):
            raise ValueError("sample times must lie in [0, T]")

    @classmethod
    def from_cfl(cls, grid: RadialGrid, cfl: float, T: float, sample_times: Sequence[float] = ()):
        return cls(dt=cfl * grid.dr, T=T, sample_times=tuple(sample_times), cfl=cfl)

    def validate(self, grid: RadialGrid, support_radius: float) -> None:
        cfl = self.dt / grid.dr
        if cfl > MAX_CFL + 1e-12:
            raise ValueError(f"cfl = dt/dr = {cfl:.4f} exceeds {MAX_CFL}")
        limit = grid.r_max - support_radius - 4.0 * grid.dr
        if self.T > limit + 1e-12:
            raise ValueError(
                f"T={self.T} exceeds r_max - R0 - 4 dr = {limit:.6g}: the light cone "
                "would reach the truncation radius (finite-speed truncation rule)"
            )

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))


@dataclass(frozen=True)
class WaveSnapshot:
    t: float
    u: Field
    u_t: Field
    u_tt: Field
    step: int = 0


def _damping_factor(grid: RadialGrid, p: DampingProfile, dt: float) -> np.ndarray:
    return 0.5 * dt * p.on_grid(grid).values


def _advance(u: np.ndarray, u_prev: np.ndarray, lap: np.ndarray, kappa: np.ndarray, dt: float):
    nxt = (2.0 * u - (1.0 - kappa) * u_prev + dt**2 * lap) / (1.0 + kappa)
    nxt[0] = 0.0
    nxt[-1] = 0.0
    return nxt


def step_wave(s: WaveState, grid: RadialGrid, p: DampingProfile, dt: float | None = None) -> WaveState:
    """One leapfrog step with centred (implicit, diagonal) damping."""
    dt = s.dt if dt is None else dt
    kappa = _damping_factor(grid, p, dt)
    u = s.u_now.values
    nxt = _advance(u, s.u_prev.values, laplacian_values(u, grid), kappa, dt)
    if not np.all(np.isfinite(nxt)):
        raise SolverDivergence(f"non-finite wave field at t={s.t + dt:.6g}")
    return WaveState(Field(nxt, grid), s.u_now, s.t + dt, dt)


def initial_state(data: InitialData, p: DampingProfile, dt: float) -> WaveState:
    """Second-order start: the ghost level ``u(-dt)`` from a Taylor expansion."""
    grid = data.grid
    u0, u1 = data.u0.values, data.u1.values
    a = p.on_grid(grid).values
    ghost = u0 - dt * u1 + 0.5 * dt**2 * (laplacian_values(u0, grid) - a * u1)
    return WaveState(data.u0, Field(ghost, grid), 0.0, dt)


# observer(step, t, u_prev, u_now, u_next, dt); arrays are read-only views
Observer = Callable[[int, float, np.ndarray, np.ndarray, np.ndarray, float], None]


def solve_wave(
    cfg: WaveRunConfig,
    data: InitialData,
    grid: RadialGrid,
    p: DampingProfile,
    observers: Sequence[Observer] = (),
) -> list[WaveSnapshot]:
    """March to ``cfg.T`` and return snapshots at the steps nearest ``cfg.sample_times``.

    ``u_t`` is the centred difference ``(u+ - u-)/(2 dt)`` and ``u_tt`` comes from
    the discrete equation ``u_tt = Lap_h u - a u_t``.  At ``t = 0`` the exact
    initial velocity is reported.  Observers see every step.
    """
    cfg.validate(grid, data.support_radius)
    dt = cfg.dt
    a = p.on_grid(grid).values
    kappa = 0.5 * dt * a
    n_steps = cfg.n_steps
    wanted = {}
    for ts in cfg.sample_times:
        wanted.setdefault(min(int(round(ts / dt)), n_steps), ts)

    state = initial_state(data, p, dt)
    u_prev = state.u_prev.values.copy()
    u = data.u0.values.copy()
    snaps: list[WaveSnapshot] = []
    for k in range(n_steps + 1):
        lap = laplacian_values(u, grid)
        nxt = _advance(u, u_prev, lap, kappa, dt)
        if not np.all(np.isfinite(nxt)):
            raise SolverDivergence(f"non-finite wave field at t={(k + 1) * dt:.6g}")
        for obs in observers:
            obs(k, k * dt, u_prev, u, nxt, dt)
        if k in wanted:
            if k == 0:
                ut = data.u1.values
            else:
                ut = (nxt - u_prev) / (2.0 * dt)
            utt = lap - a * ut
            utt[0] = utt[-1] = 0.0
            snaps.append(
                WaveSnapshot(k * dt, Field(u, grid), Field(ut, grid), Field(utt, grid), step=k)
            )
        u_prev, u = u, nxt
    return snaps


def check_support(s: WaveState | Field, R0: float, tol: float, t: float | None = None) -> bool:
    """True iff ``max |u|`` over nodes with ``r > R0 + t + 2 dr`` is below ``tol``."""
    if isinstance(s, WaveState):
        f, t = s.u_now, s.t if t is None else t
    else:
        f = s
        t = 0.0 if t is None else t
    return support_violation(f.values, f.grid, R0, t) < tol


def support_violation(u: np.ndarray, grid: RadialGrid, R0: float, t: float) -> float:
    outside = grid.r > R0 + t + 2.0 * grid.dr
    if not outside.any():
        return 0.0
    return float(np.max(np.abs(u[outside])))


@dataclass
class SupportMonitor:
    """Observer recording the largest amplitude outside the light cone at each step."""

    grid: RadialGrid
    R0: float
    worst: float = 0.0
    worst_time: float = 0.0
    numerical_cone_leak: float = 0.0
    history: list[float] = field(default_factory=list)

    def __call__(self, k, t, u_prev, u, u_next, dt):
        v = support_violation(u, self.grid, self.R0, t)
        self.history.append(v)
        if v > self.worst:
            self.worst, self.worst_time = v, t
        # the stencil reaches one node per step: nothing may exist beyond that
        reach = self.R0 + k * self.grid.dr + self.grid.dr
        beyond = self.grid.r > reach
        if beyond.any():
            self.numerical_cone_leak = max(
                self.numerical_cone_leak, float(np.max(np.abs(u[beyond])))
            )
