"""Weighted energies of the damped wave and the inequalities they obey.

The weight ``Phi = exp(A / ((h + 2 eps)(1 + t)))`` overflows double precision
far from the origin at small ``t`` while the solution there is (numerically)
zero, so every integrand ``f * Phi`` is evaluated as
``sign(f) exp(log|f| + log Phi)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from dampwave.grid import DampingProfile, Field, RadialGrid, quadrature_weights
from dampwave.io import write_csv
from dampwave.wave import WaveSnapshot, gradient_values
from dampwave.weight import AuxiliaryWeight, heat_exponent_h, phi_weight

ENERGY_COLUMNS = (
    "t", "E_dx", "E_dt", "E_a", "E_star", "E1", "E2",
    "l2a_u", "l2a_diff", "hardy_margin", "mono_violation",
)


def _times_phi(f: np.ndarray, log_phi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(f, dtype=float)
    nz = f != 0
    with np.errstate(over="raise"):
        out[nz] = np.sign(f[nz]) * np.exp(np.log(np.abs(f[nz])) + log_phi[nz])
    return out


def weighted_integral(f: np.ndarray, log_phi: np.ndarray, grid: RadialGrid) -> float:
    """``int f Phi dx`` over the radial grid."""
    return float(np.dot(quadrature_weights(grid), _times_phi(f, log_phi)))


@dataclass(frozen=True)
class TheoryConstants:
    N: int
    alpha: float
    epsilon: float
    h: float
    a1: float
    a2: float
    A2: float
    R0: float
    lambda0: float
    nu: float
    p_alpha: float | None

    def t_star(self, m: float) -> float:
        return 2.0 * m / self.a1

    def t_star2(self, lam: float) -> float:
        eps = self.epsilon
        return max((1.0 - eps) * lam * self.nu / eps, lam, 1.0, self.t_star(lam))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_star2_lambda0"] = self.t_star2(self.lambda0)
        return d


def theory_constants(w: AuxiliaryWeight, p: DampingProfile, R0: float) -> TheoryConstants:
    """Closed-form exponents plus constants measured on the grid (``a1``, ``a2``, ``A2``)."""
    grid = w.grid
    N, alpha, eps = grid.dim, p.alpha, w.epsilon
    h = heat_exponent_h(alpha, N)
    a1, a2 = p.growth_bounds(grid)
    A2 = w.growth_constants[1]
    lambda0 = (1.0 - eps) * (1.0 - 4.0 * eps) / ((1.0 + eps) * (h + 2.0 * eps))
    nu = 4.0 / a1 + 2.0 * A2 * (R0 + 1.0) ** 2 / (eps * a1**2) + 1.0 / (eps * a1)
    p_alpha = 2.0 * N * (2.0 + alpha) / (alpha * (N - 2)) if N >= 3 else None
    return TheoryConstants(N, alpha, eps, h, a1, a2, A2, R0, lambda0, nu, p_alpha)


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    E_dx: float
    E_dt: float
    E_a: float
    E_star: float
    E_a_ut: float  # E_a(t; u_t)
    l2a_u: float
    l2a_diff: float = math.nan

    @property
    def E1(self) -> float:
        return self.E_dx + self.E_dt

    @property
    def E2(self) -> float:
        return self.E_star + self.E_a


def compute_energies(
    u: Field,
    u_t: Field,
    v: Field | None,
    w: AuxiliaryWeight,
    p: DampingProfile,
    t: float,
) -> EnergyRecord:
    grid = u.grid
    if u_t.grid != grid or w.grid != grid or (v is not None and v.grid != grid):
        raise ValueError("all fields and the weight must share one grid")
    lp = phi_weight(w, t).log_phi.values
    a = p.on_grid(grid).values
    uu, ut = u.values, u_t.values
    du = gradient_values(uu, grid)
    qw = quadrature_weights(grid)
    l2a_u = math.sqrt(max(float(np.dot(qw, a * uu**2)), 0.0))
    l2a_diff = math.nan
    if v is not None:
        diff = uu - v.values
        l2a_diff = math.sqrt(max(float(np.dot(qw, a * diff**2)), 0.0))
    return EnergyRecord(
        t=float(t),
        E_dx=weighted_integral(du**2, lp, grid),
        E_dt=weighted_integral(ut**2, lp, grid),
        E_a=weighted_integral(a * uu**2, lp, grid),
        E_star=2.0 * weighted_integral(uu * ut, lp, grid),
        E_a_ut=weighted_integral(a * ut**2, lp, grid),
        l2a_u=l2a_u,
        l2a_diff=l2a_diff,
    )


def energies_from_snapshot(s: WaveSnapshot, w, p, v: Field | None = None) -> EnergyRecord:
    return compute_energies(s.u, s.u_t, v, w, p, s.t)


@dataclass(frozen=True)
class IdentityResidual:
    t: float
    lhs: float
    rhs: float
    terms: dict

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def _triple(s_prev: WaveSnapshot, s_mid: WaveSnapshot, s_next: WaveSnapshot):
    span = s_next.t - s_prev.t
    if not span > 0 or abs((s_mid.t - s_prev.t) - (s_next.t - s_mid.t)) > 1e-9 * span:
        raise ValueError("snapshots must be equispaced and increasing")
    return span


def e1_rhs_terms(s: WaveSnapshot, w: AuxiliaryWeight, p: DampingProfile) -> dict:
    """The two integrals on the right of the ``d/dt E1`` identity."""
    grid = s.u.grid
    ws = phi_weight(w, s.t)
    lp = ws.log_phi.values
    a = p.on_grid(grid).values
    ut = s.u_t.values
    du = gradient_values(s.u.values, grid)
    lt, lr = ws.dlog_dt, ws.dlog_dr
    q = lt * du - ut * lr
    return {
        "mixed": weighted_integral(q**2 / lt, lp, grid),
        "velocity": weighted_integral((-2.0 * a + lt - lr**2 / lt) * ut**2, lp, grid),
    }


def identity_residual_e1(
    s_prev: WaveSnapshot, s_mid: WaveSnapshot, s_next: WaveSnapshot,
    w: AuxiliaryWeight, p: DampingProfile,
) -> IdentityResidual:
    """Centred ``d/dt E1`` at ``s_mid.t`` against the right-hand side assembled from ``s_mid``."""
    span = _triple(s_prev, s_mid, s_next)
    e_prev = energies_from_snapshot(s_prev, w, p)
    e_next = energies_from_snapshot(s_next, w, p)
    terms = e1_rhs_terms(s_mid, w, p)
    return IdentityResidual(s_mid.t, (e_next.E1 - e_prev.E1) / span, sum(terms.values()), terms)


def e2_rhs_terms(s: WaveSnapshot, w: AuxiliaryWeight, p: DampingProfile) -> dict:
    grid = s.u.grid
    ws = phi_weight(w, s.t)
    lp = ws.log_phi.values
    a = p.on_grid(grid).values
    u, ut = s.u.values, s.u_t.values
    du = gradient_values(u, grid)
    lt = ws.dlog_dt
    lap_log_phi = ws.lap_log + ws.dlog_dr**2  # Lap Phi / Phi
    return {
        "u_ut_dtphi": 2.0 * weighted_integral(u * ut * lt, lp, grid),
        "ut_sq": 2.0 * weighted_integral(ut**2, lp, grid),
        "grad_sq": -2.0 * weighted_integral(du**2, lp, grid),
        "potential": weighted_integral((a * lt + lap_log_phi) * u**2, lp, grid),
    }


def identity_residual_e2(
    s_prev: WaveSnapshot, s_mid: WaveSnapshot, s_next: WaveSnapshot,
    w: AuxiliaryWeight, p: DampingProfile,
) -> IdentityResidual:
    span = _triple(s_prev, s_mid, s_next)
    e_prev = energies_from_snapshot(s_prev, w, p)
    e_next = energies_from_snapshot(s_next, w, p)
    terms = e2_rhs_terms(s_mid, w, p)
    return IdentityResidual(s_mid.t, (e_next.E2 - e_prev.E2) / span, sum(terms.values()), terms)


def write_term_breakdown(path: str | Path, residuals: Sequence[IdentityResidual]) -> Path:
    names = list(residuals[0].terms) if residuals else []
    cols = {"t": [r.t for r in residuals]}
    for k in names:
        cols[k] = [r.terms[k] for r in residuals]
    cols["rhs"] = [r.rhs for r in residuals]
    cols["lhs"] = [r.lhs for r in residuals]
    return write_csv(path, cols)


def hardy_check(record: EnergyRecord, w: AuxiliaryWeight, p: DampingProfile | None = None,
                tol: float = 1e-8) -> tuple[float, bool]:
    """Margin ``E_dx - (1-eps)/((h+2eps)(1+t)) E_a`` and whether it is ``>= -tol E_dx``."""
    c = w.h + 2.0 * w.epsilon
    margin = record.E_dx - (1.0 - w.epsilon) / (c * (1.0 + record.t)) * record.E_a
    return margin, bool(margin >= -tol * record.E_dx)


@dataclass(frozen=True)
class AppFpsReport:
    t: float
    e12_margin: float
    a_over_a_margin: float
    e21_margin: float
    e12_pass: bool
    a_over_a_pass: bool
    e21_pass: bool

    @property
    def passed(self) -> bool:
        return self.e12_pass and self.a_over_a_pass and self.e21_pass


def appfps_checks(
    s: WaveSnapshot, w: AuxiliaryWeight, p: DampingProfile, R0: float,
    record: EnergyRecord | None = None, tol: float = 1e-8,
) -> AppFpsReport:
    """The three finite-propagation inequalities at one time, with margins ``bound - value``."""
    grid = s.u.grid
    rec = record or energies_from_snapshot(s, w, p)
    a1, _ = p.growth_bounds(grid)
    A2 = w.growth_constants[1]
    lp = phi_weight(w, s.t).log_phi.values
    a = p.on_grid(grid).values
    ut = s.u_t.values
    m12 = rec.E_a_ut / a1 - rec.E_dt
    lhs = weighted_integral(w.A.values / a * ut**2, lp, grid)
    m_aa = A2 / a1 * (R0 + 1.0 + s.t) ** 2 * rec.E_dt - lhs
    m21 = 2.0 / math.sqrt(a1) * math.sqrt(max(rec.E_a * rec.E_dt, 0.0)) - abs(rec.E_star)
    return AppFpsReport(
        s.t, m12, m_aa, m21,
        m12 >= -tol * rec.E_dt,
        m_aa >= -tol * max(lhs, 0.0),
        m21 >= -tol * abs(rec.E_star),
    )


@dataclass
class EnergyMonitor:
    """Wave-solver observer tracking ``E1`` every step and the two step-wise inequalities.

    For each step ``k -> k+1`` it records
    ``[E1(k+1) - E1(k)]/dt + E_a(t_{k+1/2}; u_t)`` (nonpositive in the continuum)
    and the increment of ``G = nu (t3+t)^lam E1 + (t3+t)^lam E2`` minus the
    trapezoid of its allowed growth ``lam (1+eps)(t3+t)^(lam-1) E_a``.
    """

    w: AuxiliaryWeight
    p: DampingProfile
    constants: TheoryConstants
    times: list[float] = field(default_factory=list)
    E1: list[float] = field(default_factory=list)
    E_a: list[float] = field(default_factory=list)
    mono: list[float] = field(default_factory=list)
    composite: list[float] = field(default_factory=list)
    composite_excess: list[float] = field(default_factory=list)
    _ea_half: float | None = None

    def __post_init__(self):
        g = self.w.grid
        self._a = self.p.on_grid(g).values
        self._qw = quadrature_weights(g)
        self._A = self.w.A.values
        self._c = self.w.h + 2.0 * self.w.epsilon
        self._lam = self.constants.lambda0
        self._t3 = self.constants.t_star2(self._lam)

    def _wint(self, f, lp, m):
        return float(np.dot(self._qw[:m], _times_phi(f, lp)))

    def __call__(self, k, t, u_prev, u, u_next, dt):
        nz = np.flatnonzero((u_prev != 0) | (u != 0) | (u_next != 0))
        m = min(len(u), max(int(nz[-1]) + 3 if nz.size else 3, 3))
        grid = self.w.grid
        lp = self._A[:m] / (self._c * (1.0 + t))
        a = self._a[:m]
        ut = (u_next[:m] - u_prev[:m]) / (2.0 * dt)
        du = _grad_prefix(u, m, grid)
        e_dx = self._wint(du**2, lp, m)
        e_dt = self._wint(ut**2, lp, m)
        e_a = self._wint(a * u[:m] ** 2, lp, m)
        e_star = 2.0 * self._wint(u[:m] * ut, lp, m)
        e1 = e_dx + e_dt
        lam, t3 = self._lam, self._t3
        G = self.constants.nu * (t3 + t) ** lam * e1 + (t3 + t) ** lam * (e_star + e_a)
        if self.E1:
            dt_prev = t - self.times[-1]
            self.mono.append((e1 - self.E1[-1]) / dt_prev + self._ea_half)
            growth = 0.5 * dt_prev * lam * (1.0 + self.w.epsilon) * (
                (t3 + self.times[-1]) ** (lam - 1.0) * self.E_a[-1] + (t3 + t) ** (lam - 1.0) * e_a
            )
            self.composite_excess.append(G - self.composite[-1] - growth)
        self.times.append(t)
        self.E1.append(e1)
        self.E_a.append(e_a)
        self.composite.append(G)
        # E_a(t_{k+1/2}; u_t) with the one-sided velocity of this step
        lph = self._A[:m] / (self._c * (1.0 + t + 0.5 * dt))
        vel = (u_next[:m] - u[:m]) / dt
        self._ea_half = self._wint(a * vel**2, lph, m)

    def worst_mono(self) -> float:
        return max(self.mono) if self.mono else 0.0

    def mono_since(self, t0: float, t1: float) -> float:
        """Largest step violation on steps ending in ``(t0, t1]``."""
        vals = [m for tt, m in zip(self.times[1:], self.mono) if t0 < tt <= t1 + 1e-12]
        return max(vals) if vals else 0.0


def _grad_prefix(u: np.ndarray, m: int, grid: RadialGrid) -> np.ndarray:
    """Radial gradient of ``u`` on the first ``m`` nodes (``u`` vanishes beyond them)."""
    dr = grid.dr
    g = np.empty(m)
    ext = u[: m + 1] if m < len(u) else np.append(u, 0.0)
    g[1:] = (ext[2 : m + 1] - ext[: m - 1]) / (2.0 * dr)
    g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr)
    if m == len(u):
        g[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * dr)
    return g


def records_to_csv(
    path: str | Path,
    records: Sequence[EnergyRecord],
    hardy_margins: Sequence[float],
    mono_violations: Sequence[float],
) -> Path:
    cols = {
        "t": [r.t for r in records],
        "E_dx": [r.E_dx for r in records],
        "E_dt": [r.E_dt for r in records],
        "E_a": [r.E_a for r in records],
        "E_star": [r.E_star for r in records],
        "E1": [r.E1 for r in records],
        "E2": [r.E2 for r in records],
        "l2a_u": [r.l2a_u for r in records],
        "l2a_diff": [None if math.isnan(r.l2a_diff) else r.l2a_diff for r in records],
        "hardy_margin": list(hardy_margins),
        "mono_violation": list(mono_violations),
    }
    return write_csv(path, cols)
