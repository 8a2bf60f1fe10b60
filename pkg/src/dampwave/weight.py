"""Auxiliary function ``A_eps`` with ``(1-eps) a <= Lap A_eps <= (1+eps) a`` and the weight ``Phi_eps``.

Recipe: the explicit profile ``a0 <r>^(2+alpha) / ((N+alpha)(2+alpha))`` has
Laplacian ``b1``; the remainder ``b2 = a - b1`` is cut off beyond ``R_eps`` and
corrected by its Newton potential, and a constant ``lambda_eps`` is added.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson

from dampwave.grid import DampingProfile, Field, RadialGrid, japanese_bracket
from dampwave.io import write_csv, write_json
from dampwave.wave import laplacian_values

CUTOFF_WIDTH = 1.0
MAX_DOUBLINGS = 80


class WeightConstructionError(RuntimeError):
    """The grid is too short (or eps too small) to build ``A_eps``."""


def heat_exponent_h(alpha: float, dim: int) -> float:
    return (2.0 + alpha) / (dim + alpha)


def b1_values(r, alpha: float, a0: float, dim: int):
    """``a0 <r>^alpha - a0 alpha/(N+alpha) <r>^(alpha-2)``; defined for every ``r >= 0``."""
    jb = japanese_bracket(r)
    return a0 * jb**alpha - a0 * alpha / (dim + alpha) * jb ** (alpha - 2.0)


def leading_profile(r, alpha: float, a0: float, dim: int):
    return a0 / ((dim + alpha) * (2.0 + alpha)) * japanese_bracket(r) ** (2.0 + alpha)


def leading_profile_derivative(r, alpha: float, a0: float, dim: int):
    r = np.asarray(r, dtype=float)
    return a0 / (dim + alpha) * japanese_bracket(r) ** alpha * r


def build_b1(p: DampingProfile, grid: RadialGrid) -> Field:
    return Field(b1_values(grid.r, p.alpha, p.a0, grid.dim), grid)


def cutoff_values(r, R_eps: float, width: float = CUTOFF_WIDTH):
    """C-infinity monotone step: 1 on ``r <= R_eps``, 0 on ``r >= R_eps + width``."""
    s = (np.asarray(r, dtype=float) - R_eps) / width

    def f(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    up, down = f(1.0 - s), f(s)
    return up / (up + down)


def build_cutoff(R_eps: float, grid: RadialGrid) -> Field:
    if R_eps >= grid.r_max - 2.0 * grid.dr:
        raise ValueError(f"cutoff radius {R_eps} too close to r_max={grid.r_max}")
    return Field(cutoff_values(grid.r, R_eps), grid)


def _cumulative(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    return cumulative_simpson(values, dx=grid.dr, initial=0.0)


def _newton_parts(source: Field, grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Newton potential of a radial source (zero inside ``r0``) and its radial derivative."""
    f = source.values
    if grid.dim < 2:
        raise ValueError("Newton potential needs dim >= 2")
    if f[-1] != 0.0 or f[-2] != 0.0:
        raise ValueError("source must be compactly supported inside the grid")
    r = grid.r
    N = grid.dim
    mass = _cumulative(f * r ** (N - 1), grid)  # int_{r0}^{r} f s^{N-1} ds
    if N == 2:
        g = _cumulative(f * r * np.log(r), grid)
        pot = -np.log(r) * mass - (g[-1] - g)
    else:
        g = _cumulative(f * r, grid)
        pot = (r ** (2.0 - N) * mass + (g[-1] - g)) / (N - 2.0)
    dpot = -(r ** (1.0 - N)) * mass
    return pot, dpot


def newton_potential_radial(source: Field, grid: RadialGrid | None = None) -> Field:
    """``(N * source)(r)`` with the fundamental solution of ``-Lap``.

    Shell decomposition: ``(N-2)^-1 [r^(2-N) int_0^r f s^(N-1) ds + int_r^inf f s ds]``
    for ``N >= 3`` and ``-int f(s) s log max(r, s) ds`` for ``N = 2``.
    """
    grid = grid or source.grid
    pot, _ = _newton_parts(source, grid)
    return Field(pot, grid)


@dataclass(frozen=True)
class VerificationReport:
    ellip_min: float
    ellip_max: float
    ellip_tol: float
    ellip_pass: bool
    growth_constants: tuple[float, float]
    grad_ratio_sup: float
    grad_pass: bool
    tail_ratio_min: float
    tail_ratio_max: float
    positive: bool
    h: float
    epsilon: float

    @property
    def ellip_margin(self) -> tuple[float, float]:
        return self.ellip_min, self.ellip_max

    @property
    def passed(self) -> bool:
        return self.ellip_pass and self.grad_pass and self.positive

    def to_dict(self) -> dict:
        d = asdict(self)
        d["growth_constants"] = list(self.growth_constants)
        d["passed"] = self.passed
        return d


@dataclass(frozen=True)
class AuxiliaryWeight:
    epsilon: float
    R_eps: float
    lambda_eps: float
    A: Field
    dA: Field
    profile: DampingProfile
    report: VerificationReport | None = None

    @property
    def grid(self) -> RadialGrid:
        return self.A.grid

    @property
    def h(self) -> float:
        return heat_exponent_h(self.profile.alpha, self.grid.dim)

    @property
    def lap_A(self) -> np.ndarray:
        """``Lap_h A`` with the boundary nodes copied from their neighbours."""
        lap = laplacian_values(self.A.values, self.grid)
        lap[0], lap[-1] = lap[1], lap[-2]
        return lap

    @property
    def growth_constants(self) -> tuple[float, float]:
        ratio = self.A.values / japanese_bracket(self.grid.r) ** (2.0 + self.profile.alpha)
        return float(ratio.min()), float(ratio.max())

    def to_csv(self, path: str | Path) -> Path:
        a = self.profile.on_grid(self.grid).values
        ratio = laplacian_values(self.A.values, self.grid) / a
        ratio[0] = ratio[-1] = np.nan
        return write_csv(
            path, {"r": self.grid.r, "A": self.A.values, "dA": self.dA.values, "lapA_over_a": ratio}
        )

    def report_to_json(self, path: str | Path) -> Path:
        payload = {
            "epsilon": self.epsilon,
            "R_eps": self.R_eps,
            "lambda_eps": self.lambda_eps,
            "report": (self.report or verify_elliptic_bounds(self, self.profile)).to_dict(),
        }
        return write_json(path, payload)


def _grad_ratio(A: np.ndarray, dA: np.ndarray, a: np.ndarray) -> np.ndarray:
    return dA**2 / (a * A)


def _find_R_eps(grid: RadialGrid, ratio: np.ndarray, eps: float) -> float:
    bad = np.nonzero(np.abs(ratio) > eps)[0]
    if bad.size == 0:
        return grid.r0
    if bad[-1] >= grid.n - 1:
        raise WeightConstructionError(
            f"|b2|/a exceeds eps={eps} up to r_max={grid.r_max}; extend the grid"
        )
    return float(grid.r[bad[-1] + 1])


def assemble_A_eps(p: DampingProfile, grid: RadialGrid, eps: float) -> AuxiliaryWeight:
    """Build ``A_eps``, pick ``R_eps`` and ``lambda_eps`` deterministically, and verify."""
    if not 0.0 < eps < 1.0 / 3.0:
        raise ValueError(f"eps must lie in (0, 1/3), got {eps}")
    r = grid.r
    N, alpha = grid.dim, p.alpha
    a = p.on_grid(grid).values
    b1 = b1_values(r, alpha, p.a0, N)
    b2 = a - b1
    R_eps = _find_R_eps(grid, b2 / a, eps)
    if R_eps + CUTOFF_WIDTH >= grid.r_max - 2.0 * grid.dr:
        raise WeightConstructionError(
            f"cutoff support [{R_eps}, {R_eps + CUTOFF_WIDTH}] does not fit below r_max={grid.r_max}"
        )
    eta = build_cutoff(R_eps, grid).values
    pot, dpot = _newton_parts(Field(eta * b2, grid), grid)
    base = leading_profile(r, alpha, p.a0, N) - pot
    dA = leading_profile_derivative(r, alpha, p.a0, N) - dpot
    h = heat_exponent_h(alpha, N)

    def acceptable(lam):
        A = base + lam
        return bool(np.all(A > 0) and _grad_ratio(A, dA, a).max() <= h + eps)

    lam = 0.0
    if not acceptable(lam):
        lam = max(1.0, float(np.max(np.abs(base[r <= R_eps + CUTOFF_WIDTH])))) * 2.0**-10
        for _ in range(MAX_DOUBLINGS):
            if acceptable(lam):
                break
            lam *= 2.0
        else:
            raise WeightConstructionError(
                "no lambda_eps makes A positive with |A'|^2/(aA) <= h + eps; "
                "the grid is too short or eps too small"
            )
    w = AuxiliaryWeight(eps, R_eps, lam, Field(base + lam, grid), Field(dA, grid), p)
    report = verify_elliptic_bounds(w, p)
    return AuxiliaryWeight(eps, R_eps, lam, w.A, w.dA, p, report)


def verify_elliptic_bounds(w: AuxiliaryWeight, p: DampingProfile) -> VerificationReport:
    """Check the discrete Laplacian of ``A`` against ``[(1-eps) a, (1+eps) a]``.

    The discretisation tolerance is a Richardson estimate: the same stencil on
    every other node has twice the spacing, so ``|Lap_2h - Lap_h| / 3`` bounds
    the leading error of ``Lap_h``.
    """
    grid = w.grid
    A = w.A.values
    a = p.on_grid(grid).values
    r = grid.r
    dr = grid.dr
    eps = w.epsilon
    lap_h = laplacian_values(A, grid)[1:-1]
    ratio = lap_h / a[1:-1]

    rr = r[2:-2]
    lap_2h = (A[4:] - 2.0 * A[2:-2] + A[:-4]) / (4.0 * dr**2) + (grid.dim - 1) / rr * (
        A[4:] - A[:-4]
    ) / (4.0 * dr)
    tol = float(np.max(np.abs(lap_2h - lap_h[1:-1]) / (3.0 * a[2:-2]))) if rr.size else 0.0

    positive = bool(np.all(A > 0))
    h = heat_exponent_h(p.alpha, grid.dim)
    with np.errstate(divide="ignore", invalid="ignore"):
        gr = _grad_ratio(A, w.dA.values, a)
    grad_sup = float(np.max(gr)) if positive else math.inf
    tail = r >= r[-1] / 10.0
    growth = w.growth_constants
    return VerificationReport(
        ellip_min=float(ratio.min()),
        ellip_max=float(ratio.max()),
        ellip_tol=tol,
        ellip_pass=bool(ratio.min() >= 1.0 - eps - tol and ratio.max() <= 1.0 + eps + tol),
        growth_constants=growth,
        grad_ratio_sup=grad_sup,
        grad_pass=bool(grad_sup <= h + eps),
        tail_ratio_min=float(np.min(gr[tail])) if positive else math.nan,
        tail_ratio_max=float(np.max(gr[tail])) if positive else math.nan,
        positive=positive,
        h=h,
        epsilon=eps,
    )


@dataclass(frozen=True)
class WeightSnapshot:
    """``Phi_eps(., t) = exp(A / ((h + 2 eps)(1 + t)))`` kept in log form.

    ``phi`` overflows to ``inf`` far from the support at small ``t``; energies
    work with ``log_phi`` and the logarithmic derivatives instead.
    """

    t: float
    log_phi: Field
    dlog_dt: np.ndarray  # d_t Phi / Phi
    dlog_dr: np.ndarray  # d_r Phi / Phi
    lap_log: np.ndarray  # Lap(log Phi) = Lap_h A / ((h+2eps)(1+t))

    @property
    def phi(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_phi.values)

    @property
    def dphi_dt(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.dlog_dt * self.phi

    @property
    def dphi_dr(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.dlog_dr * self.phi

    @property
    def lap_phi(self) -> np.ndarray:
        """``Lap Phi = (Lap log Phi + |grad log Phi|^2) Phi``."""
        with np.errstate(over="ignore", invalid="ignore"):
            return (self.lap_log + self.dlog_dr**2) * self.phi


def phi_weight(w: AuxiliaryWeight, t: float) -> WeightSnapshot:
    if t < 0:
        raise ValueError("t must be nonnegative")
    c = w.h + 2.0 * w.epsilon
    A = w.A.values
    log_phi = A / (c * (1.0 + t))
    return WeightSnapshot(
        t=t,
        log_phi=Field(log_phi, w.grid),
        dlog_dt=-A / (c * (1.0 + t) ** 2),
        dlog_dr=w.dA.values / (c * (1.0 + t)),
        lap_log=w.lap_A / (c * (1.0 + t)),
    )
