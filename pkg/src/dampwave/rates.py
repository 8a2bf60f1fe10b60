"""Log-log decay fits and the closed-form exponents they are compared with."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Literal, Sequence

import numpy as np

MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class DecayFit:
    slope: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    intercept: float = 0.0
    residual_rms: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def fit_decay_slope(
    series: Sequence[tuple[float, float]] | tuple[Sequence[float], Sequence[float]],
    window: tuple[float, float],
) -> DecayFit:
    """Least-squares slope of ``log value`` against ``log t`` on ``t_lo <= t <= t_hi``.

    ``series`` is either a sequence of ``(t, value)`` pairs or a pair of arrays.
    """
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        t = np.asarray(series[0], dtype=float)
        y = np.asarray(series[1], dtype=float)
    else:
        arr = np.asarray(series, dtype=float).reshape(-1, 2)
        t, y = arr[:, 0], arr[:, 1]
    t_lo, t_hi = map(float, window)
    if t_lo < 1.0:
        raise ValueError("fit windows start at t >= 1")
    if not t_hi > t_lo:
        raise ValueError("empty fit window")
    # sampled times sit on a step grid, so allow the window to overhang by one sample spacing
    slack = float(np.median(np.diff(np.sort(t)))) if t.size > 1 else 0.0
    if t.size == 0 or t_lo < t.min() - slack - 1e-9 or t_hi > t.max() + slack + 1e-9:
        raise ValueError(f"window [{t_lo}, {t_hi}] is not inside the series span")
    sel = (t >= t_lo - 1e-9) & (t <= t_hi + 1e-9)
    n = int(sel.sum())
    if n < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} points in the window, got {n}")
    if np.any(~(y[sel] > 0)):
        raise ValueError("decay fits need strictly positive values")
    x, z = np.log(t[sel]), np.log(y[sel])
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (z - z.mean())) / sxx)
    intercept = float(z.mean() - slope * xm)
    res = z - (intercept + slope * x)
    ssr = float(np.sum(res**2))
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else math.inf
    return DecayFit(slope, stderr, (t_lo, t_hi), n, intercept, math.sqrt(ssr / n))


@dataclass(frozen=True)
class RateTable:
    N: int
    alpha: float
    epsilon: float
    cor2_exp: float
    thm1_exp: float
    propmain_Ea_exp: float
    propmain_E1_exp: float
    heat_l1_exp: float | None
    lambda0: float
    p_alpha: float | None
    delta_zero_allowed: bool

    @property
    def gap(self) -> float:
        return self.thm1_exp - self.cor2_exp

    def to_dict(self) -> dict:
        return asdict(self)


def rate_table(N: int, alpha: float, eps: float = 0.1) -> RateTable:
    if N < 2:
        raise ValueError("N must be >= 2")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    h = (2.0 + alpha) / (N + alpha)
    cor2 = (N + alpha) / (2.0 * (2.0 + alpha))
    ea = (N + alpha) / (2.0 + alpha)
    return RateTable(
        N=N,
        alpha=alpha,
        epsilon=eps,
        cor2_exp=cor2,
        thm1_exp=cor2 + (1.0 + alpha) / (2.0 + alpha),
        propmain_Ea_exp=ea,
        propmain_E1_exp=ea + 1.0,
        heat_l1_exp=0.5 if N == 2 else None,
        lambda0=(1.0 - eps) * (1.0 - 4.0 * eps) / ((1.0 + eps) * (h + 2.0 * eps)),
        p_alpha=2.0 * N * (2.0 + alpha) / (alpha * (N - 2)) if N >= 3 else None,
        delta_zero_allowed=(N == 2),
    )


Direction = Literal["two_sided", "at_least_as_fast"]


@dataclass(frozen=True)
class Verdict:
    quantity: str
    fitted_slope: float
    stderr: float
    target: float
    tol: float
    direction: str
    margin: float

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "fitted_slope": self.fitted_slope,
            "stderr": self.stderr,
            "target": self.target,
            "tol": self.tol,
            "direction": self.direction,
            "margin": self.margin,
            "pass": self.passed,
        }


def verdict(fit: DecayFit, target: float, tol: float, direction: Direction = "two_sided",
            quantity: str = "") -> Verdict:
    """Compare a fitted slope with the decay exponent ``target`` (a positive number).

    ``two_sided``: ``|slope + target| <= tol``; ``at_least_as_fast``:
    ``slope <= -target + tol``.  ``margin`` is the distance to failure.
    """
    if direction == "two_sided":
        margin = tol - abs(fit.slope + target)
    elif direction == "at_least_as_fast":
        margin = -target + tol - fit.slope
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return Verdict(quantity, fit.slope, fit.stderr, target, tol, direction, margin)
