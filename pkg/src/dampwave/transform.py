"""The radial map ``Psi(x) = |x|^(alpha/2) x``, the isometry ``J`` and the transformed operator ``B``.

Under ``Psi`` the weighted generator ``-a^{-1} Lap`` becomes a uniformly
elliptic operator with an inverse-square potential; on radial functions

    B v = m~^{-1} [ -(1 + alpha/2)^2 (v'' + (N-1)/rho v') - H v / rho^2 ],

with ``H = (N-2)^2 alpha (4+alpha) / 16`` and ``m~(y) = m(Psi^{-1}(y))``,
``m(x) = |x|^{-alpha} a(x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dampwave.grid import DampingProfile, Field, RadialGrid, quadrature
from dampwave.wave import laplacian_values


@dataclass(frozen=True)
class TransformParams:
    alpha: float
    dim: int

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")

    @property
    def beta(self) -> float:
        """Power of ``|x|`` in ``J``."""
        return (self.dim - 2) * self.alpha / 4.0

    @property
    def hardy_coeff(self) -> float:
        return (self.dim - 2) ** 2 * self.alpha * (4.0 + self.alpha) / 16.0

    @property
    def flux_coeff(self) -> float:
        """``(1 + alpha/2)^2``, the radial part of the diffusion matrix."""
        return (1.0 + self.alpha / 2.0) ** 2

    @property
    def stationary_exponents(self) -> tuple[float, float]:
        """Roots ``p`` of ``(1+alpha/2)^2 p (p + N - 2) + H = 0``, larger first."""
        n2, al = self.dim - 2, self.alpha
        return -n2 * al / (2.0 * (2.0 + al)), -n2 * (4.0 + al) / (2.0 * (2.0 + al))


def psi_map(r, alpha: float):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("psi_map needs r > 0")
    return r ** (1.0 + alpha / 2.0)


def psi_inverse(rho, alpha: float):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("psi_inverse needs rho > 0")
    return rho ** (2.0 / (2.0 + alpha))


def jacobian_det(r, alpha: float, dim: int):
    return (2.0 + alpha) / 2.0 * np.asarray(r, dtype=float) ** (dim * alpha / 2.0)


@dataclass(frozen=True)
class PsiGrid:
    """The image nodes ``Psi(r_i)`` of a uniform grid; generally non-uniform."""

    base: RadialGrid
    alpha: float

    @property
    def nodes(self) -> np.ndarray:
        return psi_map(self.base.r, self.alpha)


def image_grid(grid: RadialGrid, alpha: float) -> RadialGrid:
    """Uniform grid on ``[Psi(r0), Psi(r_max)]`` with the same node count."""
    return RadialGrid(
        float(psi_map(grid.r0, alpha)), float(psi_map(grid.r_max, alpha)), grid.n, grid.dim
    )


def j_transform(v_on_psi_grid, grid: RadialGrid, params: TransformParams) -> Field:
    """``Jv(x) = sqrt((2+alpha)/2) |x|^beta v(Psi(x))`` from samples ``v(Psi(r_i))``."""
    v = v_on_psi_grid.values if isinstance(v_on_psi_grid, Field) else np.asarray(v_on_psi_grid, float)
    if v.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} samples on the image nodes, got {v.shape}")
    if isinstance(v_on_psi_grid, Field) and v_on_psi_grid.grid.dim != grid.dim:
        raise ValueError("dimension mismatch")
    c = math.sqrt((2.0 + params.alpha) / 2.0)
    return Field(c * grid.r**params.beta * v, grid)


def j_inverse(u_on_preimage, rho_grid: RadialGrid, params: TransformParams) -> Field:
    """``J^{-1}u(rho) = sqrt(2/(2+alpha)) rho^(-beta') u(Psi^{-1}(rho))`` from samples ``u(Psi^{-1}(rho_j))``.

    ``beta' = (N-2) alpha / (2 (2+alpha))``.
    """
    u = u_on_preimage.values if isinstance(u_on_preimage, Field) else np.asarray(u_on_preimage, float)
    if u.shape != (rho_grid.n,):
        raise ValueError(f"expected {rho_grid.n} samples, got {u.shape}")
    al = params.alpha
    expo = (params.dim - 2) * al / (2.0 * (2.0 + al))
    return Field(math.sqrt(2.0 / (2.0 + al)) * rho_grid.r ** (-expo) * u, rho_grid)


def m_tilde(rho_grid: RadialGrid, p: DampingProfile) -> Field:
    """``m(Psi^{-1}(y))`` with ``m(x) = |x|^{-alpha} a(x)``."""
    x = psi_inverse(rho_grid.r, p.alpha)
    return Field(x ** (-p.alpha) * p(x), rho_grid)


def nu_norm(v: Field, mt: Field) -> float:
    """``||v||_{L^2(m~ dy)}`` on a uniform image grid."""
    return math.sqrt(max(quadrature(v.values**2, mt.values, grid=v.grid), 0.0))


def apply_B_radial(v: Field, params: TransformParams, mt: Field) -> Field:
    """Centred second-order ``B v`` on a uniform image grid; boundary nodes are zero."""
    grid = v.grid
    if mt.grid != grid:
        raise ValueError("m~ must live on the same grid as v")
    if grid.dim != params.dim:
        raise ValueError("grid dimension differs from transform dimension")
    rho = grid.r
    out = -params.flux_coeff * laplacian_values(v.values, grid) - params.hardy_coeff * v.values / rho**2
    out = out / mt.values
    out[0] = out[-1] = 0.0
    return Field(out, grid)


def stationary_profile(rho_grid: RadialGrid, params: TransformParams) -> Field:
    """Radial solution of ``B psi = 0`` vanishing at the inner radius.

    ``psi(rho) = rho^p1 - rho0^(p1-p2) rho^p2`` with the two roots of the
    indicial equation; the slower decaying branch fixes the integrability
    threshold ``2N(2+alpha)/(alpha(N-2))``.
    """
    if params.dim < 3:
        raise ValueError("the stationary profile needs N >= 3")
    p1, p2 = params.stationary_exponents
    rho = rho_grid.r
    return Field(rho**p1 - rho_grid.r0 ** (p1 - p2) * rho**p2, rho_grid)


def stationary_residual(rho_grid: RadialGrid, params: TransformParams, p: DampingProfile,
                        profile: Field | None = None) -> float:
    """``||B psi||_nu / ||psi||_nu`` over the interior nodes."""
    psi = profile if profile is not None else stationary_profile(rho_grid, params)
    mt = m_tilde(rho_grid, p)
    return nu_norm(apply_B_radial(psi, params, mt), mt) / nu_norm(psi, mt)
