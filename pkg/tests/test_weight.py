from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from dampwave.grid import DampingProfile, Field, Perturbation, build_grid, smooth_bump
from dampwave.wave import laplacian_values
from dampwave.weight import (
    AuxiliaryWeight,
    WeightConstructionError,
    assemble_A_eps,
    b1_values,
    build_b1,
    build_cutoff,
    leading_profile,
    leading_profile_derivative,
    newton_potential_radial,
    phi_weight,
    verify_elliptic_bounds,
)


def test_b1_examples():
    assert b1_values(0.0, 1.0, 1.0, 2) == pytest.approx(2.0 / 3.0)
    # <r> = 2
    assert b1_values(math.sqrt(3.0), 2.0, 2.0, 3) == pytest.approx(7.2)


def test_b1_matches_laplacian_of_leading_profile():
    p = DampingProfile(1.5, 2.0)
    errs = []
    for n in (1001, 2001):
        g = build_grid(1.0, 40.0, n, 3)
        lap = laplacian_values(leading_profile(g.r, 1.5, 2.0, 3), g)[1:-1]
        b1 = build_b1(p, g).values[1:-1]
        errs.append(np.max(np.abs(lap - b1) / b1))
    assert errs[1] < 1e-4
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_b1_over_a_tends_to_one():
    g = build_grid(1.0, 1000.0, 2000, 2)
    p = DampingProfile(1.0, 1.0)
    ratio = build_b1(p, g).values / p(g.r)
    assert abs(ratio[-1] - 1.0) < 1e-6
    assert abs(ratio[-1] - 1.0) < abs(ratio[10] - 1.0)


def test_cutoff_shape():
    g = build_grid(1.0, 20.0, 1901, 2)
    eta = build_cutoff(5.0, g).values
    assert np.all(eta[g.r <= 5.0] == 1.0)
    assert np.all(eta[g.r >= 6.0] == 0.0)
    assert 0.0 < eta[g.index_of(5.5)] < 1.0
    assert np.all(np.diff(eta) <= 0.0)
    assert eta.min() >= 0.0 and eta.max() <= 1.0


def test_cutoff_too_close_to_outer_radius():
    g = build_grid(1.0, 20.0, 191, 2)
    with pytest.raises(ValueError):
        build_cutoff(19.95, g)


def test_newton_potential_zero_source():
    g = build_grid(0.5, 10.0, 401, 3)
    assert not newton_potential_radial(Field.zeros(g)).values.any()


def test_newton_potential_rejects_unsupported_source():
    g = build_grid(0.5, 10.0, 401, 3)
    with pytest.raises(ValueError):
        newton_potential_radial(Field(np.ones(g.n), g))


def _shell(r):
    return smooth_bump((np.asarray(r) - 2.0) / 0.5)


def _direct_3d(r):
    """``int f(|y|) / (4 pi |x - y|) dy`` by nested quadrature over radius and polar angle."""

    def angular(s):
        # int over the sphere of radius s of 1/(4 pi |x-y|), with mu = cos(theta)
        val, _ = quad(lambda mu: 0.5 / math.sqrt(max(r * r + s * s - 2 * r * s * mu, 1e-300)), -1.0, 1.0,
                      limit=200)
        return val

    pts = [r] if 1.5 < r < 2.5 else None
    val, _ = quad(lambda s: _shell(s) * s * s * angular(s), 1.5, 2.5, limit=200, points=pts)
    return val


def test_newton_potential_matches_direct_3d_quadrature():
    g = build_grid(0.5, 10.0, 4001, 3)
    pot = newton_potential_radial(Field(_shell(g.r), g)).values
    for r in (0.8, 1.7, 2.0, 2.4, 4.0):
        i = g.index_of(r)
        oracle = _direct_3d(float(g.r[i]))
        assert pot[i] == pytest.approx(oracle, rel=1e-4)


@pytest.mark.parametrize("dim", [3, 4])
def test_newton_potential_far_field_mass_law(dim):
    g = build_grid(0.5, 30.0, 5901, dim)
    f = _shell(g.r)
    pot = newton_potential_radial(Field(f, g)).values
    mass, _ = quad(lambda s: _shell(s) * s ** (dim - 1), 1.5, 2.5)
    far = g.r >= 5.0
    expected = g.r[far] ** (2 - dim) * mass / (dim - 2)
    assert np.max(np.abs(pot[far] / expected - 1.0)) < 1e-8


@pytest.mark.parametrize("dim", [2, 3])
def test_newton_potential_inverts_laplacian(dim):
    # -Lap N f = f at second order
    errs = []
    for n in (1001, 2001):
        g = build_grid(0.5, 10.0, n, dim)
        f = _shell(g.r)
        lap = laplacian_values(newton_potential_radial(Field(f, g)).values, g)
        errs.append(np.max(np.abs(-lap[1:-1] - f[1:-1])))
    assert 3.3 < errs[0] / errs[1] < 4.8


def _ref_weight(dim=2, r_max=300.0, n=6000, eps=0.1, p=None):
    p = p or DampingProfile(1.0, 1.0)
    return p, assemble_A_eps(p, build_grid(1.0, r_max, n, dim), eps)


def test_assemble_reference_weight():
    p, w = _ref_weight()
    rep = w.report
    assert rep.positive and rep.ellip_pass and rep.grad_pass
    assert 0.9 - rep.ellip_tol <= rep.ellip_min and rep.ellip_max <= 1.1 + rep.ellip_tol
    assert rep.grad_ratio_sup <= rep.h + w.epsilon + 0.02
    assert w.R_eps < 300.0 and w.lambda_eps >= 0.0
    a1e, a2e = rep.growth_constants
    assert 0 < a1e <= a2e


@pytest.mark.parametrize("dim,alpha", [(2, 1.0), (3, 1.0), (3, 2.0)])
def test_assembled_weight_leading_term(dim, alpha):
    p = DampingProfile(alpha, 1.0)
    w = assemble_A_eps(p, build_grid(1.0, 400.0, 4000, dim), 0.1)
    jb = math.sqrt(1 + 400.0**2)
    lead = 1.0 / ((dim + alpha) * (2 + alpha))
    assert w.A.values[-1] / jb ** (2 + alpha) == pytest.approx(lead, rel=1e-3)
    assert w.report.passed


def test_assemble_with_perturbation_needs_positive_lambda():
    p = DampingProfile(1.0, 1.0, Perturbation(8.0, 3.0, 1.5))
    w = assemble_A_eps(p, build_grid(1.0, 200.0, 4000, 3), 0.1)
    assert w.lambda_eps > 0.0
    assert w.report.passed
    # lambda halved would break positivity or the gradient bound
    A = w.A.values - w.lambda_eps / 2
    a = p(w.grid.r)
    assert not (np.all(A > 0) and np.max(w.dA.values**2 / (a * A)) <= w.h + w.epsilon)


def test_assemble_rejects_bad_eps_and_short_grid():
    p = DampingProfile(1.0, 1.0)
    with pytest.raises(ValueError):
        assemble_A_eps(p, build_grid(1.0, 50.0, 500, 2), 0.4)
    with pytest.raises(WeightConstructionError):
        assemble_A_eps(p, build_grid(1.0, 1.5, 64, 2), 0.01)


def _weight_from(A, dA, g, p, eps=0.1):
    return AuxiliaryWeight(eps, g.r0, 0.0, Field(A, g), Field(dA, g), p)


def test_leading_profile_alone_has_unit_ratio_far_out():
    g = build_grid(1.0, 300.0, 6000, 2)
    p = DampingProfile(1.0, 1.0)
    w = _weight_from(leading_profile(g.r, 1.0, 1.0, 2), leading_profile_derivative(g.r, 1.0, 1.0, 2), g, p)
    ratio = laplacian_values(w.A.values, g)[1:-1] / p(g.r[1:-1])
    assert abs(ratio[-1] - 1.0) < 1e-4


def test_constant_weight_fails_elliptic_bounds():
    g = build_grid(1.0, 50.0, 500, 2)
    p = DampingProfile(1.0, 1.0)
    rep = verify_elliptic_bounds(_weight_from(np.ones(g.n), np.zeros(g.n), g, p), p)
    assert rep.ellip_min == 0.0 and rep.ellip_max == 0.0
    assert not rep.ellip_pass and not rep.passed


def test_weight_exports(tmp_path):
    _, w = _ref_weight(r_max=100.0, n=2000)
    w.to_csv(tmp_path / "A.csv")
    header = (tmp_path / "A.csv").read_text().splitlines()[0]
    assert header == "r,A,dA,lapA_over_a"
    w.report_to_json(tmp_path / "rep.json")
    d = json.loads((tmp_path / "rep.json").read_text())
    assert d["report"]["passed"] is True


def test_phi_basic_properties():
    g = build_grid(1.0, 50.0, 500, 2)
    p = DampingProfile(1.0, 1.0)
    A = np.where(g.r < 10, 0.0, g.r)
    w = _weight_from(A, np.where(g.r < 10, 0.0, 1.0), g, p)
    s = phi_weight(w, 2.0)
    zero = A == 0
    assert np.all(s.phi[zero] == 1.0) and np.all(s.dphi_dt[zero] == 0.0)
    assert np.all(s.dphi_dt[~zero] < 0.0)
    assert np.all(s.phi >= 1.0)
    far = phi_weight(w, 1e6)
    assert np.max(np.abs(far.phi - 1.0)) < 1e-3
    with pytest.raises(ValueError):
        phi_weight(w, -1.0)


def test_phi_derivative_formulas_and_laplacian_identity():
    _, w = _ref_weight(r_max=60.0, n=1200)
    t = 40.0
    s = phi_weight(w, t)
    c = w.h + 2 * w.epsilon
    A, dA = w.A.values, w.dA.values
    phi = np.exp(A / (c * (1 + t)))
    assert np.allclose(s.phi, phi, rtol=1e-13)
    assert np.allclose(s.dphi_dt, -A / (c * (1 + t) ** 2) * phi, rtol=1e-12)
    assert np.allclose(s.dphi_dr, dA / (c * (1 + t)) * phi, rtol=1e-12)
    # -Lap Phi + |grad Phi|^2 / Phi = -(h+2eps)^-1 (1+t)^-1 Lap_h A Phi
    ok = s.log_phi.values < 300.0  # Phi^2 stays finite
    assert ok.sum() > 100
    lhs = -s.lap_phi[ok] + s.dphi_dr[ok] ** 2 / s.phi[ok]
    rhs = -w.lap_A[ok] / (c * (1 + t)) * s.phi[ok]
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-10
