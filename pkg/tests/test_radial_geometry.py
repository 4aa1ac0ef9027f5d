import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from solab import (
    ConformalRadialMetric,
    DomainError,
    ParamError,
    RadialField,
    conformal_ricci,
    curvature_sample,
    grad_norm_sq,
    hessian_radial,
    laplacian_radial,
    s_scalar,
    scalar_curvature,
)


def sphere_factor():
    # F = (1 + r^2)/2 gives the round unit sphere
    return RadialField.polynomial([0.5, 0.0, 0.5])


def _symbolic_ricci(F_expr, n=3):
    """Ricci tensor of F(r)^-2 delta from Christoffel symbols in Cartesian coordinates."""
    xs = sp.symbols(f"x0:{n}", real=True)
    r = sp.sqrt(sum(x * x for x in xs))
    rs = sp.Symbol("r", positive=True)
    phi = F_expr.subs(rs, r) ** -2
    g = sp.eye(n) * phi
    ginv = sp.eye(n) / phi
    gamma = [[[sum(ginv[k, l] * (sp.diff(g[l, i], xs[j]) + sp.diff(g[l, j], xs[i])
                                  - sp.diff(g[i, j], xs[l])) for l in range(n)) / 2
               for j in range(n)] for i in range(n)] for k in range(n)]

    def ric(i, j):
        expr = 0
        for k in range(n):
            expr += sp.diff(gamma[k][i][j], xs[k]) - sp.diff(gamma[k][i][k], xs[j])
            for l in range(n):
                expr += gamma[k][k][l] * gamma[l][i][j] - gamma[k][j][l] * gamma[l][i][k]
        return expr

    # on the x0-axis: x0 radial, x1 tangential; orthonormal frame multiplies by F^2
    rad = sp.lambdify(xs, ric(0, 0) / phi)
    tan = sp.lambdify(xs, ric(1, 1) / phi)
    return rad, tan


def test_round_sphere_is_einstein():
    m = ConformalRadialMetric(3, sphere_factor())
    r = np.linspace(0.1, 5, 40)
    rad, tan = conformal_ricci(m, r)
    np.testing.assert_allclose(rad, 2.0, atol=1e-12)
    np.testing.assert_allclose(tan, 2.0, atol=1e-12)
    np.testing.assert_allclose(scalar_curvature(m, r), 6.0, atol=1e-12)


@pytest.mark.parametrize("coeffs", [[0.5, 0.0, 0.5], [1.0, 0.3, 0.2, 0.0, 0.1]])
def test_ricci_matches_symbolic_christoffel_oracle(coeffs):
    rs = sp.Symbol("r", positive=True)
    F_expr = sum(sp.Rational(str(c)) * rs ** k for k, c in enumerate(coeffs))
    rad_o, tan_o = _symbolic_ricci(F_expr)
    m = ConformalRadialMetric(3, RadialField.polynomial(coeffs))
    for r in (0.3, 1.0, 2.7):
        rad, tan = conformal_ricci(m, r)
        assert rad == pytest.approx(rad_o(r, 0.0, 0.0), rel=1e-10, abs=1e-12)
        assert tan == pytest.approx(tan_o(r, 0.0, 0.0), rel=1e-10, abs=1e-12)


def test_laplacian_matches_finite_difference_oracle():
    # Laplace-Beltrami of F^-2 delta is F^n div(F^(2-n) grad h), approximated in Cartesian coords
    n = 3
    Fc = [1.0, 0.0, 0.25]
    hc = [0.0, 0.0, 0.5, 0.1]
    F = np.polynomial.Polynomial(Fc)
    h = np.polynomial.Polynomial(hc)
    m = ConformalRadialMetric(n, RadialField.polynomial(Fc))

    def u(p):
        return h(np.linalg.norm(p))

    def flux_weight(p):
        return F(np.linalg.norm(p)) ** (2 - n)

    x = np.array([0.7, 0.4, -0.3])
    dx = 1e-4
    total = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = dx
        up = (u(x + e) - u(x)) / dx * flux_weight(x + e / 2)
        dn = (u(x) - u(x - e)) / dx * flux_weight(x - e / 2)
        total += (up - dn) / dx
    oracle = F(np.linalg.norm(x)) ** n * total
    got = laplacian_radial(m, RadialField.polynomial(hc), np.linalg.norm(x))
    assert got == pytest.approx(oracle, rel=1e-6)


def test_hessian_trace_is_laplacian():
    m = ConformalRadialMetric(4, RadialField.polynomial([1.0, 0.1, 0.3]))
    h = RadialField.polynomial([0.2, 0.0, 0.7, -0.05])
    r = np.linspace(0.2, 3, 25)
    rad, tan = hessian_radial(m, h, r)
    np.testing.assert_allclose(rad + 3 * tan, laplacian_radial(m, h, r), rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(3, 7),
    a1=st.floats(-0.5, 0.5),
    a2=st.floats(0.0, 1.0),
    a3=st.floats(-0.2, 0.2),
    r=st.floats(0.05, 4.0),
)
def test_scalar_curvature_equals_trace(n, a1, a2, a3, r):
    coeffs = [1.0, a1, a2, a3]
    F = RadialField.polynomial(coeffs)
    if F.value_at(r) <= 0.05:
        return
    m = ConformalRadialMetric(n, F)
    rad, tan = conformal_ricci(m, r)
    R = scalar_curvature(m, r)
    assert R == pytest.approx(rad + (n - 1) * tan, rel=1e-9, abs=1e-9 * (1 + abs(R)))


def test_removable_origin_matches_limit():
    m = ConformalRadialMetric(3, sphere_factor())
    with pytest.raises(DomainError):
        conformal_ricci(m, 0.0)
    rad0, tan0 = conformal_ricci(m, 0.0, removable=True)
    rad1, tan1 = conformal_ricci(m, 1e-7)
    assert rad0 == pytest.approx(rad1, rel=1e-9)
    assert tan0 == pytest.approx(tan1, rel=1e-9)
    h = RadialField.polynomial([0.0, 0.0, 0.25])
    assert laplacian_radial(m, h, 0.0, removable=True) == pytest.approx(
        laplacian_radial(m, h, 1e-7), rel=1e-9)


def test_s_scalar_and_sample():
    m = ConformalRadialMetric(3, sphere_factor())
    w = RadialField.polynomial([0.0, 1.0])
    r = 1.3
    F = m.F.value_at(r)
    assert grad_norm_sq(m, w, r) == pytest.approx(F * F)
    assert s_scalar(m, w, r) == pytest.approx(6.0 - 2.0 * F * F)
    cs = curvature_sample(m, w, r)
    assert cs.scalar_R == pytest.approx(6.0)
    assert cs.S == pytest.approx(s_scalar(m, w, r))


def test_sampled_field_derivatives_track_analytic():
    r = np.linspace(0.0, 4.0, 801)
    f = RadialField.from_samples(r, np.sin(r))
    probe = np.linspace(0.5, 3.5, 17)
    np.testing.assert_allclose(f.value_at(probe), np.sin(probe), atol=1e-9)
    np.testing.assert_allclose(f.d1_at(probe), np.cos(probe), atol=1e-7)
    np.testing.assert_allclose(f.d2_at(probe), -np.sin(probe), atol=1e-4)
    assert f.kind == "sampled-spline"


def test_domain_and_parameter_errors():
    F = RadialField.from_samples([0.5, 1.0, 1.5, 2.0], [1.0, 1.1, 1.3, 1.6])
    with pytest.raises(DomainError):
        F.value_at(3.0)
    with pytest.raises(ParamError):
        ConformalRadialMetric(2, F)
    zero = RadialField.polynomial([1.0, -1.0])
    with pytest.raises(DomainError):
        ConformalRadialMetric(3, zero).factor(1.0)


def test_alpha_n():
    assert ConformalRadialMetric(3, RadialField.constant(1.0)).alpha_n == pytest.approx(2.0)
    assert ConformalRadialMetric(5, RadialField.constant(1.0)).alpha_n == pytest.approx(4 / 3)
    assert math.isfinite(ConformalRadialMetric(4, RadialField.constant(1.0)).alpha_n)
