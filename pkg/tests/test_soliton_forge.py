import math

import numpy as np
import pytest

from solab import (
    ConformalRadialMetric,
    DomainError,
    ParamError,
    RadialField,
    SingularCoefficient,
    SolitonData,
    UnknownName,
    builtin_solitons,
    export_soliton_table,
    import_soliton_table,
    infer_lambda,
    soliton_residuals,
    solve_potential,
    solve_w,
)
from solab.soliton_forge import (
    VALIDATION_GRID,
    assemble_soliton,
    height_to_radius,
    radius_to_height,
)

SPHERE_F = RadialField.polynomial([0.5, 0.0, 0.5])


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_gaussian_residuals_vanish(n):
    d = builtin_solitons("gaussian", {"n": n}).diagnostics
    assert d.max() <= 1e-12


def test_flat_residuals_vanish(flat3):
    assert flat3.diagnostics.max() == 0.0
    assert flat3.c == 0


def test_cap_closed_forms(cap):
    # quadratic-mode lambda = 2 - (4/3)(r^2 - 1) for eps = 1/2, n = 3
    r = np.array([0.0, 0.5, 1.0])
    np.testing.assert_allclose(cap.lam.value_at(r), 2 - (4 / 3) * (r ** 2 - 1), rtol=1e-14)
    assert cap.f.value_at(0.0) == pytest.approx(-4 / 3, rel=1e-15)
    assert cap.f.value_at(1.0) == pytest.approx(0.0, abs=1e-15)


def test_cap_lambda_modes(cap):
    consistent = builtin_solitons("cap_projected", {"eps": 0.5, "lambda_mode": "consistent"})
    # the tangential slot closes only with the radially consistent lambda
    assert consistent.diagnostics.diag <= 1e-12
    assert cap.diagnostics.diag > 1e-3
    r = np.array([0.3, 0.8, 1.7])
    np.testing.assert_allclose(infer_lambda(consistent.metric, consistent.f, r),
                               consistent.lam.value_at(r), rtol=1e-12)


def test_infer_lambda_at_origin(cap):
    got = infer_lambda(cap.metric, cap.f, 0.0, removable=True)
    assert got == pytest.approx(2 + 4 / 3, rel=1e-12)
    with pytest.raises(DomainError):
        infer_lambda(cap.metric, cap.f, 0.0)


def test_solve_potential_gaussian():
    m = ConformalRadialMetric(3, RadialField.constant(1.0))
    f = solve_potential(m, RadialField.constant(0.5), (0.1, 10.0), (0.1, 0.0025))
    r = np.linspace(0.1, 10, 50)
    np.testing.assert_allclose(f.value_at(r), r ** 2 / 4, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(f.d1_at(r), r / 2, rtol=1e-10)
    np.testing.assert_allclose(f.d2_at(r), 0.5, rtol=1e-6)
    assert f.kind == "tabulated"


def test_solve_potential_reproduces_cap_consistent():
    m = ConformalRadialMetric(3, SPHERE_F)
    K = -4 / 3
    lam = RadialField(lambda r: 2 + K * (r * r - 1) / (r * r + 1),
                      lambda r: 4 * K * r / (1 + r * r) ** 2,
                      lambda r: 4 * K * (1 - 3 * r * r) / (1 + r * r) ** 3)
    f = solve_potential(m, lam, (0.05, 0.95), (0.5, K * 0.75 / 1.25))
    r = np.linspace(0.05, 0.95, 31)
    np.testing.assert_allclose(f.value_at(r), K * (1 - r * r) / (1 + r * r), atol=1e-12)


def test_solve_potential_detects_singular_radius():
    m = ConformalRadialMetric(3, SPHERE_F)
    with pytest.raises(SingularCoefficient) as info:
        solve_potential(m, RadialField.constant(2.0), (0.5, 2.0), (0.5, 0.0))
    assert info.value.radius == pytest.approx(1.0, abs=1e-9)


def test_solve_w_constant_and_equation(gaussian3):
    w = solve_w(gaussian3.metric, gaussian3.f, (0.5, 5.0), (1.0, 0.3), 0.0)
    assert w.value_at(3.0) == 0.3
    w = solve_w(gaussian3.metric, gaussian3.f, (0.5, 5.0), (1.0, 0.0), 1.0)
    # w' = r^-(n-1) e^{r^2/4} normalized to slope 1 at r = 1
    r = np.array([0.7, 2.0, 4.5])
    np.testing.assert_allclose(w.d1_at(r), np.exp((r ** 2 - 1) / 4) / r ** 2, rtol=1e-10)
    assert w.d1_at(2.0) == pytest.approx(0.52925, rel=1e-4)


def test_w_equation_residual_against_finite_differences(cap):
    # independent oracle: second differences of w itself, not of its stored derivatives
    m, f, w = cap.metric, cap.f, cap.w
    h = 1e-4
    for r in (0.3, 0.9, 2.5):
        wp = (w.value_at(r + h) - w.value_at(r - h)) / (2 * h)
        wpp = (w.value_at(r + h) - 2 * w.value_at(r) + w.value_at(r - h)) / h ** 2
        F, F1, _ = m.factor(r)
        lap = F * F * (wpp + 2 * wp / r - F1 / F * wp)
        assert abs(lap - F * F * f.d1_at(r) * wp) <= 1e-5 * (1 + abs(lap))
    assert soliton_residuals(cap, 0.9).w_eq <= 1e-8


def test_corrupted_potential_raises_residuals(gaussian3):
    bad = SolitonData("corrupt", gaussian3.metric,
                      RadialField.polynomial([0.0, 0.0, 0.25, 1e-3]),
                      gaussian3.w, gaussian3.lam)
    d = bad.diagnostics
    assert d.diag > 1e-4 and d.offdiag > 1e-4
    assert gaussian3.diagnostics.max() < 1e-12


def test_hamilton_constant_gaussian(gaussian3):
    # S + |grad f|^2 - f = r^2/4 - r^2/4 = 0
    assert gaussian3.hamilton_constant == pytest.approx(0.0, abs=1e-15)


def test_builtin_errors():
    with pytest.raises(UnknownName):
        builtin_solitons("torus")
    with pytest.raises(ParamError):
        builtin_solitons("gaussian", {"eps": 0.5})
    with pytest.raises(ParamError):
        builtin_solitons("cap_projected", {"eps": 1.5})
    with pytest.raises(ParamError):
        builtin_solitons("gaussian", {"n": 2})


def test_time_maps(gaussian3, flat3):
    assert gaussian3.s_of_t(1 - math.exp(-2)) == pytest.approx(2.0)
    assert gaussian3.t_of_s(gaussian3.s_of_t(0.3)) == pytest.approx(0.3)
    assert gaussian3.sigma(0.25) == pytest.approx(0.75)
    assert flat3.s_of_t(0.4) == pytest.approx(0.4)


def test_stereographic_round_trip():
    for h in (-0.9, 0.0, 0.5, 1.0):
        assert radius_to_height(height_to_radius(h)) == pytest.approx(h, abs=1e-15)
    assert height_to_radius(0.5) == pytest.approx(1 / math.sqrt(3), rel=1e-15)


def test_export_import_round_trip(tmp_path, cap):
    path = export_soliton_table(cap, tmp_path / "cap.txt")
    assert path.read_text().splitlines()[0].startswith("# soliton n=3 T=1 c=1 eps=0.5")
    back = import_soliton_table(path)
    assert back.provenance == "user" and back.eps == 0.5
    r = np.linspace(0.2, 8.0, 23)
    np.testing.assert_allclose(back.f.value_at(r), cap.f.value_at(r), atol=1e-9)
    np.testing.assert_allclose(back.F.value_at(r), cap.F.value_at(r), rtol=1e-12)
    np.testing.assert_allclose(back.lam.value_at(r), cap.lam.value_at(r), rtol=1e-10)
    np.testing.assert_allclose(back.f.d1_at(r), cap.f.d1_at(r), atol=1e-6)


def test_import_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("# nothing\n1 2 3 4 5\n")
    with pytest.raises(ParamError):
        import_soliton_table(p)


def test_assemble_soliton_matches_gaussian():
    m = ConformalRadialMetric(3, RadialField.constant(1.0))
    data = assemble_soliton(m, RadialField.constant(0.5), (0.1, 10.0), (1.0, 0.25),
                            (1.0, 0.0), 0.0)
    assert data.provenance == "solved"
    r = VALIDATION_GRID[::50]
    np.testing.assert_allclose(data.f.value_at(r), r ** 2 / 4, rtol=1e-9)
    assert data.diagnostics.diag < 1e-8
