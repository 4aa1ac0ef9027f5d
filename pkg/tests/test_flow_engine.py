import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solab import (
    DomainError,
    StepControl,
    diffeo_flow,
    inverse_diffeo,
    run_background_flow,
    run_normalized_flow,
    type_one_ratio,
)
from solab.flow_engine import (
    TRAJECTORY_HEADER,
    flow_map,
    flow_map_table,
    mean_curvature_sphere,
    soliton_defect,
    sphere_velocity,
    write_trajectory_csv,
)


def test_sphere_geometry_flat(flat3):
    # unit-normal mean curvature of a Euclidean sphere is (n-1)/rho
    assert mean_curvature_sphere(flat3.metric, 0.5) == pytest.approx(4.0)
    assert soliton_defect(flat3, 2.0) == pytest.approx(1.0)


def test_gaussian_and_cap_fixed_points(gaussian3, cap):
    assert soliton_defect(gaussian3, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert soliton_defect(gaussian3, 1.0) == pytest.approx(1.5)
    assert sphere_velocity(cap, 1 / math.sqrt(3)) == pytest.approx(0.0, abs=1e-14)


def test_normalized_gaussian_matches_closed_form(gaussian3):
    # u = rho^2 obeys du/ds = u - 4 for n = 3, so u(s) = 4 + (u0 - 4) e^s
    traj = run_normalized_flow(gaussian3, 1.5, (0.0, 2.0), StepControl(grid_step=1e-3))
    s, rho = traj.times, traj.radii
    np.testing.assert_allclose(rho ** 2, 4 - 1.75 * np.exp(s), rtol=1e-7, atol=1e-9)
    assert traj.termination == "extinction"
    assert traj.stop_time == pytest.approx(math.log(4 / 1.75), abs=1e-6)


def test_fixed_point_is_stationary(gaussian3):
    traj = run_normalized_flow(gaussian3, 2.0, (0.0, 10.0))
    assert traj.termination == "reached_horizon"
    assert np.max(np.abs(traj.radii - 2.0)) == 0.0


def test_escape_termination(gaussian3):
    traj = run_normalized_flow(gaussian3, 2.5, (0.0, 60.0),
                               StepControl(max_step=0.1, rho_ceiling=1e3))
    assert traj.termination == "escape"
    assert traj.radii[-1] < 1e3


def test_background_self_similar_sphere(gaussian3):
    # the f-minimal sphere shrinks self-similarly: rho(t) = 2 sqrt(1 - t)
    traj = run_background_flow(gaussian3, 2.0, (0.0, 0.99), StepControl(grid_step=1e-2))
    t = traj.times
    np.testing.assert_allclose(traj.radii, 2 * np.sqrt(1 - t), rtol=1e-10)
    assert type_one_ratio(traj) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert traj.background_radius_at(0.5) == pytest.approx(2 * math.sqrt(0.5), rel=1e-9)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_flat_extinction_law(n):
    from solab import builtin_solitons
    flat = builtin_solitons("flat", {"n": n})
    traj = run_background_flow(flat, 2.0, (0.0, 2.0), StepControl(grid_step=1e-3))
    t = traj.times
    np.testing.assert_allclose(traj.radii ** 2 + 2 * (n - 1) * t, 4.0, rtol=1e-8)
    assert traj.stop_time == pytest.approx(4 / (2 * (n - 1)), abs=1e-9)


def test_diffeo_gaussian_closed_form(gaussian3):
    # V = r/2, so the time-s flow is x -> x e^{s/2}; s(0.75) = log 4
    assert diffeo_flow(gaussian3, 1.0, 0.75) == pytest.approx(2.0, rel=1e-11)
    assert inverse_diffeo(gaussian3, 2.0, 0.75) == pytest.approx(1.0, rel=1e-11)
    assert inverse_diffeo(gaussian3, 2.0, 0.75, method="bracket") == pytest.approx(1.0, rel=1e-11)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-2.0, 2.0), tau=st.floats(-1.5, 1.5))
def test_flow_map_group_property(cap_flat_w, x, tau):
    y = flow_map(cap_flat_w, x, tau)
    assert flow_map(cap_flat_w, y, -tau) == pytest.approx(x, abs=1e-9)


def test_flow_map_jacobian_against_differences(cap_flat_w):
    x, tau, h = 0.8, 0.7, 1e-5
    _, J = flow_map(cap_flat_w, x, tau, jacobian=True)
    fd = (flow_map(cap_flat_w, x + h, tau) - flow_map(cap_flat_w, x - h, tau)) / (2 * h)
    assert J == pytest.approx(fd, rel=1e-7)
    phi, Jt = flow_map_table(cap_flat_w, np.array([x]), np.array([-0.3, 0.0, tau]))
    assert phi[2, 0] == pytest.approx(flow_map(cap_flat_w, x, tau), rel=1e-10)
    assert Jt[1, 0] == 1.0 and Jt[2, 0] == pytest.approx(J, rel=1e-9)


def test_trajectory_csv(gaussian3):
    traj = run_normalized_flow(gaussian3, 2.0, (0.0, 0.05), StepControl(grid_step=0.01))
    text = write_trajectory_csv(traj)
    lines = text.splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert len(lines) == 1 + len(traj)
    assert lines[1].startswith("normalized,3,gaussian,0,2,")
    assert write_trajectory_csv(traj) == text


def test_flow_errors(gaussian3):
    with pytest.raises(DomainError):
        run_normalized_flow(gaussian3, -1.0)
    with pytest.raises(DomainError):
        run_normalized_flow(gaussian3, 1.0, (1.0, 0.5))
    with pytest.raises(DomainError):
        run_background_flow(gaussian3, 1.0, (0.5, 0.2))
