"""Mean curvature flow of origin-centred spheres in radial soliton backgrounds.

Round spheres stay round, so both flows reduce to scalar ODEs for the
Euclidean radius.  Throughout, H is the mean curvature with respect to the
inward unit normal (positive on small Euclidean spheres) and ``e(f)`` is the
inward normal derivative of the potential.

The normalized flow lives in the fixed metric g and the time ``s``.  The
background flow in ``g_bar(t) = sigma(t) psi_t^* g`` is recovered from it by
``x_t = psi_t^{-1}(x~_s)``.  Since the generating field ``V = F^2 f'`` of the
diffeomorphisms is autonomous in ``s``, ``psi_t`` is the time-``s(t)`` flow of
V and its inverse is the time-``(-s(t))`` flow.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BlowUp, DomainError, InverseFlowFailure, StepFloor
from .radial_geometry import ConformalRadialMetric, RadialField
from .soliton_forge import SolitonData

__all__ = [
    "SphereState",
    "FlowTrajectory",
    "StepControl",
    "mean_curvature_sphere",
    "normal_derivative_f",
    "soliton_defect",
    "sphere_velocity",
    "drift",
    "flow_map",
    "diffeo_flow",
    "inverse_diffeo",
    "run_normalized_flow",
    "run_background_flow",
    "type_one_ratio",
    "write_trajectory_csv",
    "TRAJECTORY_HEADER",
]

TRAJECTORY_HEADER = ("kind", "n", "soliton", "param_time", "rho", "H", "ef", "A_norm")
MAP_RTOL = 1e-11
MAP_ATOL = 1e-13


@dataclass(frozen=True)
class StepControl:
    """Integrator settings.

    Parameters
    ----------
    rtol, atol : float
        Tolerances of the embedded 5(4) Runge-Kutta pair.
    max_step : float
        Largest step in the normalized time s.
    grid_step : float or None
        When set, samples are taken on a uniform grid of this spacing in the
        flow's own parameter (s for normalized, t for background) instead of
        at the accepted steps.
    rho_floor, rho_ceiling : float
        Extinction and escape radii.
    """

    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = 0.01
    grid_step: float | None = None
    rho_floor: float = 1e-6
    rho_ceiling: float = 1e6


@dataclass(frozen=True)
class SphereState:
    """A concentric sphere at one flow time.

    ``rho`` is the Euclidean radius in the flow's own picture.  Background
    samples also carry the normalized radius and time they were mapped from.
    """

    rho: float
    time: float
    H: float
    ef: float
    A_norm: float
    rho_normalized: float | None = None
    s: float | None = None


@dataclass(eq=False)
class FlowTrajectory:
    """Ordered samples of one flow.

    Attributes
    ----------
    kind : {"normalized", "background"}
    soliton : SolitonData
    samples : list of SphereState
    termination : {"reached_horizon", "extinction", "escape"}
    horizon : float
        Requested final time in the flow's own parameter.
    normalized : FlowTrajectory or None
        For background flows, the normalized flow it was mapped from.
    dense : callable or None
        Continuous extension ``s -> rho~(s)`` of the normalized solution.
    stop_time : float or None
        Time of the extinction or escape event, in the flow's own parameter.
    """

    kind: str
    soliton: SolitonData
    samples: list
    termination: str
    horizon: float
    normalized: "FlowTrajectory | None" = None
    dense: object = field(default=None, repr=False)
    stop_time: float | None = None

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.samples])

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.rho for p in self.samples])

    @property
    def s_values(self) -> np.ndarray:
        """Normalized time of every sample."""
        if self.kind == "normalized":
            return self.times
        return np.array([p.s for p in self.samples])

    @property
    def normalized_radii(self) -> np.ndarray:
        if self.kind == "normalized":
            return self.radii
        return np.array([p.rho_normalized for p in self.samples])

    def background_radius_at(self, t: float) -> float:
        """Euclidean radius of the background sphere at time t (dense output)."""
        sol = self.soliton
        s = float(sol.s_of_t(t))
        if self.dense is None or not (self.s_values[0] - 1e-12 <= s <= self.s_values[-1] + 1e-12):
            raise DomainError(f"time {t} outside the integrated range")
        rho_n = float(np.atleast_1d(self.dense(s))[0])
        return float(flow_map(sol, rho_n, -s))


# ----------------------------------------------------------------------------
# sphere geometry
# ----------------------------------------------------------------------------

def mean_curvature_sphere(metric: ConformalRadialMetric, rho):
    """``H = (n-1)(F/rho - F')`` with respect to the inward normal."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("sphere radius must be positive")
    F, F1, _ = metric.factor(rho)
    H = (metric.n - 1) * (F / rho - F1)
    return float(H) if H.ndim == 0 else H


def normal_derivative_f(metric: ConformalRadialMetric, f: RadialField, rho):
    """Inward normal derivative ``e(f) = -F f'``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("sphere radius must be positive")
    ef = -metric.F.value_at(rho) * f.d1_at(rho)
    return float(ef) if np.ndim(ef) == 0 else ef


def soliton_defect(soliton: SolitonData, rho):
    """``H + e(f)``; zero exactly on f-minimal spheres."""
    return mean_curvature_sphere(soliton.metric, rho) + normal_derivative_f(
        soliton.metric, soliton.f, rho)


def sphere_velocity(soliton: SolitonData, rho):
    """Normalized-flow speed ``d rho~/ds = F^2 f' - F H = -F (H + e(f))``."""
    return -soliton.F.value_at(rho) * soliton_defect(soliton, rho)


def drift(soliton: SolitonData, x):
    """Radial component ``V = F^2 f'`` of grad f, extended oddly to signed x."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    F = soliton.F.value_at(r)
    return np.sign(x) * F * F * soliton.f.d1_at(r)


def _drift_derivative(soliton: SolitonData, x):
    r = np.abs(np.asarray(x, dtype=float))
    F, F1, _ = soliton.metric.factor(r)
    _, f1, f2 = soliton.f.jet(r)
    return 2 * F * F1 * f1 + F * F * f2


# ----------------------------------------------------------------------------
# soliton diffeomorphisms
# ----------------------------------------------------------------------------

def flow_map(soliton: SolitonData, x, tau, jacobian: bool = False):
    """Time-``tau`` flow of the drift field, vectorized over points.

    Parameters
    ----------
    soliton : SolitonData
    x : float or array_like
        Signed radial coordinates on a line through the origin.
    tau : float or array_like
        Flow times, broadcast against ``x``; negative values run backwards.
    jacobian : bool
        Also return ``d(phi)/dx``.

    Returns
    -------
    phi or (phi, J)

    Raises
    ------
    BlowUp
        If some flow line leaves the domain of F or f.
    """
    x, tau = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(tau, dtype=float))
    shape = x.shape
    x0, tau = x.ravel().copy(), tau.ravel().copy()
    m = x0.size
    r_hi = min(soliton.F.r_hi, soliton.f.r_hi, 1e12)
    if np.any(np.abs(x0) > r_hi):
        raise DomainError("starting point outside the soliton domain")
    live = tau != 0.0
    phi, J = x0.copy(), np.ones(m)
    if np.any(live):
        tl = tau[live]

        def rhs(_, y):
            z = y[: tl.size]
            dz = tl * drift(soliton, np.clip(z, -r_hi, r_hi))
            if not jacobian:
                return dz
            return np.concatenate((dz, tl * _drift_derivative(soliton, np.clip(z, -r_hi, r_hi))
                                   * y[tl.size:]))

        def leave(_, y):
            return r_hi - np.max(np.abs(y[: tl.size]))

        leave.terminal = True
        y0 = x0[live] if not jacobian else np.concatenate((x0[live], np.ones(tl.size)))
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=MAP_RTOL,
                        atol=MAP_ATOL, events=leave)
        if sol.status == 1:
            raise BlowUp("diffeomorphism flow line left the domain")
        if sol.status != 0:
            raise BlowUp(f"diffeomorphism flow failed: {sol.message}")
        phi[live] = sol.y[: tl.size, -1]
        if jacobian:
            J[live] = sol.y[tl.size:, -1]
    phi = phi.reshape(shape)
    if jacobian:
        J = J.reshape(shape)
        return (float(phi), float(J)) if phi.ndim == 0 else (phi, J)
    return float(phi) if phi.ndim == 0 else phi


def flow_map_table(soliton: SolitonData, x, taus):
    """Flow a fixed set of points to many times with a single integration.

    Returns arrays ``phi[j, i]`` and ``J[j, i]`` for ``taus[j]`` and ``x[i]``.
    """
    x = np.asarray(x, dtype=float)
    taus = np.asarray(taus, dtype=float)
    m = x.size
    r_hi = min(soliton.F.r_hi, soliton.f.r_hi, 1e12)
    phi = np.empty((taus.size, m))
    J = np.empty((taus.size, m))

    def rhs(_, y):
        z = np.clip(y[:m], -r_hi, r_hi)
        return np.concatenate((drift(soliton, z), _drift_derivative(soliton, z) * y[m:]))

    y0 = np.concatenate((x, np.ones(m)))
    for sign in (1.0, -1.0):
        pick = np.flatnonzero(sign * taus > 0)
        if not pick.size:
            continue
        order = pick[np.argsort(sign * taus[pick])]
        ts = taus[order]
        sol = solve_ivp(rhs, (0.0, ts[-1]), y0, method="DOP853", rtol=MAP_RTOL,
                        atol=MAP_ATOL, t_eval=ts)
        if sol.status != 0:
            raise BlowUp(f"diffeomorphism flow failed: {sol.message}")
        phi[order] = sol.y[:m].T
        J[order] = sol.y[m:].T
    zero = taus == 0.0
    phi[zero] = x
    J[zero] = 1.0
    return phi, J


def diffeo_flow(soliton: SolitonData, r0: float, t: float) -> float:
    """Position at time t of the flow line of ``grad f / sigma`` through r0.

    The reference slice is ``t = T - 1`` where the map is the identity; for
    the steady fixture (c = 0) it is ``t = 0``.
    """
    return flow_map(soliton, r0, float(soliton.s_of_t(t)))


def inverse_diffeo(soliton: SolitonData, y: float, t: float, method: str = "flow") -> float:
    """Solve ``diffeo_flow(r0, t) = y`` for r0.

    ``method="flow"`` integrates the drift backwards; ``method="bracket"``
    runs Brent's method on :func:`diffeo_flow` to 1e-12.
    """
    tau = float(soliton.s_of_t(t))
    if method == "flow":
        try:
            return flow_map(soliton, y, -tau)
        except BlowUp as exc:
            raise InverseFlowFailure(str(exc)) from None
    if method != "bracket":
        raise ValueError(f"unknown method {method!r}")
    if y == 0.0:
        return 0.0

    def g(r0):
        return diffeo_flow(soliton, r0, t) - y

    lo, hi = 0.0, max(abs(y), 1.0)
    for _ in range(60):
        if np.sign(g(lo)) != np.sign(g(hi)):
            return float(brentq(g, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps))
        hi *= 2.0
    raise InverseFlowFailure(f"no bracket for the inverse at y = {y}")


# ----------------------------------------------------------------------------
# flows
# ----------------------------------------------------------------------------

def _states(soliton: SolitonData, rho: np.ndarray):
    m = soliton.metric
    H = mean_curvature_sphere(m, rho)
    ef = normal_derivative_f(m, soliton.f, rho)
    return np.atleast_1d(H), np.atleast_1d(ef)


def _integrate(soliton: SolitonData, rho0: float, s0: float, s1: float,
               ctrl: StepControl, s_eval: np.ndarray | None):
    """Integrate the sphere ODE in ``u = rho^2``.

    ``du/ds = 2 rho v(rho)`` is a smooth function of u for smooth radial data
    (``rho v`` is even in rho), so the variable stays regular through
    extinction where ``d rho/ds`` blows up like ``1/rho``.
    """
    if not rho0 > 0:
        raise DomainError("initial radius must be positive")
    ceiling = min(ctrl.rho_ceiling, soliton.F.r_hi, soliton.f.r_hi)
    u_floor = ctrl.rho_floor ** 2

    def rhs(_, y):
        rho = math.sqrt(max(y[0], 0.25 * u_floor))
        return [2.0 * rho * sphere_velocity(soliton, rho)]

    def extinct(_, y):
        return y[0] - u_floor

    def escape(_, y):
        return ceiling * ceiling - y[0]

    extinct.terminal = escape.terminal = True
    extinct.direction = escape.direction = -1
    sol = solve_ivp(rhs, (s0, s1), [rho0 * rho0], method="RK45", rtol=ctrl.rtol,
                    atol=ctrl.atol, max_step=ctrl.max_step, t_eval=s_eval,
                    events=(extinct, escape), dense_output=True)
    if sol.status == -1:
        raise StepFloor(sol.message)
    if sol.status == 1:
        termination = "extinction" if sol.t_events[0].size else "escape"
    else:
        termination = "reached_horizon"
    events = [e for e in sol.t_events if e.size]
    stop = float(events[0][0]) if events else None
    return sol, termination, stop


def _radius_interpolant(sol):
    def rho(s):
        return np.sqrt(np.maximum(sol.sol(s), 0.0))[0]

    return rho


def _uniform_grid(start: float, stop: float, step: float) -> np.ndarray:
    k = int(math.floor((stop - start) / step + 1e-9))
    return start + step * np.arange(k + 1)


def run_normalized_flow(soliton: SolitonData, rho0: float, s_span: Sequence[float] | None = None,
                        step_ctrl: StepControl = StepControl()) -> FlowTrajectory:
    """Integrate ``d rho~/ds = F^2 f' - F H`` from ``rho~(s0) = rho0``.

    Parameters
    ----------
    soliton : SolitonData
    rho0 : float
        Initial Euclidean radius.
    s_span : (s0, s_max), optional
        Defaults to ``(-log T, -log T + 40)``.
    step_ctrl : StepControl

    Returns
    -------
    FlowTrajectory
        Samples at accepted steps, or on the uniform grid of
        ``step_ctrl.grid_step``.  Termination is ``reached_horizon``,
        ``extinction`` (radius below the floor) or ``escape`` (radius above
        the ceiling).
    """
    s0 = soliton.s_start if s_span is None else float(s_span[0])
    s1 = s0 + 40.0 if s_span is None else float(s_span[1])
    if not s1 > s0:
        raise DomainError("empty s-span")
    s_eval = None if step_ctrl.grid_step is None else _uniform_grid(s0, s1, step_ctrl.grid_step)
    sol, term, stop = _integrate(soliton, float(rho0), s0, s1, step_ctrl, s_eval)
    s, rho = sol.t, np.sqrt(sol.y[0])
    if s_eval is None and term != "reached_horizon":
        s, rho = s[:-1], rho[:-1]  # drop the event point
    H, ef = _states(soliton, rho)
    scale = math.sqrt(soliton.n - 1)
    samples = [SphereState(float(r), float(t), float(h), float(e), abs(float(h)) / scale)
               for r, t, h, e in zip(rho, s, H, ef)]
    return FlowTrajectory("normalized", soliton, samples, term, s1, dense=_radius_interpolant(sol), stop_time=stop)


def run_background_flow(soliton: SolitonData, rho0: float, t_span: Sequence[float],
                        step_ctrl: StepControl = StepControl()) -> FlowTrajectory:
    """MCF of a sphere in ``g_bar(t) = sigma(t) psi_t^* g``.

    The normalized flow is integrated in s and every sample is mapped back
    by ``x_t = psi_t^{-1}(x~_s)``.  Curvatures scale as
    ``H_bar = H_g / sqrt(sigma)``.

    Parameters
    ----------
    soliton : SolitonData
    rho0 : float
        Euclidean radius of the sphere at ``t_span[0]``.
    t_span : (t0, t_max)
        With ``0 <= t0 < t_max < T`` for shrinking solitons.
    step_ctrl : StepControl
        ``grid_step`` is a step in t.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (0.0 <= t0 < t1):
        raise DomainError(f"bad time span {t_span!r}")
    s0, s1 = float(soliton.s_of_t(t0)), float(soliton.s_of_t(t1))
    try:
        rho0_n = flow_map(soliton, float(rho0), s0)
    except BlowUp as exc:
        raise InverseFlowFailure(str(exc)) from None
    t_grid = None if step_ctrl.grid_step is None else _uniform_grid(t0, t1, step_ctrl.grid_step)
    s_eval = None if t_grid is None else np.asarray(soliton.s_of_t(t_grid), dtype=float)
    if s_eval is not None:
        s_eval[0], s_eval[-1] = s0, min(s_eval[-1], s1)
    sol, term, stop = _integrate(soliton, rho0_n, s0, s1, step_ctrl, s_eval)
    s, rho_n = sol.t, np.sqrt(sol.y[0])
    if s_eval is None and term != "reached_horizon":
        s, rho_n = s[:-1], rho_n[:-1]
    t = t_grid[: s.size] if t_grid is not None else np.asarray(soliton.t_of_s(s), dtype=float)
    sigma = np.exp(-s) if soliton.c == 1 else np.ones_like(s)
    try:
        rho = flow_map(soliton, rho_n, -s)
    except BlowUp as exc:
        raise InverseFlowFailure(str(exc)) from None
    H_g, ef_g = _states(soliton, rho_n)
    root = np.sqrt(sigma)
    H, ef = H_g / root, ef_g / root
    scale = math.sqrt(soliton.n - 1)
    rho = np.atleast_1d(rho)
    samples = [SphereState(float(r), float(tt), float(h), float(e), abs(float(h)) / scale,
                           rho_normalized=float(rn), s=float(ss))
               for r, tt, h, e, rn, ss in zip(rho, t, H, ef, rho_n, s)]
    normalized_samples = [SphereState(float(rn), float(ss), float(h), float(e),
                                      abs(float(h)) / scale)
                          for rn, ss, h, e in zip(rho_n, s, H_g, ef_g)]
    normalized = FlowTrajectory("normalized", soliton, normalized_samples, term, s1,
                                dense=_radius_interpolant(sol), stop_time=stop)
    stop_t = None if stop is None else float(soliton.t_of_s(stop))
    return FlowTrajectory("background", soliton, samples, term, t1,
                          normalized=normalized, dense=_radius_interpolant(sol), stop_time=stop_t)


def type_one_ratio(traj: FlowTrajectory) -> float:
    """``sup sqrt(sigma) |A_bar|`` (background) or ``sup |A_g|`` (normalized)."""
    if not traj.samples:
        return float("nan")
    A = np.array([p.A_norm for p in traj.samples])
    if traj.kind == "background":
        sol = traj.soliton
        sigma = np.exp(-traj.s_values) if sol.c == 1 else sol.T - traj.times
        A = np.sqrt(sigma) * A
    return float(np.max(A))


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def trajectory_rows(traj: FlowTrajectory) -> Iterable[list[str]]:
    for p in traj.samples:
        yield [traj.kind, str(traj.soliton.n), traj.soliton.name, _fmt(p.time), _fmt(p.rho),
               _fmt(p.H), _fmt(p.ef), _fmt(p.A_norm)]


def write_trajectory_csv(traj: FlowTrajectory, path=None) -> str:
    """Write the trajectory CSV; return its text.  ``path=None`` only returns it."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    w.writerows(trajectory_rows(traj))
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
