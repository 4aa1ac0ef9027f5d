"""f-minimal limits of sphere flows and reduced distance along radial paths.

Reduced distance
----------------
For a path gamma from ``(q1, t1)`` to ``(q2, t2)`` the L-length in the
background ``g_bar(t) = sigma(t) psi_t^* g`` is

    L(gamma) = int_{t1}^{t2} sqrt(t2 - t) (S_bar + |gamma'|^2_bar) dt.

With ``u = sqrt(t2 - t)`` the endpoint singularity disappears:

    L = int_0^U [ 2 u^2 S_g(psi_t gamma) / sigma
                  + (1/2) sigma F(psi_t gamma)^-2 J^2 (d gamma/du)^2 ] du

where ``J = d(psi_t)/dx``.  Paths are restricted to a line through the
origin and are described by a signed coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.optimize import brentq, minimize

from ._quadrature import QUAD_TOL
from .errors import DomainError, NoRoot, OptimizerStall, ParamError, QuadratureFailure
from .flow_engine import (
    FlowTrajectory,
    flow_map,
    flow_map_table,
    soliton_defect,
    type_one_ratio,
)
from .monotonicity_lab import DECADE
from .radial_geometry import s_scalar
from .report import CertificationReport
from .soliton_forge import SolitonData

__all__ = [
    "LimitVerdict",
    "RadialPath",
    "ReducedDistanceQuery",
    "f_minimal_roots",
    "limit_extraction",
    "l_length",
    "reduced_distance",
    "reduced_distance_limit_check",
    "write_path_table",
]


# ----------------------------------------------------------------------------
# f-minimal spheres and limits
# ----------------------------------------------------------------------------

def f_minimal_roots(soliton: SolitonData, bracket: Sequence[float], tol: float = 1e-12,
                    scan: int = 2000) -> list[float]:
    """All sign-change roots of the soliton defect inside ``bracket``.

    The bracket is scanned on ``scan`` uniform cells and every sign change is
    refined with Brent's method.

    Raises
    ------
    NoRoot
        If the defect keeps one sign on the scan.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if not (0.0 < a < b):
        raise DomainError(f"bracket must satisfy 0 < a < b, got {bracket!r}")
    x = np.linspace(a, b, scan + 1)
    d = np.atleast_1d(soliton_defect(soliton, x))
    roots = [float(r) for r in x[d == 0.0]]
    s = np.sign(d)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        roots.append(float(brentq(lambda r: soliton_defect(soliton, r), x[i], x[i + 1],
                                  xtol=tol, rtol=4 * np.finfo(float).eps)))
    if not roots:
        raise NoRoot(f"soliton defect has no sign change on [{a}, {b}]")
    return sorted(roots)


@dataclass(frozen=True)
class LimitVerdict:
    """Outcome of :func:`limit_extraction`."""

    limit_radius: float | None
    defect_at_limit: float
    converged: bool
    tail_variation: float
    tolerance: float
    reason: str = ""


def limit_extraction(traj: FlowTrajectory, tol: float = 1e-8,
                     window: float = DECADE) -> LimitVerdict:
    """Decide whether a normalized trajectory has settled on an f-minimal sphere.

    Converged means: the run reached its horizon, it spans at least
    ``window`` in s, the radius varies by at most ``tol`` over the final
    ``window`` of s, and ``|defect(rho_final)| <= 10 tol``.
    """
    if traj.kind == "background":
        traj = traj.normalized
    s, rho = traj.times, traj.radii
    if rho.size == 0:
        return LimitVerdict(None, float("nan"), False, float("nan"), tol, "empty trajectory")
    final = float(rho[-1])
    defect = float(soliton_defect(traj.soliton, final))
    tail = rho[s >= s[-1] - window]
    variation = float(np.max(tail) - np.min(tail))
    if traj.termination != "reached_horizon":
        reason = traj.termination
    elif s[-1] - s[0] < window:
        reason = "horizon shorter than the tail window"
    elif variation > tol:
        reason = "tail variation above tolerance"
    elif abs(defect) > 10 * tol:
        reason = "defect at the final radius above tolerance"
    else:
        return LimitVerdict(final, defect, True, variation, tol, "")
    return LimitVerdict(None, defect, False, variation, tol, reason)


# ----------------------------------------------------------------------------
# L-length
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialPath:
    """A path ``t -> x(t)`` on a line through the origin.

    Parameters
    ----------
    t, x : array_like
        Node times (strictly increasing) and signed positions.
    interp : {"t", "sqrt"}
        Piecewise linear in t, or piecewise linear in ``u = sqrt(t_end - t)``.
    """

    t: np.ndarray
    x: np.ndarray
    interp: str = "t"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if t.ndim != 1 or t.shape != x.shape or t.size < 2:
            raise ParamError("a path needs at least two (t, x) nodes")
        if np.any(np.diff(t) <= 0):
            raise ParamError("path times must be strictly increasing")
        if self.interp not in ("t", "sqrt"):
            raise ParamError(f"unknown interpolation {self.interp!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)


def _background_terms(soliton: SolitonData, x: np.ndarray, t: np.ndarray):
    """``S_g(psi_t x)``, ``sigma`` and ``F(psi_t x)^-2 J^2`` at paired points."""
    tau = np.asarray(soliton.s_of_t(t), dtype=float)
    phi, J = flow_map(soliton, x, tau, jacobian=True)
    r = np.abs(phi)
    S = s_scalar(soliton.metric, soliton.w, r, removable=True)
    F = soliton.F.value_at(r)
    sigma = np.asarray(soliton.sigma(t), dtype=float) * np.ones_like(r)
    return S, sigma, (J / F) ** 2


def l_length(soliton: SolitonData, path: RadialPath, tol: float = QUAD_TOL,
             panels: int = 8, max_doublings: int = 12) -> float:
    """L-length of a radial path, by Simpson quadrature in ``u = sqrt(t2 - t)``.

    Each segment is integrated with ``panels`` Simpson panels, doubled until
    the total changes by less than ``tol``.
    """
    t, x = path.t, path.x
    t2 = t[-1]
    if soliton.c == 1 and t2 >= soliton.T:
        raise DomainError("the path must end before the singular time")
    u = np.sqrt(t2 - t)  # decreasing along the path
    ua, ub = u[1:], u[:-1]
    xa, xb = x[1:], x[:-1]  # values at ua and ub

    def total(m: int) -> float:
        k = np.arange(2 * m + 1) / (2 * m)
        uu = ua[:, None] + (ub - ua)[:, None] * k  # (segments, 2m+1)
        tt = t2 - uu * uu
        if path.interp == "sqrt":
            lam = (uu - ua[:, None]) / (ub - ua)[:, None]
            gam = xa[:, None] + (xb - xa)[:, None] * lam
            vel2 = ((xb - xa) / (ub - ua))[:, None] ** 2 * np.ones_like(uu)
            S, sigma, metric = _background_terms(soliton, gam, tt)
            integrand = 2 * uu * uu * S / sigma + 0.5 * sigma * metric * vel2
        else:
            ta, tb = t[1:], t[:-1]
            lam = (tt - tb[:, None]) / (ta - tb)[:, None]
            gam = xb[:, None] + (xa - xb)[:, None] * lam
            vel2 = ((xa - xb) / (ta - tb))[:, None] ** 2 * np.ones_like(uu)
            S, sigma, metric = _background_terms(soliton, gam, tt)
            integrand = 2 * uu * uu * (S / sigma + sigma * metric * vel2)
        w = np.ones(2 * m + 1)
        w[1:-1:2], w[2:-1:2] = 4.0, 2.0
        return float(np.sum((ub - ua) / (6 * m) * (integrand @ w)))

    prev = total(panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = total(panels)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureFailure("L-length quadrature did not converge")


# ----------------------------------------------------------------------------
# reduced distance
# ----------------------------------------------------------------------------

@dataclass
class ReducedDistanceQuery:
    """Result of :func:`reduced_distance`.

    Attributes
    ----------
    base_point, probe_point : (float, float)
        ``(q2, t2)`` and ``(q1, t1)``.
    path_nodes : int
    result : float
        ``l = L_min / (2 sqrt(t2 - t1))``.
    minimizer : RadialPath
        Optimal path, piecewise linear in ``sqrt(t2 - t)``.
    L_min, L_initial : float
        L-length of the optimum and of the straight initial path.
    converged : bool
        Whether the gradient tolerance was met.
    iterations : int
    grad_inf : float
    """

    base_point: tuple
    probe_point: tuple
    path_nodes: int
    result: float
    minimizer: RadialPath
    L_min: float
    L_initial: float
    converged: bool
    iterations: int
    grad_inf: float
    message: str = ""


def _row_spline_eval(spline: CubicSpline, X: np.ndarray, rows: np.ndarray, x: np.ndarray):
    """Evaluate spline column ``rows[j]`` at ``x[j]``: value, slope, curvature."""
    i = np.clip(np.searchsorted(X, x) - 1, 0, X.size - 2)
    d = x - X[i]
    c = spline.c[:, i, rows]
    val = ((c[0] * d + c[1]) * d + c[2]) * d + c[3]
    slope = (3 * c[0] * d + 2 * c[1]) * d + c[2]
    curv = 6 * c[0] * d + 2 * c[1]
    return val, slope, curv


class _PathObjective:
    """Discrete L-length of node vectors, piecewise linear in u."""

    def __init__(self, soliton: SolitonData, q1, t1, q2, t2, m: int, table_points: int):
        self.U = math.sqrt(t2 - t1)
        self.m = m
        self.du = self.U / (m - 1)
        uq = self.U * np.arange(2 * (m - 1) + 1) / (2 * (m - 1))
        tq = t2 - uq * uq
        tq[-1] = t1
        reach = max(abs(q1), abs(q2))
        R = 1.5 * reach + 1.0
        self.X = np.linspace(-R, R, table_points)
        tau = np.asarray(soliton.s_of_t(tq), dtype=float)
        phi, J = flow_map_table(soliton, self.X, tau)
        r = np.abs(phi)
        sigma = np.asarray(soliton.sigma(tq), dtype=float)[:, None] * np.ones_like(r)
        S = s_scalar(soliton.metric, soliton.w, r, removable=True)
        F = soliton.F.value_at(r)
        A = 2 * (uq * uq)[:, None] * S / sigma
        B = sigma * (J / F) ** 2
        self.A = CubicSpline(self.X, A.T, axis=0)
        self.B = CubicSpline(self.X, B.T, axis=0)
        seg = np.arange(m - 1)
        # quadrature point p of segment k sits at u-index 2k + p
        self.rows = (2 * seg[:, None] + np.arange(3)).ravel()
        self.theta = np.tile([0.0, 0.5, 1.0], m - 1)
        self.weight = np.tile([1.0, 4.0, 1.0], m - 1) * self.du / 6.0
        self.seg = np.repeat(seg, 3)
        self.q2, self.q1 = q2, q1

    def nodes(self, interior: np.ndarray) -> np.ndarray:
        return np.concatenate(([self.q2], interior, [self.q1]))

    def _terms(self, interior: np.ndarray):
        g = self.nodes(interior)
        k, th = self.seg, self.theta
        gam = (1 - th) * g[k] + th * g[k + 1]
        v = ((g[1:] - g[:-1]) / self.du)[k]
        return k, th, v, _row_spline_eval(self.A, self.X, self.rows, gam), \
            _row_spline_eval(self.B, self.X, self.rows, gam)

    def __call__(self, interior: np.ndarray):
        k, th, v, (a, da, _), (b, db, _) = self._terms(interior)
        w = self.weight
        L = float(np.sum(w * (a + 0.5 * b * v * v)))
        pos = w * (da + 0.5 * db * v * v)
        kin = w * b * v / self.du
        grad = np.zeros(self.m)
        np.add.at(grad, k, pos * (1 - th) - kin)
        np.add.at(grad, k + 1, pos * th + kin)
        return L, grad[1:-1]

    def hessian_bands(self, interior: np.ndarray) -> np.ndarray:
        """Tridiagonal Hessian in the banded layout of ``scipy.linalg.solve_banded``."""
        k, th, v, (_, _, d2a), (b, db, d2b) = self._terms(interior)
        w, du = self.weight, self.du
        Pg = d2a + 0.5 * d2b * v * v
        cross = db * v / du
        kin = b / du ** 2
        diag = np.zeros(self.m)
        off = np.zeros(self.m - 1)
        np.add.at(diag, k, w * ((1 - th) ** 2 * Pg - 2 * (1 - th) * cross + kin))
        np.add.at(diag, k + 1, w * (th * th * Pg + 2 * th * cross + kin))
        np.add.at(off, k, w * (th * (1 - th) * Pg + (1 - 2 * th) * cross - kin))
        n = self.m - 2
        bands = np.zeros((3, n))
        bands[1] = diag[1:-1]
        bands[0, 1:] = off[1:n]
        bands[2, :-1] = off[1:n]
        return bands


def _sine_preconditioner(n_interior: int, du: float) -> np.ndarray:
    """Map sine coefficients to node offsets so the kinetic Hessian becomes I.

    The kinetic part of the discrete L-length is ``sum (dg)^2 / (2 du)``,
    whose Hessian is a scaled 1-D Laplacian diagonalized by the sine basis.
    """
    N = n_interior
    j = np.arange(1, N + 1)
    k = np.arange(1, N + 1)
    phi = np.sin(np.pi * np.outer(k, j) / (N + 1))
    eig = 4.0 / du * np.sin(np.pi * j / (2 * (N + 1))) ** 2
    return phi / np.sqrt(eig * (N + 1) / 2.0)


def _newton_polish(obj: _PathObjective, x: np.ndarray, steps: int = 8):
    """Refine a BFGS optimum with exact-Hessian Newton steps.

    Near the optimum the line search of BFGS loses resolution once L changes
    by less than its rounding error; Newton steps only need the gradient.  A
    step is kept only if it reduces the gradient norm.
    """
    L, g = obj(x)
    for _ in range(steps):
        try:
            step = solve_banded((1, 1), obj.hessian_bands(x), -g)
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(step)):
            break
        L_new, g_new = obj(x + step)
        if np.max(np.abs(g_new)) >= np.max(np.abs(g)):
            break
        x, L, g = x + step, L_new, g_new
    return x, L, g


def reduced_distance(soliton: SolitonData, q1: float, t1: float, q2: float, t2: float,
                     m_nodes: int = 64, gtol: float = 1e-8, maxiter: int = 500,
                     table_points: int = 401, strict: bool = False) -> ReducedDistanceQuery:
    """Reduced distance ``l_{q2,t2}(q1, t1)`` over radial paths.

    Interior node positions (uniform in ``u = sqrt(t2 - t)``) are optimized
    by BFGS from the path that is straight in t, in sine-basis coordinates
    that whiten the kinetic term.  Convergence is judged on the infinity
    norm of the gradient with respect to the node positions.  The background quantities
    are tabulated on a grid of signed positions at every quadrature time and
    interpolated by cubic splines, which makes the objective and its exact
    gradient cheap.

    Parameters
    ----------
    soliton : SolitonData
    q1, t1 : float
        Probe point (signed coordinate) and its time.
    q2, t2 : float
        Base point and its time, ``0 <= t1 < t2 < T``.
    m_nodes : int
        Number of path nodes including both ends, at least 8.
    gtol, maxiter : float, int
        Stopping rule: gradient infinity norm or iteration cap.
    strict : bool
        Raise :class:`OptimizerStall` instead of flagging non-convergence.
    """
    q1, t1, q2, t2 = float(q1), float(t1), float(q2), float(t2)
    if not (0.0 <= t1 < t2):
        raise DomainError(f"need 0 <= t1 < t2, got t1={t1}, t2={t2}")
    if soliton.c == 1 and t2 >= soliton.T:
        raise DomainError("t2 must precede the singular time")
    if int(m_nodes) != m_nodes or m_nodes < 8:
        raise ParamError("m_nodes must be an integer >= 8")
    m = int(m_nodes)
    obj = _PathObjective(soliton, q1, t1, q2, t2, m, table_points)
    u = obj.du * np.arange(m)
    straight = q2 + (q1 - q2) * (u * u) / (obj.U * obj.U)
    x0 = straight[1:-1]
    L0, _ = obj(x0)
    P = _sine_preconditioner(m - 2, obj.du)

    def fun(a):
        L, g = obj(x0 + P @ a)
        return L, P.T @ g

    res = minimize(fun, np.zeros(m - 2), jac=True, method="BFGS",
                   options={"gtol": 1e-3 * gtol, "maxiter": maxiter, "norm": np.inf})
    best = x0 + P @ res.x
    best, L, grad = _newton_polish(obj, best)
    grad_inf = float(np.max(np.abs(grad)))
    converged = grad_inf <= gtol
    if strict and not converged:
        raise OptimizerStall(f"gradient {grad_inf:.3e} after {res.nit} iterations")
    nodes = obj.nodes(best)
    t_nodes = t2 - u * u
    path = RadialPath(t_nodes[::-1].copy(), nodes[::-1].copy(), interp="sqrt")
    return ReducedDistanceQuery(
        base_point=(q2, t2), probe_point=(q1, t1), path_nodes=m,
        result=L / (2.0 * obj.U), minimizer=path, L_min=L, L_initial=L0,
        converged=converged, iterations=int(res.nit), grad_inf=grad_inf,
        message=str(res.message),
    )


def write_path_table(path: RadialPath, file) -> Path:
    """Two-column ``t rho`` table of a path."""
    file = Path(file)
    rows = [f"{t:.17g} {x:.17g}" for t, x in zip(path.t, path.x)]
    file.write_text("# t rho\n" + "\n".join(rows) + "\n")
    return file


def reduced_distance_limit_check(soliton: SolitonData, traj: FlowTrajectory,
                                 probe: tuple[float, Sequence[float]], t1: float | None = None,
                                 base: str = "trajectory", m_nodes: int = 32,
                                 noise: float = 1e-3) -> CertificationReport:
    """Report how ``l`` based on the flow approaches the potential.

    For every base time t in ``probe[1]`` the base point is ``x_t`` (the
    trajectory's radius, or the origin when ``base="origin"``) and two
    reduced distances are computed from time ``t1``:

    * the gap ``|l_{x_t,t}(q, t1) - f_bar(q, t1)|`` for the probe q, with
      ``f_bar(q, t1) = f(psi_{t1} q)``;
    * the bound check ``l_{x_t,t}(x_{t1}, t1) <= C sqrt(T - t1)/sqrt(t - t1)``
      with ``C = max(S_g, 0) + (n-1) * ratio^2`` from the type-I ratio.

    The verdict is the bound check; the gaps are reported together with a
    flag telling whether they decrease within ``noise``.
    """
    if traj.kind != "background":
        raise ParamError("a background trajectory is required")
    q = float(probe[0])
    times = [float(t) for t in probe[1]]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ParamError("probe times must increase")
    t1 = float(traj.times[0]) if t1 is None else float(t1)
    if base not in ("trajectory", "origin"):
        raise ParamError(f"unknown base {base!r}")

    def base_at(t):
        return 0.0 if base == "origin" else traj.background_radius_at(t)

    ratio = type_one_ratio(traj)
    rho_n = traj.normalized_radii
    S_vals = np.atleast_1d(s_scalar(soliton.metric, soliton.w, rho_n, removable=True))
    C = max(0.0, float(np.max(S_vals))) + (soliton.n - 1) * ratio * ratio
    tau1 = float(soliton.s_of_t(t1))
    f_probe = float(soliton.f.value_at(abs(flow_map(soliton, q, tau1))))
    x1 = base_at(t1)
    span = soliton.T - t1 if soliton.c == 1 else 1.0
    ells, gaps, own, bounds = [], [], [], []
    for t in times:
        xt = base_at(t)
        ell = reduced_distance(soliton, q, t1, xt, t, m_nodes=m_nodes).result
        ells.append(ell)
        gaps.append(abs(ell - f_probe))
        own.append(reduced_distance(soliton, x1, t1, xt, t, m_nodes=m_nodes).result)
        bounds.append(C * math.sqrt(span) / math.sqrt(t - t1))
    excess = max(o - b for o, b in zip(own, bounds))
    monotone = all(b <= a + noise for a, b in zip(gaps, gaps[1:]))
    return CertificationReport(
        identity="reduced_distance_type_one_bound",
        max_discrepancy=excess, tolerance=0.0, verdict=excess <= 0.0,
        samples_used=len(times),
        details={"probe": q, "probe_time": t1, "potential_at_probe": f_probe,
                 "base_times": times, "ell": ells, "gaps": gaps,
                 "gaps_monotone": monotone, "ell_on_trajectory": own,
                 "bounds": bounds, "bound_constant": C, "type_one_ratio": ratio,
                 "path_class": "radial paths only"},
    )
