"""Radial gradient shrinking extended Ricci solitons.

A radial soliton on ``(R^n, F**-2 delta)`` is a potential f, a scalar w and a
(possibly radius dependent) lambda such that

    Ric + Hess f - alpha_n dw (x) dw = lambda g,    lap w = <grad f, grad w>.

For radial data the tangential slot of the first equation is algebraic in
f', and the w-equation is a first order linear ODE in w'.  This module solves
both, evaluates every residual and ships the closed-form solitons used as
fixtures throughout the package.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ._quadrature import BASE_PANELS, CumulativeIntegral
from .errors import DomainError, ParamError, SingularCoefficient, UnknownName
from .radial_geometry import (
    ConformalRadialMetric,
    RadialField,
    _over_r,
    grad_norm_sq,
    hessian_radial,
    laplacian_radial,
    conformal_ricci,
    s_scalar,
)

__all__ = [
    "SolitonData",
    "ResidualVector",
    "solve_potential",
    "infer_lambda",
    "solve_w",
    "soliton_residuals",
    "hamilton_shift",
    "assemble_soliton",
    "builtin_solitons",
    "BUILTIN_NAMES",
    "height_to_radius",
    "radius_to_height",
    "export_soliton_table",
    "import_soliton_table",
    "VALIDATION_GRID",
]

VALIDATION_GRID = np.linspace(0.1, 10.0, 500)
# rows written by export_soliton_table: r = 0.05, 0.055, ..., 10
EXPORT_GRID = 0.05 + 0.005 * np.arange(1991)
# computational domain of the cap's w (its integrating factor is singular at 0)
CAP_W_DOMAIN = (0.05, 20.0)

BUILTIN_NAMES = ("gaussian", "cap_projected", "flat")
PROVENANCES = ("builtin", "solved", "user")


@dataclass(frozen=True)
class ResidualVector:
    """Absolute residuals of the four soliton identities.

    Attributes hold floats for a single radius or arrays for a grid.
    """

    diag: float
    offdiag: float
    w_eq: float
    hamilton: float

    def max(self) -> float:
        return float(max(np.max(self.diag), np.max(self.offdiag),
                         np.max(self.w_eq), np.max(self.hamilton)))

    def as_dict(self) -> dict:
        return {"diag": self.diag, "offdiag": self.offdiag,
                "w_eq": self.w_eq, "hamilton": self.hamilton}


@dataclass(frozen=True, eq=False)
class SolitonData:
    """A complete radial soliton package.

    Parameters
    ----------
    name : str
    metric : ConformalRadialMetric
    f, w, lam : RadialField
        Potential, scalar field and (possibly radial) soliton function lambda.
    T : float
        Singular time; the reference slice is ``t = T - 1``.
    c : int
        1 for shrinking solitons.  0 marks the steady flat fixture, whose
        diffeomorphisms and scaling are trivial.
    provenance : str
        ``builtin``, ``solved`` or ``user``.
    eps : float or None
        Cap height parameter when relevant.
    grid : ndarray
        Validation radii.
    """

    name: str
    metric: ConformalRadialMetric
    f: RadialField
    w: RadialField
    lam: RadialField
    T: float = 1.0
    c: int = 1
    provenance: str = "builtin"
    eps: float | None = None
    grid: np.ndarray = field(default_factory=lambda: VALIDATION_GRID.copy())

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ParamError(f"unknown provenance {self.provenance!r}")
        if self.c not in (0, 1):
            raise ParamError("only shrinking (c = 1) solitons and the steady flat fixture (c = 0) are supported")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ParamError(f"T must be positive, got {self.T!r}")

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def F(self) -> RadialField:
        return self.metric.F

    # -- time parameterizations --------------------------------------------
    def sigma(self, t):
        """Scale factor of the background metric: ``T - t`` (shrinking) or 1."""
        t = np.asarray(t, dtype=float)
        if self.c == 0:
            return np.ones_like(t) if t.ndim else 1.0
        if np.any(t >= self.T):
            raise DomainError(f"time {t!r} at or beyond T = {self.T}")
        return self.T - t

    def s_of_t(self, t):
        """Normalized time ``s = -log(T - t)`` (or ``s = t`` when c = 0)."""
        if self.c == 0:
            return t
        return -np.log(self.sigma(t))

    def t_of_s(self, s):
        if self.c == 0:
            return s
        return self.T - np.exp(-np.asarray(s, dtype=float))

    @property
    def s_start(self) -> float:
        """Normalized time of ``t = 0``."""
        return float(self.s_of_t(0.0))

    # -- diagnostics ----------------------------------------------------------
    @cached_property
    def hamilton_constant(self) -> float:
        return hamilton_shift(self, self.grid)

    @cached_property
    def diagnostics(self) -> ResidualVector:
        """Maxima of the four residuals over the validation grid."""
        res = soliton_residuals(self, self.grid)
        return ResidualVector(*(float(np.max(v)) for v in
                                (res.diag, res.offdiag, res.w_eq, res.hamilton)))


# ----------------------------------------------------------------------------
# first equation: f' from lambda, lambda from f'
# ----------------------------------------------------------------------------

def _slope_and_denominator(metric: ConformalRadialMetric, lam: RadialField, r: np.ndarray):
    n = metric.n
    F, F1, F2 = metric.factor(r)
    q = F1 / F
    F1r = _over_r(F1, F2, r, True)
    num = lam.value_at(r) / (F * F) - (2 * n - 3) * F1r / F - F2 / F + (n - 1) * q * q
    den = 1.0 - r * q
    with np.errstate(divide="ignore", invalid="ignore"):
        return r * num / den, den


def _potential_slope(metric: ConformalRadialMetric, lam: RadialField, a: float, b: float):
    """Vectorized f'(r), with one-sided extrapolation where 1 - r F'/F ~ 0."""

    def raw(r):
        return _slope_and_denominator(metric, lam, np.asarray(r, dtype=float))

    def slope(r):
        r = np.asarray(r, dtype=float)
        val, den = raw(r)
        bad = np.abs(den) < 1e-9
        if np.any(bad):
            val = np.array(val, dtype=float, copy=True)
            rb = r[bad]
            step = 1e-4 * np.maximum(1.0, rb)
            away = np.where(rb > 0.5 * (a + b), -1.0, 1.0) * step
            g1, g2, g3 = (raw(rb + k * away)[0] for k in (1, 2, 3))
            val[bad] = 3.0 * g1 - 3.0 * g2 + g3
        return val

    return slope


def _fd_derivative(g: Callable, a: float, b: float):
    """Fourth-order finite-difference derivative of a vectorized function on [a, b]."""

    def d(r):
        r = np.asarray(r, dtype=float)
        h = np.minimum(1e-3 * np.maximum(1.0, np.abs(r)), (b - a) / 8.0)
        lo = r - 2 * h < a
        hi = (r + 2 * h > b) & ~lo
        mid = ~(lo | hi)
        out = np.empty(np.shape(r))
        if np.any(mid):
            x, hh = r[mid], h[mid]
            out[mid] = (g(x - 2 * hh) - 8 * g(x - hh) + 8 * g(x + hh) - g(x + 2 * hh)) / (12 * hh)
        for mask, sgn in ((lo, 1.0), (hi, -1.0)):
            if np.any(mask):
                x, hh = r[mask], sgn * h[mask]
                out[mask] = (-25 * g(x) + 48 * g(x + hh) - 36 * g(x + 2 * hh)
                             + 16 * g(x + 3 * hh) - 3 * g(x + 4 * hh)) / (12 * hh)
        return out

    return d


def _find_singular_radius(metric: ConformalRadialMetric, a: float, b: float) -> float | None:
    x = np.linspace(a, b, BASE_PANELS + 1)[1:-1]
    if x.size == 0:
        return None
    F, F1, _ = metric.factor(x)
    den = 1.0 - x * F1 / F
    zero = np.flatnonzero(den == 0.0)
    if zero.size:
        return float(x[zero[0]])
    flips = np.flatnonzero(np.sign(den[:-1]) != np.sign(den[1:]))
    if not flips.size:
        return None
    i = flips[0]

    def g(r):
        F, F1, _ = metric.factor(r)
        return 1.0 - r * F1 / F

    return float(brentq(g, x[i], x[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))


def _check_domain(domain) -> tuple[float, float]:
    a, b = (float(v) for v in domain)
    if not (0.0 <= a < b and math.isfinite(b)):
        raise DomainError(f"domain must be a finite interval with 0 <= a < b, got {domain!r}")
    return a, b


def solve_potential(metric: ConformalRadialMetric, lam: RadialField, domain,
                    f_anchor: tuple[float, float]) -> RadialField:
    """Solve the tangential soliton equation for the potential f.

    The equation is algebraic in f', which is returned in closed form; f itself
    is the Richardson-controlled cumulative Simpson integral of f' anchored at
    ``f(r0) = f0``.

    Parameters
    ----------
    metric : ConformalRadialMetric
    lam : RadialField
        Soliton function lambda(r), constant in the classical case.
    domain : (float, float)
        Closed interval ``[a, b]`` with ``a >= 0``.  The coefficient
        ``1/r - F'/F`` may vanish at an endpoint but not inside.
    f_anchor : (float, float)
        ``(r0, f0)`` with ``r0`` in the domain.

    Returns
    -------
    RadialField
        Tabulated field whose ``d1`` is the exact algebraic slope.

    Raises
    ------
    SingularCoefficient
        If ``1/r - F'/F`` changes sign inside the domain.
    """
    a, b = _check_domain(domain)
    r0, f0 = float(f_anchor[0]), float(f_anchor[1])
    if not (a <= r0 <= b):
        raise DomainError(f"anchor radius {r0} outside [{a}, {b}]")
    metric.F.check([a, b])
    lam.check([a, b])
    r_star = _find_singular_radius(metric, a, b)
    if r_star is not None:
        raise SingularCoefficient(r_star)
    slope = _potential_slope(metric, lam, a, b)
    prim = CumulativeIntegral(slope, a, b, r0, f0)
    return RadialField(value=prim, d1=slope, d2=_fd_derivative(slope, a, b),
                       r_lo=a, r_hi=b, kind="tabulated", label="solved potential")


def infer_lambda(metric: ConformalRadialMetric, f: RadialField, r, removable: bool = False):
    """Soliton function lambda(r) implied by a given potential f."""
    r = np.asarray(r, dtype=float)
    n = metric.n
    F, F1, F2 = metric.factor(r)
    _, f1, f2 = f.jet(r)
    q = F1 / F
    F1r = _over_r(F1, F2, r, removable)
    f1r = _over_r(f1, f2, r, removable)
    lam = F * F * ((2 * n - 3) * F1r / F + f1r + F2 / F - (n - 1) * q * q - q * f1)
    return float(lam) if lam.ndim == 0 else lam


# ----------------------------------------------------------------------------
# second equation: w
# ----------------------------------------------------------------------------

def solve_w(metric: ConformalRadialMetric, f: RadialField, domain,
            w_anchor: tuple[float, float], slope: float) -> RadialField:
    """Solve ``w'' + ((n-1)/r - (n-2)F'/F - f') w' = 0``.

    Uses the integrating factor ``w'(r) = slope * exp(-int_{r0}^r P)`` and a
    second cumulative quadrature for w.

    Parameters
    ----------
    metric : ConformalRadialMetric
    f : RadialField
        Potential.
    domain : (float, float)
        Closed interval; must avoid ``r = 0`` unless ``slope == 0``, in which
        case the constant solution is returned on all of ``[0, inf)``.
    w_anchor : (float, float)
        ``(r0, w0)``.
    slope : float
        ``w'(r0)``.
    """
    a, b = _check_domain(domain)
    r0, w0 = float(w_anchor[0]), float(w_anchor[1])
    if not (a <= r0 <= b):
        raise DomainError(f"anchor radius {r0} outside [{a}, {b}]")
    slope = float(slope)
    if slope == 0.0:
        return RadialField.constant(w0, label="constant w")
    if a == 0.0:
        raise DomainError("the w integrating factor is singular at r = 0")
    n = metric.n
    metric.F.check([a, b])
    f.check([a, b])

    def P(r):
        F, F1, _ = metric.factor(r)
        return (n - 1) / r - (n - 2) * F1 / F - f.d1_at(r)

    log_factor = CumulativeIntegral(P, a, b, r0, 0.0)

    def w1(r):
        return slope * np.exp(-log_factor(r))

    def w2(r):
        r = np.asarray(r, dtype=float)
        return -P(r) * w1(r)

    prim = CumulativeIntegral(w1, a, b, r0, w0)
    return RadialField(value=prim, d1=w1, d2=w2, r_lo=a, r_hi=b,
                       kind="tabulated", label="solved w")


# ----------------------------------------------------------------------------
# residuals
# ----------------------------------------------------------------------------

def _hamilton_raw(data: SolitonData, r):
    S = s_scalar(data.metric, data.w, r)
    return S + grad_norm_sq(data.metric, data.f, r) - data.f.value_at(r)


def hamilton_shift(data: SolitonData, grid) -> float:
    """Additive normalization ``C* = median(S + |grad f|^2 - f)`` over a grid."""
    return float(np.median(_hamilton_raw(data, np.asarray(grid, dtype=float))))


def soliton_residuals(data: SolitonData, r) -> ResidualVector:
    """Evaluate the four soliton residuals at ``r`` (scalar or array).

    Returns
    -------
    ResidualVector
        ``diag``: tangential slot of ``Ric + Hess f - alpha dw dw - lambda g``;
        ``offdiag``: the bracket multiplying ``x_i x_j`` in the same tensor
        equation; ``w_eq``: ``lap w - <grad f, grad w>``; ``hamilton``:
        ``S + |grad f|^2 - f - C*`` with ``C*`` from :func:`hamilton_shift`.
    """
    r = np.asarray(r, dtype=float)
    m = data.metric
    n = m.n
    F, F1, F2 = m.factor(r)
    _, f1, f2 = data.f.jet(r)
    w1 = data.w.d1_at(r)
    _, ric_tan = conformal_ricci(m, r)
    _, hess_tan = hessian_radial(m, data.f, r)
    diag = np.abs(ric_tan + hess_tan - data.lam.value_at(r))
    bracket = ((n - 2) * (F2 / F - F1 / (r * F)) + f2 - f1 / r
               + 2 * (F1 / F) * f1 - m.alpha_n * w1 * w1)
    w_eq = laplacian_radial(m, data.w, r) - F * F * f1 * w1
    ham = _hamilton_raw(data, r) - data.hamilton_constant
    out = [np.abs(v) for v in (diag, bracket, w_eq, ham)]
    if r.ndim == 0:
        out = [float(v) for v in out]
    return ResidualVector(*out)


# ----------------------------------------------------------------------------
# builtins
# ----------------------------------------------------------------------------

def _cap_constant(eps: float, n: int) -> float:
    return eps * (n - 1) / (eps * eps - 1.0)


def _cap_potential(K: float) -> RadialField:
    def value(r):
        q = r * r
        return K * (1 - q) / (1 + q)

    def d1(r):
        return -4 * K * r / (1 + r * r) ** 2

    def d2(r):
        q = r * r
        return -4 * K * (1 - 3 * q) / (1 + q) ** 3

    return RadialField(value, d1, d2, label="cap potential")


def _cap_lambda(K: float, n: int, mode: str) -> RadialField:
    if mode == "quadratic":
        return RadialField.polynomial([n - 1 - K, 0.0, K], label="cap lambda (quadratic)")
    if mode == "consistent":
        def value(r):
            q = r * r
            return n - 1 + K * (q - 1) / (q + 1)

        def d1(r):
            return 4 * K * r / (1 + r * r) ** 2

        def d2(r):
            q = r * r
            return 4 * K * (1 - 3 * q) / (1 + q) ** 3

        return RadialField(value, d1, d2, label="cap lambda (consistent)")
    raise ParamError(f"lambda_mode must be 'quadratic' or 'consistent', got {mode!r}")


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 3:
        raise ParamError(f"n must be an integer >= 3, got {n!r}")
    return int(n)


def builtin_solitons(name: str, params: dict | None = None, **kwargs) -> SolitonData:
    """Closed-form solitons.

    Parameters
    ----------
    name : {"gaussian", "cap_projected", "flat"}
        ``gaussian``: F = 1, f = r^2/4, w = 0, lambda = 1/2.
        ``cap_projected``: the round-sphere metric F = (1 + r^2)/2 carrying the
        stereographic image of the spherical-cap potential.
        ``flat``: F = 1, f = w = lambda = 0 with c = 0, a steady degenerate
        fixture whose diffeomorphisms are the identity.
    params : dict, optional
        ``n`` (default 3), ``T`` (default 1).  For the cap also ``eps``
        (default 1/2), ``lambda_mode`` (``"quadratic"`` or ``"consistent"``),
        ``w_anchor`` (default ``(1.0, 0.0)``) and ``w_slope`` (default 1).

    Returns
    -------
    SolitonData
    """
    p = dict(params or {})
    p.update(kwargs)
    allowed = {"gaussian": {"n", "T"}, "flat": {"n", "T"},
               "cap_projected": {"n", "T", "eps", "lambda_mode", "w_anchor", "w_slope"}}
    if name not in allowed:
        raise UnknownName(f"unknown soliton {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    extra = set(p) - allowed[name]
    if extra:
        raise ParamError(f"unexpected parameters for {name}: {sorted(extra)}")
    n = _check_n(p.get("n", 3))
    T = float(p.get("T", 1.0))
    one = RadialField.constant(1.0, label="F = 1")
    metric_flat = ConformalRadialMetric(n, one)
    zero = RadialField.constant(0.0, label="0")
    if name == "gaussian":
        data = SolitonData("gaussian", metric_flat, RadialField.polynomial([0, 0, 0.25], "r^2/4"),
                           zero, RadialField.constant(0.5, "1/2"), T=T, c=1)
    elif name == "flat":
        data = SolitonData("flat", metric_flat, zero, zero, zero, T=T, c=0)
    else:
        eps = float(p.get("eps", 0.5))
        if not (0.0 < eps < 1.0):
            raise ParamError(f"eps must lie in (0, 1), got {eps!r}")
        K = _cap_constant(eps, n)
        metric = ConformalRadialMetric(n, RadialField.polynomial([0.5, 0.0, 0.5], "(1+r^2)/2"))
        f = _cap_potential(K)
        lam = _cap_lambda(K, n, p.get("lambda_mode", "quadratic"))
        r0, w0 = p.get("w_anchor", (1.0, 0.0))
        w = solve_w(metric, f, CAP_W_DOMAIN, (r0, w0), p.get("w_slope", 1.0))
        data = SolitonData("cap_projected", metric, f, w, lam, T=T, c=1, eps=eps)
    data.diagnostics  # record residual maxima at construction
    return data


def assemble_soliton(metric: ConformalRadialMetric, lam: RadialField, domain,
                     f_anchor: tuple[float, float], w_anchor: tuple[float, float],
                     w_slope: float, T: float = 1.0, name: str = "solved",
                     grid=None) -> SolitonData:
    """Build a soliton by solving for f and then w on ``domain``."""
    f = solve_potential(metric, lam, domain, f_anchor)
    w = solve_w(metric, f, domain, w_anchor, w_slope)
    if grid is None:
        a, b = _check_domain(domain)
        grid = np.linspace(max(a, 1e-3), b, 500)
    data = SolitonData(name, metric, f, w, lam, T=T, c=1, provenance="solved",
                       grid=np.asarray(grid, dtype=float))
    data.diagnostics
    return data


# ----------------------------------------------------------------------------
# stereographic coordinates
# ----------------------------------------------------------------------------

def height_to_radius(h: float) -> float:
    """Stereographic radius of the latitude at height h on the unit sphere."""
    h = float(h)
    if not (-1.0 < h <= 1.0):
        raise ParamError(f"height must lie in (-1, 1], got {h!r}")
    return math.sqrt((1.0 - h) / (1.0 + h))


def radius_to_height(r: float) -> float:
    """Inverse of :func:`height_to_radius`."""
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ParamError(f"radius must be finite and >= 0, got {r!r}")
    q = r * r
    return (1.0 - q) / (1.0 + q)


# ----------------------------------------------------------------------------
# plain-text tables
# ----------------------------------------------------------------------------

_HEADER = re.compile(
    r"#\s*soliton\s+n=(?P<n>\S+)\s+T=(?P<T>\S+)\s+c=(?P<c>\S+)\s+eps=(?P<eps>\S+)\s*$")


def export_soliton_table(data: SolitonData, path, grid=None) -> Path:
    """Write ``r F f w lambda`` rows with 17 significant digits."""
    r = EXPORT_GRID if grid is None else np.asarray(grid, dtype=float)
    cols = [r, data.F.value_at(r), data.f.value_at(r), data.w.value_at(r), data.lam.value_at(r)]
    eps = "none" if data.eps is None else format(data.eps, ".17g")
    lines = [f"# soliton n={data.n} T={data.T:.17g} c={data.c} eps={eps}"]
    for row in zip(*cols):
        lines.append(" ".join(format(float(v), ".17g") for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def import_soliton_table(path, name: str | None = None) -> SolitonData:
    """Rebuild a soliton from a table written by :func:`export_soliton_table`.

    Every column is interpolated by a not-a-knot cubic spline.
    """
    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise ParamError(f"{path}: empty soliton table")
    m = _HEADER.match(text[0].strip())
    if not m:
        raise ParamError(f"{path}: bad header {text[0]!r}")
    try:
        n = _check_n(int(m["n"]))
        T, c = float(m["T"]), int(m["c"])
        eps = None if m["eps"] == "none" else float(m["eps"])
        rows = np.array([[float(x) for x in line.split()] for line in text[1:]
                         if line.strip() and not line.lstrip().startswith("#")])
    except ValueError as exc:
        raise ParamError(f"{path}: {exc}") from None
    if rows.ndim != 2 or rows.shape[1] != 5:
        raise ParamError(f"{path}: expected 5 columns per row")
    r = rows[:, 0]
    label = name or path.stem
    fields = [RadialField.from_samples(r, rows[:, k], label=f"{label}:{col}")
              for k, col in enumerate(("F", "f", "w", "lambda"), start=1)]
    metric = ConformalRadialMetric(n, fields[0])
    lo, hi = r[0], r[-1]
    grid = VALIDATION_GRID[(VALIDATION_GRID >= lo) & (VALIDATION_GRID <= hi)]
    data = SolitonData(label, metric, fields[1], fields[2], fields[3], T=T, c=c,
                       provenance="user", eps=eps, grid=grid)
    data.diagnostics
    return data
