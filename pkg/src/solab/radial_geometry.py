"""Curvature kernel for conformally flat radial metrics ``g = F(r)**-2 * delta``.

Every quantity is reported in a g-orthonormal frame adapted to the radial
direction, so tensors reduce to a radial and a tangential eigenvalue.  All
functions accept scalars or numpy arrays of radii and broadcast.

Radial fields are smooth functions of ``r = |x|``.  At ``r = 0`` the quotient
``h'(r)/r`` is replaced by its limit ``h''(0)`` when the caller passes
``removable=True``; otherwise the origin is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .errors import DomainError, ParamError

__all__ = [
    "RadialField",
    "ConformalRadialMetric",
    "CurvatureSample",
    "conformal_ricci",
    "scalar_curvature",
    "laplacian_radial",
    "hessian_radial",
    "grad_norm_sq",
    "s_scalar",
    "curvature_sample",
]

FIELD_KINDS = ("analytic", "sampled-spline", "tabulated")


def _scalarize(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True, eq=False)
class RadialField:
    """A scalar function of the radius with first and second derivatives.

    Parameters
    ----------
    value, d1, d2 : callable
        Vectorized callables ``ndarray -> ndarray`` for h, h' and h''.
    r_lo, r_hi : float
        Domain bounds.  Radii outside ``[r_lo, r_hi]`` raise ``DomainError``.
    kind : str
        ``"analytic"`` for closed forms, ``"sampled-spline"`` for fields
        rebuilt from tables and ``"tabulated"`` for fields produced by
        cumulative quadrature.
    label : str
        Free-form description used in reports.
    """

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    r_lo: float = 0.0
    r_hi: float = math.inf
    kind: str = "analytic"
    label: str = ""

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ParamError(f"unknown field kind {self.kind!r}")
        if not (0.0 <= self.r_lo < self.r_hi):
            raise ParamError(f"bad domain [{self.r_lo}, {self.r_hi}]")

    # -- evaluation ---------------------------------------------------------
    def check(self, r) -> np.ndarray:
        """Return ``r`` as a float array after checking it lies in the domain."""
        r = np.asarray(r, dtype=float)
        bad = ~np.isfinite(r) | (r < self.r_lo) | (r > self.r_hi)
        if np.any(bad):
            first = r[bad].flat[0] if r.ndim else float(r)
            raise DomainError(
                f"radius {first!r} outside [{self.r_lo}, {self.r_hi}] of {self.label or 'field'}"
            )
        return r

    def contains(self, r) -> bool:
        r = np.asarray(r, dtype=float)
        return bool(np.all(np.isfinite(r) & (r >= self.r_lo) & (r <= self.r_hi)))

    def value_at(self, r):
        return _scalarize(self.value(self.check(r)))

    def d1_at(self, r):
        return _scalarize(self.d1(self.check(r)))

    def d2_at(self, r):
        return _scalarize(self.d2(self.check(r)))

    def jet(self, r):
        """Return ``(h, h', h'')`` at ``r`` after a single domain check."""
        r = self.check(r)
        return self.value(r), self.d1(r), self.d2(r)

    @property
    def domain(self) -> tuple[float, float]:
        return (self.r_lo, self.r_hi)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float, label: str = "") -> "RadialField":
        c = float(c)
        return cls(
            value=lambda r: np.full(np.shape(r), c),
            d1=lambda r: np.zeros(np.shape(r)),
            d2=lambda r: np.zeros(np.shape(r)),
            label=label or f"const {c:g}",
        )

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], label: str = "") -> "RadialField":
        """Polynomial ``sum_k coeffs[k] * r**k`` with exact derivatives."""
        p = Polynomial(np.asarray(coeffs, dtype=float))
        p1, p2 = p.deriv(1), p.deriv(2)
        return cls(
            value=lambda r: p(r), d1=lambda r: p1(r), d2=lambda r: p2(r),
            label=label or f"poly{tuple(coeffs)}",
        )

    @classmethod
    def from_samples(cls, r: Sequence[float], values: Sequence[float], label: str = "") -> "RadialField":
        """Cubic not-a-knot spline through tabulated values.

        Derivatives come from differentiating the spline.  The domain is the
        closed span of the sample radii.
        """
        r = np.asarray(r, dtype=float)
        values = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.size < 4 or r.shape != values.shape:
            raise ParamError("need at least 4 samples with matching shapes")
        if np.any(np.diff(r) <= 0):
            raise ParamError("sample radii must be strictly increasing")
        spl = CubicSpline(r, values, bc_type="not-a-knot")
        s1, s2 = spl.derivative(1), spl.derivative(2)
        return cls(
            value=lambda x: spl(x), d1=lambda x: s1(x), d2=lambda x: s2(x),
            r_lo=float(r[0]), r_hi=float(r[-1]), kind="sampled-spline", label=label,
        )


@dataclass(frozen=True, eq=False)
class ConformalRadialMetric:
    """The metric ``F(r)**-2 * delta`` on a ball or annulus of R^n.

    Parameters
    ----------
    n : int
        Dimension, at least 3.
    F : RadialField
        Conformal factor, assumed nonvanishing on its domain.
    """

    n: int
    F: RadialField

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 3:
            raise ParamError(f"dimension must be an integer >= 3, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def alpha_n(self) -> float:
        """Coupling constant ``(n - 1)/(n - 2)``."""
        return (self.n - 1) / (self.n - 2)

    def factor(self, r):
        """Return ``(F, F', F'')`` at ``r``, rejecting zeros of F."""
        F, F1, F2 = self.F.jet(r)
        if np.any(F == 0.0):
            raise DomainError("conformal factor vanishes")
        return F, F1, F2


@dataclass(frozen=True)
class CurvatureSample:
    """Curvature summary at one radius."""

    r: float
    ricci_radial: float
    ricci_tangential: float
    scalar_R: float
    S: float


def _over_r(d1, d2, r, removable: bool):
    """``d1/r`` with the removable limit ``d2`` at the origin."""
    zero = r == 0.0
    if not np.any(zero):
        return d1 / r
    if not removable:
        raise DomainError("r = 0 requires removable=True")
    safe = np.where(zero, 1.0, r)
    return np.where(zero, d2, d1 / safe)


def conformal_ricci(metric: ConformalRadialMetric, r, removable: bool = False):
    """Radial and tangential Ricci eigenvalues of ``F**-2 delta``.

    Parameters
    ----------
    metric : ConformalRadialMetric
    r : float or ndarray
        Radius, positive unless ``removable`` is set.
    removable : bool
        Allow ``r = 0`` by replacing ``F'/r`` with ``F''(0)``.

    Returns
    -------
    (ricci_radial, ricci_tangential)
        Eigenvalues per unit g-length.
    """
    r = np.asarray(r, dtype=float)
    n = metric.n
    F, F1, F2 = metric.factor(r)
    F1r = _over_r(F1, F2, r, removable)
    lap = F2 + (n - 1) * F1r
    common = F * lap - (n - 1) * F1 * F1
    rad = (n - 2) * F * F2 + common
    tan = (n - 2) * F * F1r + common
    return _scalarize(rad), _scalarize(tan)


def scalar_curvature(metric: ConformalRadialMetric, r, removable: bool = False):
    """Scalar curvature of ``F**-2 delta``.

    Evaluated from the Cartesian trace ``2(n-1) F lap(F) - n(n-1)|dF|**2``
    rather than by summing the eigenvalues, so the two routes check each
    other.
    """
    r = np.asarray(r, dtype=float)
    n = metric.n
    F, F1, F2 = metric.factor(r)
    lap = F2 + (n - 1) * _over_r(F1, F2, r, removable)
    return _scalarize(2 * (n - 1) * F * lap - n * (n - 1) * F1 * F1)


def laplacian_radial(metric: ConformalRadialMetric, h: RadialField, r, removable: bool = False):
    """Laplace-Beltrami operator of ``F**-2 delta`` applied to a radial field."""
    r = np.asarray(r, dtype=float)
    n = metric.n
    F, F1, _ = metric.factor(r)
    _, h1, h2 = h.jet(r)
    h1r = _over_r(h1, h2, r, removable)
    return _scalarize(F * F * (h2 + (n - 1) * h1r + (2 - n) * (F1 / F) * h1))


def hessian_radial(metric: ConformalRadialMetric, h: RadialField, r, removable: bool = False):
    """Radial and tangential eigenvalues of the g-Hessian of a radial field.

    Returns
    -------
    (hess_radial, hess_tangential)
    """
    r = np.asarray(r, dtype=float)
    F, F1, _ = metric.factor(r)
    _, h1, h2 = h.jet(r)
    h1r = _over_r(h1, h2, r, removable)
    rad = F * F * h2 + F * F1 * h1
    tan = F * F * h1r - F * F1 * h1
    return _scalarize(rad), _scalarize(tan)


def grad_norm_sq(metric: ConformalRadialMetric, h: RadialField, r):
    """Squared g-norm of the gradient, ``F**2 * h'**2``."""
    r = np.asarray(r, dtype=float)
    F = metric.F.value_at(r)
    h1 = h.d1_at(r)
    return _scalarize(F * F * h1 * h1)


def s_scalar(metric: ConformalRadialMetric, w: RadialField, r, removable: bool = False):
    """``S = R - alpha_n |grad w|**2``."""
    R = scalar_curvature(metric, r, removable)
    return _scalarize(R - metric.alpha_n * grad_norm_sq(metric, w, r))


def curvature_sample(metric: ConformalRadialMetric, w: RadialField, r: float,
                     removable: bool = False) -> CurvatureSample:
    """Bundle the curvature quantities at a single radius."""
    rad, tan = conformal_ricci(metric, r, removable)
    R = scalar_curvature(metric, r, removable)
    S = R - metric.alpha_n * grad_norm_sq(metric, w, r)
    return CurvatureSample(float(r), float(rad), float(tan), float(R), float(S))
