"""Weighted-area functionals along sphere flows and their certification.

For an origin-centred sphere of Euclidean radius rho the integrands are
constant on the sphere, so every functional is closed form:

    weighted_area = |S^{n-1}| rho^{n-1} F(rho)^{-(n-1)} e^{-f(rho)}

and along the normalized flow ``d/ds log(weighted_area) = -defect^2``.
Everything here is evaluated in the normalized picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples
from .flow_engine import FlowTrajectory, SphereState, soliton_defect
from .report import CertificationReport
from .soliton_forge import SolitonData

__all__ = [
    "FunctionalSample",
    "unit_sphere_area",
    "weighted_area",
    "huisken_functional",
    "dissipation",
    "half_weight",
    "functional_series",
    "verify_monotonicity",
    "half_weight_bound",
    "second_derivative_series",
    "second_derivative_bound",
    "tail_sup",
    "weighted_area_cauchy",
    "verify_rigidity",
    "DECADE",
]

DECADE = math.log(10.0)  # a factor of ten in T - t is ln(10) in s


@dataclass(frozen=True)
class FunctionalSample:
    """Functionals of one trajectory sample."""

    param_time: float
    weighted_area: float
    huisken_A: float
    dissipation: float
    half_weight: float


def unit_sphere_area(n: int) -> float:
    """Area of the unit (n-1)-sphere, ``2 pi^{n/2} / Gamma(n/2)``."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _area_factor(soliton: SolitonData, rho):
    rho = np.asarray(rho, dtype=float)
    n = soliton.n
    F = soliton.F.value_at(rho)
    return unit_sphere_area(n) * (rho / F) ** (n - 1)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def weighted_area(soliton: SolitonData, rho):
    """``int_Sigma e^{-f} dA_g`` over the sphere of Euclidean radius rho."""
    return _out(_area_factor(soliton, rho) * np.exp(-soliton.f.value_at(rho)))


def huisken_functional(soliton: SolitonData, sample):
    """Huisken-type functional ``(4 pi)^{-(n-1)/2} * weighted_area``.

    ``sample`` is a normalized radius or a :class:`SphereState`; background
    states use the normalized radius they carry.
    """
    if isinstance(sample, SphereState):
        rho = sample.rho if sample.rho_normalized is None else sample.rho_normalized
    else:
        rho = sample
    return _out((4 * math.pi) ** (-(soliton.n - 1) / 2) * weighted_area(soliton, rho))


def dissipation(soliton: SolitonData, rho):
    """``defect^2 * weighted_area``, the rate of decrease of the weighted area in s."""
    d = soliton_defect(soliton, rho)
    return _out(d * d * weighted_area(soliton, rho))


def half_weight(soliton: SolitonData, rho):
    """``int_Sigma e^{-f/2} dA_g``."""
    return _out(_area_factor(soliton, rho) * np.exp(-0.5 * soliton.f.value_at(rho)))


def _series(traj: FlowTrajectory):
    """Parameter times, normalized radii and ``ds/dparam`` per sample."""
    p = traj.times
    rho = traj.normalized_radii
    if traj.kind == "background" and traj.soliton.c == 1:
        rate = np.exp(traj.s_values)  # ds/dt = 1/(T - t)
    else:
        rate = np.ones_like(p)
    return p, rho, rate


def functional_series(traj: FlowTrajectory) -> list[FunctionalSample]:
    sol = traj.soliton
    p, rho, _ = _series(traj)
    W = np.atleast_1d(weighted_area(sol, rho))
    A = (4 * math.pi) ** (-(sol.n - 1) / 2) * W
    D = np.atleast_1d(dissipation(sol, rho))
    Hw = np.atleast_1d(half_weight(sol, rho))
    return [FunctionalSample(*map(float, row)) for row in zip(p, W, A, D, Hw)]


def _uniform_step(p: np.ndarray, minimum: int) -> float:
    if p.size < minimum:
        raise InsufficientSamples(f"need at least {minimum} samples, got {p.size}")
    d = np.diff(p)
    step = float(np.mean(d))
    if not step > 0 or np.max(np.abs(d - step)) > 1e-9 * max(1.0, abs(step)):
        raise InsufficientSamples("samples are not on a uniform grid")
    return step


def _centered_derivative(W: np.ndarray, h: float, order: int) -> np.ndarray:
    if order == 2:
        return (W[2:] - W[:-2]) / (2 * h)
    if order == 4:
        return (8 * (W[3:-1] - W[1:-3]) - (W[4:] - W[:-4])) / (12 * h)
    raise ValueError(f"order must be 2 or 4, got {order!r}")


def verify_monotonicity(traj: FlowTrajectory, tol_fd: float | None = None,
                        slack: float = 1e-12, order: int = 4) -> CertificationReport:
    """Check ``d/ds weighted_area = -dissipation`` and monotone decrease.

    Centered differences of the weighted area are compared with the
    dissipation at interior samples.  The default tolerance is
    ``max(1e-6, 10 * h^order * max|W^(order+1)|)``, with the derivative of W
    of that order estimated from differences of the dissipation.

    Parameters
    ----------
    traj : FlowTrajectory
        At least 5 samples on a uniform grid of its own parameter.  For
        background flows the rate is converted with ``ds/dt``.
    tol_fd : float, optional
        Override for the finite-difference tolerance.
    slack : float
        Allowed increase between consecutive samples.
    order : {4, 2}
        Accuracy order of the centered difference.  The second-order stencil
        has truncation error ``h^2 W'''/6``, about 1e-4 near extinction at
        ``h = 1e-3``; its discrepancy is always reported as a detail.
    """
    p, rho, rate = _series(traj)
    h = _uniform_step(p, 5)
    sol = traj.soliton
    W = np.atleast_1d(weighted_area(sol, rho))
    dW = -np.atleast_1d(dissipation(sol, rho)) * rate
    k = order // 2
    disc = float(np.max(np.abs(_centered_derivative(W, h, order) - dW[k:-k])))
    disc2 = float(np.max(np.abs(_centered_derivative(W, h, 2) - dW[1:-1])))
    third = float(np.max(np.abs(np.diff(dW, 2)))) / h ** 2
    if order == 4:
        # h^4 W^(5) is the fourth difference of W' = dW
        model = 10 * float(np.max(np.abs(np.diff(dW, 4))))
    else:
        model = 10 * h * h * third
    tol = max(1e-6, model) if tol_fd is None else float(tol_fd)
    increase = float(np.max(np.diff(W)))
    verdict = disc <= tol and increase <= slack
    return CertificationReport(
        identity="weighted_area_derivative_equals_minus_dissipation",
        max_discrepancy=disc, tolerance=tol, verdict=verdict, samples_used=int(p.size),
        details={
            "param": "s" if traj.kind == "normalized" else "t",
            "grid_step": h,
            "fd_order": order,
            "second_order_discrepancy": disc2,
            "third_derivative_estimate": third,
            "max_increase": increase,
            "monotone_slack": slack,
            "weighted_area_first": float(W[0]),
            "weighted_area_last": float(W[-1]),
            "termination": traj.termination,
        },
    )


def half_weight_bound(traj: FlowTrajectory) -> float:
    """Supremum of ``int e^{-f/2} dA`` over the samples."""
    if not traj.samples:
        return float("nan")
    _, rho, _ = _series(traj)
    return float(np.max(half_weight(traj.soliton, rho)))


def second_derivative_series(traj: FlowTrajectory):
    """Interior times and ``|W(p+h) - 2W(p) + W(p-h)| / h^2``."""
    p, rho, _ = _series(traj)
    h = _uniform_step(p, 7)
    W = np.atleast_1d(weighted_area(traj.soliton, rho))
    return p[1:-1], np.abs(W[2:] - 2 * W[1:-1] + W[:-2]) / (h * h)


def second_derivative_bound(traj: FlowTrajectory) -> float:
    """Supremum of the centered second difference of the weighted area."""
    return float(np.max(second_derivative_series(traj)[1]))


def _tail_mask(s: np.ndarray, window: float) -> np.ndarray:
    return s >= s[-1] - window


def tail_sup(traj: FlowTrajectory, window: float = DECADE) -> float:
    """Supremum of the second-difference estimate over the final ``window`` of s."""
    p, vals = second_derivative_series(traj)
    s = traj.s_values[1:-1]
    return float(np.max(vals[_tail_mask(s, window)]))


def weighted_area_cauchy(traj: FlowTrajectory, window: float = DECADE) -> float:
    """Spread of the weighted area over the final ``window`` of s."""
    _, rho, _ = _series(traj)
    W = np.atleast_1d(weighted_area(traj.soliton, rho))
    tail = W[_tail_mask(traj.s_values, window)]
    return float(np.max(tail) - np.min(tail))


def verify_rigidity(traj: FlowTrajectory, dissipation_tol: float = 1e-20,
                    variation_tol: float = 1e-8, constancy_tol: float = 1e-10) -> CertificationReport:
    """Check ``dissipation == 0  <=>  the trajectory is constant``.

    PASS when either the dissipation vanishes (within ``dissipation_tol``) and
    the radius and functional are constant, or the dissipation is positive
    somewhere and the radius moves.
    """
    _, rho, _ = _series(traj)
    sol = traj.soliton
    D = np.atleast_1d(dissipation(sol, rho))
    A = np.atleast_1d(huisken_functional(sol, rho))
    variation = float(np.max(rho) - np.min(rho))
    spread = float(np.max(A) - np.min(A))
    stationary = float(np.max(D)) <= dissipation_tol
    if stationary:
        verdict = variation <= variation_tol and spread <= constancy_tol
    else:
        verdict = variation > 0.0
    return CertificationReport(
        identity="zero_dissipation_iff_constant",
        max_discrepancy=float(np.max(D)), tolerance=dissipation_tol, verdict=verdict,
        samples_used=len(traj.samples),
        details={"stationary": stationary, "radius_variation": variation,
                 "huisken_spread": spread},
    )
