"""Velocity / lambda / tilt duality, rate functions and their conjugates.

Every map here is evaluated through differences psi_n(x + a) - psi_n(x)
computed without cancellation, so directions very close to the LLN
velocity (lambda in the millions) stay accurate.

Scalar inputs give scalar outputs; arrays of xi1 (or lambda, t) are
accepted everywhere and processed elementwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, vectorize

from .errors import ConvergenceError, DomainError
from .specfun import Branch, ModelParams, _psi_diff, _psi_diff_u

__all__ = [
    "Velocity",
    "DualPoint",
    "ExpansionCoeffs",
    "xi_of_lambda",
    "lambda_of_xi",
    "lambda_of_tilt",
    "tilt_of_lambda",
    "rate_iq",
    "rate_ia",
    "iq_star",
    "busemann_means",
    "iq_expansion_coeffs",
    "LLN_TOL",
]

LLN_TOL = 1e-14


@dataclass(frozen=True)
class Velocity:
    xi1: float

    def __post_init__(self):
        if not (0.0 <= self.xi1 <= 1.0):
            raise DomainError(f"xi1 must lie in [0, 1], got {self.xi1!r}")
        object.__setattr__(self, "xi1", float(self.xi1))

    @property
    def xi2(self) -> float:
        return 1.0 - self.xi1

    @property
    def is_interior(self) -> bool:
        return 0.0 < self.xi1 < 1.0

    def as_tuple(self) -> tuple[float, float]:
        return (self.xi1, self.xi2)


@dataclass(frozen=True)
class DualPoint:
    lam: float
    branch: Branch
    xi: Velocity
    tilt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        if not (self.lam > 0):
            raise DomainError("lambda must be positive (possibly infinite)")
        if (self.branch is Branch.AT_LLN) != math.isinf(self.lam):
            raise DomainError("lambda is infinite exactly on the LLN branch")


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Taylor coefficients of the rate functions around the LLN velocity."""

    iq: tuple[float, float, float]
    ia: tuple[float, float, float]
    gap4: float

    @property
    def gap_coeff(self) -> float:
        return self.gap4 / 24.0


# ---------------------------------------------------------------------------
# kernels; (a, b) is (alpha, beta) on the right branch and (beta, alpha) on
# the left branch, and "main" is the coordinate xi1 resp. xi2

@njit(cache=True)
def _xi_main(a, b, lam):
    if math.isinf(lam):
        return a / (a + b)
    return _psi_diff(1, lam, a) / _psi_diff(1, lam, a + b)


@njit(cache=True)
def _lam_of_main(a, b, target):
    """Bisection in log(lambda) for xi_main(lambda) = target in (chi, 1)."""
    lo = 1e-8
    hi = 1e8
    k = 0
    while _xi_main(a, b, lo) < target:
        lo *= 1e-4
        k += 1
        if lo < 1e-300 or k > 100:
            return math.nan
    k = 0
    while _xi_main(a, b, hi) > target:
        hi *= 1e4
        k += 1
        if hi > 1e300 or k > 100:
            return math.nan
    llo = math.log(lo)
    lhi = math.log(hi)
    for _ in range(300):
        mid = 0.5 * (llo + lhi)
        if mid == llo or mid == lhi:
            break
        if _xi_main(a, b, math.exp(mid)) > target:
            llo = mid
        else:
            lhi = mid
    l1 = math.exp(llo)
    l2 = math.exp(lhi)
    if abs(_xi_main(a, b, l1) - target) <= abs(_xi_main(a, b, l2) - target):
        return l1
    return l2


@njit(cache=True)
def _lam_of_tilt(ab, t):
    """Solve t = psi0(ab + lam) - psi0(lam); decreasing in lam."""
    if t == 0.0:
        return math.inf
    lo = 1e-8
    hi = 1e8
    k = 0
    while _psi_diff(0, lo, ab) < t:
        lo *= 1e-4
        k += 1
        if lo < 1e-300 or k > 100:
            return math.nan
    k = 0
    while _psi_diff(0, hi, ab) > t:
        hi *= 1e4
        k += 1
        if hi > 1e300 or k > 100:
            return math.nan
    llo = math.log(lo)
    lhi = math.log(hi)
    for _ in range(300):
        mid = 0.5 * (llo + lhi)
        if mid == llo or mid == lhi:
            break
        if _psi_diff(0, math.exp(mid), ab) > t:
            llo = mid
        else:
            lhi = mid
    return math.exp(0.5 * (llo + lhi))


@njit(cache=True)
def _lam_signed(alpha, beta, xi1):
    """lambda(xi) with a sign: positive right of chi, negative left, inf at chi."""
    chi1 = alpha / (alpha + beta)
    if abs(xi1 - chi1) <= LLN_TOL:
        return math.inf
    if xi1 >= 1.0 or xi1 <= 0.0:
        return 0.0
    if xi1 > chi1:
        return _lam_of_main(alpha, beta, xi1)
    return -_lam_of_main(beta, alpha, 1.0 - xi1)


@njit(cache=True)
def _iq_main(a, b, lam, main):
    # xi_main * (psi0(a+b+lam) - psi0(a+lam)) + (1 - xi_main) * (psi0(lam) - psi0(a+lam))
    return main * _psi_diff(0, a + lam, b) - (1.0 - main) * _psi_diff(0, lam, a)


@njit(cache=True)
def _iq(alpha, beta, xi1):
    chi1 = alpha / (alpha + beta)
    if abs(xi1 - chi1) <= LLN_TOL:
        return 0.0
    if xi1 >= 1.0:
        return _psi_diff(0, alpha, beta)
    if xi1 <= 0.0:
        return _psi_diff(0, beta, alpha)
    if xi1 > chi1:
        lam = _lam_of_main(alpha, beta, xi1)
        return _iq_main(alpha, beta, lam, xi1)
    lam = _lam_of_main(beta, alpha, 1.0 - xi1)
    return _iq_main(beta, alpha, lam, 1.0 - xi1)


@njit(cache=True)
def _ia(alpha, beta, xi1):
    s = alpha + beta
    chi1 = alpha / s
    chi2 = beta / s
    d = xi1 - chi1
    out = 0.0
    if xi1 > 0.0:
        out += xi1 * math.log1p(d / chi1)
    if xi1 < 1.0:
        out += (1.0 - xi1) * math.log1p(-d / chi2)
    return out


@njit(cache=True)
def _iq_star(alpha, beta, t):
    if t == 0.0:
        return 0.0
    lam = _lam_of_tilt(alpha + beta, abs(t))
    if t > 0.0:
        return _psi_diff(0, lam, alpha)
    return t + _psi_diff(0, lam, beta)


@vectorize(["float64(float64, float64, float64)"], cache=True)
def _lam_signed_u(alpha, beta, xi1):
    return _lam_signed(alpha, beta, xi1)


@vectorize(["float64(float64, float64, float64)"], cache=True)
def _iq_u(alpha, beta, xi1):
    return _iq(alpha, beta, xi1)


@vectorize(["float64(float64, float64, float64)"], cache=True)
def _ia_u(alpha, beta, xi1):
    return _ia(alpha, beta, xi1)


@vectorize(["float64(float64, float64, float64)"], cache=True)
def _iq_star_u(alpha, beta, t):
    return _iq_star(alpha, beta, t)


@vectorize(["float64(float64, float64, float64)"], cache=True)
def _xi_main_u(a, b, lam):
    return _xi_main(a, b, lam)


@vectorize(["float64(float64, float64)"], cache=True)
def _lam_of_tilt_u(ab, t):
    return _lam_of_tilt(ab, t)


# ---------------------------------------------------------------------------

def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def _xi1(xi, *, interior: bool = False) -> np.ndarray:
    if isinstance(xi, Velocity):
        xi = xi.xi1
    x = np.asarray(xi, dtype=float)
    lo_ok = (x > 0) if interior else (x >= 0)
    hi_ok = (x < 1) if interior else (x <= 1)
    if np.any(~lo_ok) or np.any(~hi_ok):
        raise DomainError("xi1 outside the admissible range")
    return x


def xi_of_lambda(params: ModelParams, lam, branch: Branch | str = Branch.RIGHT):
    """Velocity dual to lambda on the given branch.

    A scalar lambda gives a Velocity; an array gives an array of xi1.
    """
    branch = Branch.parse(branch)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(~(lam_arr > 0)):
        raise DomainError("lambda must be positive")
    a, b = params.alpha, params.beta
    if branch is Branch.AT_LLN:
        x1 = np.full(lam_arr.shape, params.chi[0])
    elif branch is Branch.RIGHT:
        x1 = _xi_main_u(a, b, lam_arr)
    else:
        x1 = 1.0 - _xi_main_u(b, a, lam_arr)
    if x1.ndim == 0:
        return Velocity(float(x1))
    return x1


def tilt_of_lambda(params: ModelParams, lam):
    """t = psi0(alpha + beta + lambda) - psi0(lambda); zero at lambda = inf."""
    lam = np.asarray(lam, dtype=float)
    fin = np.isfinite(lam)
    safe = np.where(fin, lam, 1.0)
    return _out(np.where(fin, _psi_diff_u(0, safe, params.alpha + params.beta), 0.0))


def lambda_of_xi(params: ModelParams, xi):
    """Dual point of an interior velocity.

    Scalar input returns a DualPoint; array input returns the signed lambda
    array (positive right of chi, negative left, inf at chi).
    """
    x = _xi1(xi, interior=True)
    signed = _lam_signed_u(params.alpha, params.beta, x)
    if np.any(np.isnan(signed)):
        raise ConvergenceError("lambda bracket could not be established")
    if x.ndim > 0:
        return signed
    s = float(signed)
    if math.isinf(s):
        return DualPoint(math.inf, Branch.AT_LLN, Velocity(float(x)), 0.0)
    lam = abs(s)
    branch = Branch.RIGHT if s > 0 else Branch.LEFT
    return DualPoint(lam, branch, Velocity(float(x)), float(tilt_of_lambda(params, lam)))


def lambda_of_tilt(params: ModelParams, t):
    """lambda solving t = psi0(alpha + beta + lambda) - psi0(lambda); t = 0 gives inf."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr >= 0)):
        raise DomainError("tilt must be >= 0")
    lam = _lam_of_tilt_u(params.alpha + params.beta, t_arr)
    if np.any(np.isnan(lam)):
        raise ConvergenceError("lambda bracket could not be established")
    if lam.ndim > 0:
        return lam
    lam = float(lam)
    if math.isinf(lam):
        return DualPoint(math.inf, Branch.AT_LLN, Velocity(params.chi[0]), 0.0)
    return DualPoint(lam, Branch.RIGHT, xi_of_lambda(params, lam, Branch.RIGHT), float(t_arr))


def rate_iq(params: ModelParams, xi):
    """Quenched large deviation rate function of the walk's velocity."""
    return _out(_iq_u(params.alpha, params.beta, _xi1(xi)))


def rate_ia(params: ModelParams, xi):
    """Averaged rate function (relative entropy against the LLN velocity)."""
    return _out(_ia_u(params.alpha, params.beta, _xi1(xi)))


def iq_star(params: ModelParams, t):
    """Convex conjugate of rate_iq in the direction t*e1.

    A general tilt h = t e1 + s e2 reduces to s + iq_star(t - s).
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("tilt must be finite")
    return _out(_iq_star_u(params.alpha, params.beta, t))


def busemann_means(params: ModelParams, xi) -> tuple[float, float]:
    """(E B_{0,e1}, E B_{0,e2}) for the Busemann function in direction xi."""
    x = float(_xi1(xi, interior=True))
    dp = lambda_of_xi(params, x)
    a, b = params.alpha, params.beta
    if dp.branch is Branch.AT_LLN:
        return (0.0, 0.0)
    lam = dp.lam
    if dp.branch is Branch.RIGHT:
        return (-_psi_diff(0, a + lam, b), _psi_diff(0, lam, a))
    return (_psi_diff(0, lam, b), -_psi_diff(0, b + lam, a))


def iq_expansion_coeffs(params: ModelParams) -> ExpansionCoeffs:
    a, b = params.alpha, params.beta
    s = a + b
    c2 = s * s / (2 * a * b)
    c3 = s ** 3 * (a - b) / (6 * a * a * b * b)
    c4 = s ** 4 * (2 * a * a - 2 * a * b + 2 * b * b + 1) / (24 * a ** 3 * b ** 3)
    c4a = s ** 3 * (a ** 3 + b ** 3) / (12 * a ** 3 * b ** 3)
    gap4 = s ** 4 / (a ** 3 * b ** 3)
    return ExpansionCoeffs(iq=(c2, c3, c4), ia=(c2, c3, c4a), gap4=gap4)
