"""Asymptotic laws of Brownian-bridge extrema.

With U a standard Brownian bridge, M+ = max U, M- = -min U, M = max(M+, M-),
m = min(M+, M-), K = M+ + M- (Kuiper) and Q = M+/M-. Every theta-type series
is evaluated either in its direct form or in its Poisson-summed dual form,
whichever decays faster at the given argument, so that a handful of terms
suffice on the whole half line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from ._series import (
    DEFAULT_ACCURACY,
    Accuracy,
    AccuracyError,
    DomainError,
    SeriesValue,
    clamp_prob,
    gauss_series,
)

__all__ = [
    "Accuracy",
    "AccuracyError",
    "DomainError",
    "ExtremaMoments",
    "SeriesValue",
    "one_sided_tail",
    "ks_cdf",
    "ks_sf",
    "min_extremum_tail",
    "joint_cdf",
    "kuiper_cdf",
    "kuiper_sf",
    "diff_tail",
    "quotient_cdf",
    "extrema_moments",
    "evaluate",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
PI2 = math.pi * math.pi

# Direct and dual series decay at the same rate at these arguments.
KS_SWITCH = math.sqrt(math.pi) / 2.0
THETA3_SWITCH = math.sqrt(math.pi / 2.0)
# Below this every dual-form term underflows to 0 (exp(-pi^2/(8 z^2)) = 0).
TINY = 1e-3
# Below this the 1/(4k^2-1) series decays too slowly; integrate the ODE instead.
DIFF_SERIES_MIN_Z = 0.25


def _check_nonneg(name: str, x: float) -> float:
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"{name} must be >= 0, got {x!r}")
    return x


def _scaled(acc: Accuracy, factor: float) -> Accuracy:
    return Accuracy(acc.abs_tol / factor, acc.max_terms) if factor > 1.0 else acc


def one_sided_tail(x: float) -> float:
    """P(M+ >= x) = exp(-2 x^2) (reflection principle)."""
    x = _check_nonneg("x", x)
    return math.exp(-2.0 * x * x)


# -- Kolmogorov-Smirnov law --------------------------------------------------

def _ks_dual(z: float, acc: Accuracy) -> SeriesValue:
    """sqrt(2 pi)/z * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 z^2))."""
    pref = SQRT_2PI / z
    b = PI2 / (8.0 * z * z)
    s = gauss_series(lambda k: math.exp(-(2 * k - 1) ** 2 * b), _scaled(acc, pref))
    return SeriesValue(pref * s.value, pref * s.bound, s.terms)


def _ks_tail_direct(z: float, acc: Accuracy) -> SeriesValue:
    """1 - F_M(z) = 2 sum_{n>=1} (-1)^(n+1) exp(-2 n^2 z^2)."""
    a = 2.0 * z * z
    return gauss_series(
        lambda n: (2.0 if n % 2 else -2.0) * math.exp(-a * n * n),
        acc,
        majorant=lambda n: 2.0 * math.exp(-a * n * n),
    )


def _ks_cdf_series(z: float, acc: Accuracy) -> SeriesValue:
    if z == 0.0:
        return SeriesValue(0.0, 0.0, 0)
    if math.isinf(z):
        return SeriesValue(1.0, 0.0, 0)
    if z < TINY:
        return SeriesValue(0.0, 0.0, 0)
    if z < KS_SWITCH:
        return _ks_dual(z, acc)
    tail = _ks_tail_direct(z, acc)
    return SeriesValue(1.0 - tail.value, tail.bound, tail.terms)


def ks_cdf(z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """F_M(z) = sum_n (-1)^n exp(-2 n^2 z^2), the Kolmogorov-Smirnov limit law."""
    z = _check_nonneg("z", z)
    r = _ks_cdf_series(z, acc)
    return clamp_prob(r.value, r.bound, acc)


def ks_sf(z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """1 - F_M(z), summed directly in the upper tail to keep tiny p-values."""
    z = _check_nonneg("z", z)
    if z < KS_SWITCH:
        return 1.0 - ks_cdf(z, acc)
    r = _ks_tail_direct(z, acc)
    return clamp_prob(r.value, r.bound, acc)


# -- minimum of the two one-sided extrema -------------------------------------

def _min_tail_series(z: float, acc: Accuracy) -> SeriesValue:
    if z == 0.0:
        return SeriesValue(1.0, 0.0, 0)
    if math.isinf(z):
        return SeriesValue(0.0, 0.0, 0)
    if z < KS_SWITCH:
        # 1 - F_m = F_M + 2 exp(-2 z^2) - 1
        f = _ks_dual(z, acc) if z >= TINY else SeriesValue(0.0, 0.0, 0)
        return SeriesValue(f.value + 2.0 * math.exp(-2.0 * z * z) - 1.0, f.bound, f.terms)
    a = 2.0 * z * z
    return gauss_series(
        lambda n: (2.0 if n % 2 == 0 else -2.0) * math.exp(-a * n * n),
        acc,
        start=2,
        majorant=lambda n: 2.0 * math.exp(-a * n * n),
    )


def min_extremum_tail(z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """P(min(M+, M-) > z) = 2 sum_{n>=2} (-1)^n exp(-2 n^2 z^2)."""
    z = _check_nonneg("z", z)
    r = _min_tail_series(z, acc)
    return clamp_prob(r.value, r.bound, acc)


# -- joint law of (M+, M-) ----------------------------------------------------

def _joint_series(z: float, w: float, acc: Accuracy) -> SeriesValue:
    if z == 0.0 or w == 0.0:
        return SeriesValue(0.0, 0.0, 0)
    if math.isinf(z) and math.isinf(w):
        return SeriesValue(1.0, 0.0, 0)
    if math.isinf(w) or math.isinf(z):
        return SeriesValue(1.0 - math.exp(-2.0 * min(z, w) ** 2), 0.0, 0)
    s = z + w
    if s < TINY:
        return SeriesValue(0.0, 0.0, 0)
    if s >= THETA3_SWITCH:
        # sum_k exp(-2 k^2 s^2) - sum_k exp(-2 (k s + z)^2), +-k folded
        head = 1.0 - math.exp(-2.0 * z * z)

        def term(k: int) -> float:
            ks = k * s
            return (
                2.0 * math.exp(-2.0 * ks * ks)
                - math.exp(-2.0 * (ks + z) ** 2)
                - math.exp(-2.0 * (ks - z) ** 2)
            )

        r = gauss_series(term, acc, majorant=lambda k: 4.0 * math.exp(-2.0 * (k * s - z) ** 2))
        return SeriesValue(head + r.value, r.bound, r.terms + 1)
    pref = SQRT_2PI / s
    b = PI2 / (2.0 * s * s)
    phase = 2.0 * math.pi * z / s
    r = gauss_series(
        lambda j: math.exp(-b * j * j) * (1.0 - math.cos(phase * j)),
        _scaled(acc, pref),
        majorant=lambda j: 2.0 * math.exp(-b * j * j),
    )
    return SeriesValue(pref * r.value, pref * r.bound, r.terms)


def joint_cdf(z: float, w: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """P(M+ <= z, M- <= w). Either argument may be ``math.inf``."""
    z = _check_nonneg("z", z)
    w = _check_nonneg("w", w)
    r = _joint_series(z, w, acc)
    return clamp_prob(r.value, r.bound, acc)


# -- Kuiper law ---------------------------------------------------------------

def _kuiper_dual(x: float, acc: Accuracy) -> SeriesValue:
    """sqrt(2 pi) pi^2 / x^3 * sum_{j>=1} j^2 exp(-pi^2 j^2 / (2 x^2))."""
    pref = SQRT_2PI * PI2 / x ** 3
    b = PI2 / (2.0 * x * x)
    r = gauss_series(lambda j: j * j * math.exp(-b * j * j), _scaled(acc, pref))
    return SeriesValue(pref * r.value, pref * r.bound, r.terms)


def _kuiper_tail_direct(x: float, acc: Accuracy) -> SeriesValue:
    """1 - F_K(x) = 2 sum_{k>=1} (4 k^2 x^2 - 1) exp(-2 k^2 x^2)."""
    a = 2.0 * x * x
    return gauss_series(
        lambda k: 2.0 * (2.0 * a * k * k - 1.0) * math.exp(-a * k * k),
        acc,
        majorant=lambda k: 2.0 * (2.0 * a * k * k + 1.0) * math.exp(-a * k * k),
    )


def _kuiper_series(x: float, acc: Accuracy) -> SeriesValue:
    if x == 0.0:
        return SeriesValue(0.0, 0.0, 0)
    if math.isinf(x):
        return SeriesValue(1.0, 0.0, 0)
    if x < TINY:
        return SeriesValue(0.0, 0.0, 0)
    if x < THETA3_SWITCH:
        return _kuiper_dual(x, acc)
    t = _kuiper_tail_direct(x, acc)
    return SeriesValue(1.0 - t.value, t.bound, t.terms)


def kuiper_cdf(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """F_K(x) = sum_k (1 - 4 k^2 x^2) exp(-2 k^2 x^2) for K = M+ + M-."""
    x = _check_nonneg("x", x)
    r = _kuiper_series(x, acc)
    return clamp_prob(r.value, r.bound, acc)


def kuiper_sf(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    x = _check_nonneg("x", x)
    if x < THETA3_SWITCH:
        return 1.0 - kuiper_cdf(x, acc)
    r = _kuiper_tail_direct(x, acc)
    return clamp_prob(r.value, r.bound, acc)


# -- difference M+ - M- ---------------------------------------------------------

def _theta_tail_times_t(t: float, acc: Accuracy) -> float:
    """t * sum_{k>=1} exp(-2 k^2 t^2), finite at t = 0."""
    if t < TINY:
        return 0.5 * (math.sqrt(math.pi / 2.0) - t)
    if t >= THETA3_SWITCH:
        a = 2.0 * t * t
        return t * gauss_series(lambda k: math.exp(-a * k * k), acc).value
    b = PI2 / (2.0 * t * t)
    d = gauss_series(lambda j: math.exp(-b * j * j), acc).value
    return 0.5 * (math.sqrt(math.pi / 2.0) * (1.0 + 2.0 * d) - t)


def _diff_series(z: float, acc: Accuracy) -> SeriesValue:
    if z == 0.0:
        return SeriesValue(0.5, 0.0, 0)
    if math.isinf(z):
        return SeriesValue(0.0, 0.0, 0)
    if z >= DIFF_SERIES_MIN_Z:
        a = 2.0 * z * z
        return gauss_series(lambda k: math.exp(-a * k * k) / (4.0 * k * k - 1.0), acc)
    # T(z) = P(M+ - M- >= z) solves T' = -z (T + S) with S = sum_{k>=1} exp(-2 k^2 z^2)
    # and T(0) = 1/2, so T(z) = exp(-z^2/2) (1/2 - int_0^z t S(t) exp(t^2/2) dt).
    val, err = integrate.quad(
        lambda t: _theta_tail_times_t(t, acc) * math.exp(0.5 * t * t),
        0.0,
        z,
        epsabs=0.1 * acc.abs_tol,
        epsrel=1e-14,
    )
    damp = math.exp(-0.5 * z * z)
    return SeriesValue(damp * (0.5 - val), damp * err + acc.abs_tol * 0.1 * z, 0)


def diff_tail(z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """P(M+ - M- >= z) = sum_{k>=1} exp(-2 k^2 z^2) / (4 k^2 - 1)."""
    z = _check_nonneg("z", z)
    r = _diff_series(z, acc)
    if r.bound > acc.abs_tol:
        raise AccuracyError("difference-law quadrature above abs_tol", r.value, r.bound)
    return clamp_prob(r.value, r.bound, acc)


# -- quotient M+ / M- -----------------------------------------------------------

def quotient_cdf(z: float) -> float:
    """P(M+/M- <= z) = (1 - pi z cot(pi z/(z+1)) / (z+1)) / (z+1)."""
    z = _check_nonneg("z", z)
    if math.isinf(z):
        return 1.0
    zp1 = z + 1.0
    if z < 1e-6:
        # u cot u = 1 - u^2/3 - u^4/45 - 2 u^6/945
        u2 = (math.pi * z / zp1) ** 2
        return (u2 / 3.0 + u2 * u2 / 45.0 + 2.0 * u2 ** 3 / 945.0) / zp1
    if z <= 1.0:
        u = math.pi * z / zp1
        ucotu = u / math.tan(u)
    else:
        # u = pi - eps with eps = pi/(z+1); cot(pi - eps) = -cot(eps)
        eps = math.pi / zp1
        ucotu = -(math.pi - eps) / math.tan(eps)
    return min(1.0, max(0.0, (1.0 - ucotu) / zp1))


# -- moments ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExtremaMoments:
    mean_mplus: float
    var_mplus: float
    e_product: float
    cov: float
    corr: float


def extrema_moments() -> ExtremaMoments:
    """Moments of (M+, M-); corr(M+, M-) is about -0.654534."""
    mean = math.sqrt(2.0 * math.pi) / 4.0
    var = 0.5 - math.pi / 8.0
    e_prod = PI2 / 12.0 - 0.5
    cov = PI2 / 12.0 - 0.5 - math.pi / 8.0
    return ExtremaMoments(mean, var, e_prod, cov, cov / var)


# -- uniform entry point used by the CLI ---------------------------------------

ARITY = {
    "ks": 1,
    "kuiper": 1,
    "min": 1,
    "diff": 1,
    "quotient": 1,
    "onesided": 1,
    "joint": 2,
}


def evaluate(dist: str, args: tuple, acc: Accuracy = DEFAULT_ACCURACY) -> SeriesValue:
    """Evaluate a named law and return the value with its truncation bound."""
    if dist not in ARITY:
        raise DomainError(f"unknown distribution {dist!r}")
    if len(args) != ARITY[dist]:
        raise DomainError(f"{dist} takes {ARITY[dist]} argument(s), got {len(args)}")
    args = tuple(_check_nonneg("argument", a) for a in args)
    if dist == "onesided":
        return SeriesValue(one_sided_tail(*args), 0.0, 0)
    if dist == "quotient":
        return SeriesValue(quotient_cdf(*args), 0.0, 0)
    if dist == "diff":
        r = _diff_series(*args, acc)
        return SeriesValue(diff_tail(*args, acc=acc), r.bound, r.terms)
    raw = {
        "ks": _ks_cdf_series,
        "kuiper": _kuiper_series,
        "min": _min_tail_series,
        "joint": _joint_series,
    }[dist](*args, acc)
    return SeriesValue(clamp_prob(raw.value, raw.bound, acc), raw.bound, raw.terms)
