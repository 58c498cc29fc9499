"""Gamma-rescaled extrema laws and their quadrature cross-checks.

Multiplying the bridge extrema by sqrt(gamma), gamma ~ Gamma(1/2, theta)
independent of the bridge, turns the theta-function series of
:mod:`bridge_extrema.distributions` into hyperbolic closed forms. Everything
here is written in terms of the rate ``c = sqrt(2 theta)`` and the excursion
rate ``m(x) = c / (exp(2 c x) - 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

from scipy import integrate, special

from . import distributions as dist
from ._series import DomainError

__all__ = [
    "ThetaParam",
    "QuadratureSpec",
    "QuadratureError",
    "UnsupportedParameterError",
    "RESCALED_KINDS",
    "excursion_rate",
    "rescaled_law",
    "conditional_pair_cdf",
    "rescaled_diff_tail",
    "conditional_mean_extremum",
    "psi_moment",
    "gamma_mix",
    "gamma_mix_check",
    "covariance_rescaled",
    "covariance_from_moments",
    "unscaled_counterpart",
    "verify_grid",
]


class QuadratureError(ArithmeticError):
    pass


class UnsupportedParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaParam:
    theta: float = 0.5

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise DomainError(f"theta must be positive and finite, got {self.theta!r}")

    @property
    def c(self) -> float:
        return math.sqrt(2.0 * self.theta)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the semi-infinite integrals.

    Upper limits are cut where the exponential factor of the integrand drops
    below ``rel_tol * tail_safety`` times the integral, and the cut tail is
    bounded analytically.
    """

    rel_tol: float = 1e-9
    max_subdivisions: int = 200
    abs_tol: float = 1e-13
    tail_safety: float = 1e-3

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def _quad(f: Callable[[float], float], a: float, b: float, q: QuadratureSpec, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                f, a, b,
                epsabs=q.abs_tol,
                epsrel=0.1 * q.rel_tol,
                limit=q.max_subdivisions,
                points=points,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if err > max(q.rel_tol * abs(val), 10.0 * q.abs_tol):
        raise QuadratureError(f"quadrature error estimate {err:g} exceeds tolerance")
    return val


def excursion_rate(x: float, tp: ThetaParam) -> float:
    """m(x) = c exp(-2xc) / (1 - exp(-2xc)), the rate of killed excursions reaching x."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"excursion rate needs x > 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    c = tp.c
    return c / math.expm1(2.0 * c * x)


def _one_minus_exp(y: float) -> float:
    return -math.expm1(-y)


def _sum_cdf(u: float) -> float:
    """coth(u) - u / sinh(u)^2, with its Taylor series near 0."""
    if u < 1e-3:
        u2 = u * u
        return u * (2.0 / 3.0 - 4.0 * u2 / 45.0 + 4.0 * u2 * u2 / 315.0)
    e = math.exp(-2.0 * u)
    one_m = -math.expm1(-2.0 * u)
    return (1.0 + e) / one_m - 4.0 * u * e / (one_m * one_m)


RESCALED_KINDS = ("onesided_tail", "max_cdf", "min_tail", "joint_cdf", "sum_cdf")


def rescaled_law(kind: str, x: float, y: Optional[float] = None, tp: ThetaParam = ThetaParam()) -> float:
    """Law of the gamma-rescaled extrema U = sqrt(gamma) M+, V = sqrt(gamma) M-.

    kinds: ``onesided_tail`` P(U >= x); ``max_cdf`` P(max(U,V) <= x);
    ``min_tail`` P(min(U,V) > x); ``joint_cdf`` P(U <= x, V <= y);
    ``sum_cdf`` P(U + V <= x).
    """
    x = dist._check_nonneg("x", x)
    c = tp.c
    if kind == "joint_cdf":
        if y is None:
            raise DomainError("joint_cdf needs y")
        y = dist._check_nonneg("y", y)
    elif y is not None:
        raise DomainError(f"{kind} takes no y")

    if kind == "onesided_tail":
        return math.exp(-2.0 * x * c)
    if kind == "max_cdf":
        return math.tanh(x * c)
    if kind == "min_tail":
        if x == 0.0:
            return 1.0
        # 1 - 2c/(c+m) + c/(c+2m) rewritten without cancellation, a = m/c
        a = excursion_rate(x, tp) / c
        return 2.0 * a * a / ((1.0 + a) * (1.0 + 2.0 * a))
    if kind == "joint_cdf":
        if x == 0.0 or y == 0.0:
            return 0.0
        # 2 sinh(xc) sinh(yc) / sinh((x+y)c)
        return _one_minus_exp(2 * x * c) * _one_minus_exp(2 * y * c) / _one_minus_exp(2 * (x + y) * c)
    if kind == "sum_cdf":
        return _sum_cdf(x * c)
    raise DomainError(f"unknown rescaled kind {kind!r}")


def conditional_pair_cdf(x: float, y: float, t: float, tp: ThetaParam) -> float:
    """P(max <= x, -min <= y on [0, g] | local time L(g) = t) = exp(-t (m(x) + m(y)))."""
    t = float(t)
    if t < 0:
        raise DomainError(f"local time level must be >= 0, got {t!r}")
    rate = excursion_rate(x, tp) + excursion_rate(y, tp)
    return math.exp(-t * rate)


def rescaled_diff_tail(z: float, tp: ThetaParam, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """P(U - V >= z) = 2c int_0^inf sinh^2(cu) / sinh^2(c(2u+z)) du."""
    z = dist._check_nonneg("z", z)
    if math.isinf(z):
        return 0.0
    c = tp.c

    def integrand(u: float) -> float:
        # sinh^2(cu)/sinh^2(c(2u+z)) = exp(-2c(u+z)) * [(1-e^{-2cu}) / (1-e^{-2c(2u+z)})]^2
        if u == 0.0:
            return 0.0
        r = _one_minus_exp(2 * c * u) / _one_minus_exp(2 * c * (2 * u + z))
        return math.exp(-2.0 * c * (u + z)) * r * r

    # integrand <= exp(-2c(u+z)), so the tail past U is at most exp(-2c(U+z)) after the 2c factor
    upper = 1.0 / c
    while True:
        val = 2.0 * c * _quad(integrand, 0.0, upper, q)
        tail = math.exp(-2.0 * c * (upper + z))
        if tail <= q.tail_safety * q.rel_tol * val or tail < q.abs_tol:
            return val
        upper *= 2.0


def conditional_mean_extremum(t: float, tp: ThetaParam, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """psi(t) = E(U | L(g) = t) = int_0^inf (1 - exp(-t m(x))) dx."""
    t = float(t)
    if t < 0:
        raise DomainError(f"local time level must be >= 0, got {t!r}")
    if t == 0.0:
        return 0.0
    c = tp.c
    eps = q.tail_safety * q.rel_tol
    # beyond cut, t m(x) < eps and the integrand is t m(x) to first order
    cut = math.log1p(c * t / eps) / (2.0 * c)

    def integrand(x: float) -> float:
        if x == 0.0:
            return 1.0
        return -math.expm1(-t * excursion_rate(x, tp))

    # knee of the integrand where t m(x) ~ 1
    knee = math.log1p(c * t) / (2.0 * c)
    points = [knee] if 0.0 < knee < cut else None
    head = _quad(integrand, 0.0, cut, q, points=points)
    # int_cut^inf m(x) dx = -log(1 - exp(-2 c cut)) / 2
    tail = -0.5 * t * math.log1p(-math.exp(-2.0 * c * cut))
    return head + tail


def psi_moment(k: int, tp: ThetaParam, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E(psi(L)^k) with L = L(g) ~ Exp(c)."""
    c = tp.c
    # psi grows like log(t); the Exp(c) weight beyond this cut is negligible
    upper = (40.0 + 10.0 * k) / c
    return _quad(
        lambda t: conditional_mean_extremum(t, tp, q) ** k * c * math.exp(-c * t),
        0.0,
        upper,
        q,
        points=[1.0 / c, 5.0 / c],
    )


def covariance_rescaled(tp: ThetaParam = ThetaParam(0.5), q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """cov(U, V) = var(psi(L)), computed by quadrature; only derived for theta = 1/2."""
    if tp.theta != 0.5:
        raise UnsupportedParameterError("covariance_rescaled is only available for theta = 1/2")
    m1 = psi_moment(1, tp, q)
    m2 = psi_moment(2, tp, q)
    return m2 - m1 * m1


def covariance_from_moments(tp: ThetaParam = ThetaParam(0.5)) -> float:
    """E(gamma) E(M+ M-) - E(sqrt(gamma))^2 E(M+)^2, from the closed-form moments."""
    mom = dist.extrema_moments()
    e_gamma = 1.0 / (2.0 * tp.theta)
    e_sqrt_gamma = 1.0 / math.sqrt(math.pi * tp.theta)
    return e_gamma * mom.e_product - e_sqrt_gamma ** 2 * mom.mean_mplus ** 2


def gamma_mix(unscaled_fn: Callable[[float], float], x: float, tp: ThetaParam,
              q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """sqrt(theta/pi) int_0^inf F(x/sqrt(s)) s^(-1/2) exp(-theta s) ds.

    With s = v^2 this is 2 sqrt(theta/pi) int_0^inf F(x/v) exp(-theta v^2) dv,
    which has no endpoint singularity. F must take values in [0, 1].
    """
    theta = tp.theta
    # Gamma weight left beyond vmax is erfc(sqrt(theta) vmax)
    vmax = special.erfcinv(q.tail_safety * q.rel_tol) / math.sqrt(theta)

    def integrand(v: float) -> float:
        if v == 0.0:
            return unscaled_fn(math.inf)
        return unscaled_fn(x / v) * math.exp(-theta * v * v)

    pts = [p for p in (0.5 * x, x, 2.0 * x) if 0.0 < p < vmax]
    return 2.0 * math.sqrt(theta / math.pi) * _quad(integrand, 0.0, vmax, q, points=pts or None)


def gamma_mix_check(unscaled_fn: Callable[[float], float], rescaled_value_fn: Callable[[float], float],
                    x: float, tp: ThetaParam, q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Residual gamma_mix(unscaled_fn) - rescaled_value_fn at x."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x!r}")
    return gamma_mix(unscaled_fn, x, tp, q) - rescaled_value_fn(x)


# joint_cdf is checked along the ray y = JOINT_RATIO * x, which is preserved by the scaling
JOINT_RATIO = 0.5


def unscaled_counterpart(kind: str) -> Callable[[float], float]:
    """The bridge-scale law whose gamma mixture is ``rescaled_law(kind)``."""
    table = {
        "onesided_tail": dist.one_sided_tail,
        "max_cdf": dist.ks_cdf,
        "min_tail": dist.min_extremum_tail,
        "joint_cdf": lambda u: dist.joint_cdf(u, JOINT_RATIO * u),
        "sum_cdf": dist.kuiper_cdf,
        "diff_tail": dist.diff_tail,
    }
    return table[kind]


def rescaled_counterpart(kind: str, tp: ThetaParam, q: QuadratureSpec = DEFAULT_QUAD) -> Callable[[float], float]:
    if kind == "joint_cdf":
        return lambda x: rescaled_law("joint_cdf", x, JOINT_RATIO * x, tp)
    if kind == "diff_tail":
        return lambda x: rescaled_diff_tail(x, tp, q)
    return lambda x: rescaled_law(kind, x, tp=tp)


def verify_grid(tp: ThetaParam, grid, kinds=RESCALED_KINDS + ("diff_tail",), tol: float = 1e-6,
                q: QuadratureSpec = DEFAULT_QUAD) -> list:
    """Gamma-mixture residuals for every kind at every grid point."""
    rows = []
    for kind in kinds:
        unscaled = unscaled_counterpart(kind)
        rescaled = rescaled_counterpart(kind, tp, q)
        for x in grid:
            r = gamma_mix_check(unscaled, rescaled, x, tp, q)
            rows.append({"kind": kind, "x": float(x), "residual": r, "pass": abs(r) < tol})
    return rows
