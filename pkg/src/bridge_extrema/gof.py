"""One-sided KS, two-sided KS and Kuiper tests with asymptotic p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import distributions as dist
from ._series import DEFAULT_ACCURACY, Accuracy, DomainError

__all__ = [
    "Sample",
    "GofReport",
    "Discrepancies",
    "ecdf_discrepancies",
    "ks_test",
    "ks_plus_test",
    "kuiper_test",
    "uniform_cdf",
    "normal_cdf",
    "exponential_cdf",
    "gamma_half_cdf",
    "arcsine_cdf",
    "SMALL_SAMPLE_N",
]

SMALL_SAMPLE_N = 20


@dataclass(frozen=True)
class Sample:
    values: np.ndarray

    @classmethod
    def of(cls, data) -> "Sample":
        arr = np.asarray(data, dtype=np.float64).ravel()
        if arr.size == 0:
            raise DomainError("sample is empty")
        if np.isnan(arr).any():
            raise DomainError("sample contains NaN")
        arr = np.sort(arr)
        arr.setflags(write=False)
        return cls(arr)

    @property
    def n(self) -> int:
        return len(self.values)


class Discrepancies(NamedTuple):
    d_plus: float
    d_minus: float
    d: float
    v: float


@dataclass(frozen=True)
class GofReport:
    test: str
    n: int
    stat_raw: float
    stat_scaled: float
    p_value: float
    small_sample: bool

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "p_value": self.p_value,
            "small_sample": self.small_sample,
            "stat_raw": self.stat_raw,
            "stat_scaled": self.stat_scaled,
            "test": self.test,
        }


def ecdf_discrepancies(s: Sample, null_cdf: Callable[[float], float]) -> Discrepancies:
    """D+ = max(i/n - F(x_i)), D- = max(F(x_i) - (i-1)/n), D = max, V = D+ + D-."""
    if not isinstance(s, Sample):
        s = Sample.of(s)
    n = s.n
    f = np.array([null_cdf(x) for x in s.values], dtype=np.float64)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    return Discrepancies(d_plus, d_minus, max(d_plus, d_minus), d_plus + d_minus)


def _report(test: str, n: int, raw: float, p: float, min_n: int) -> GofReport:
    return GofReport(test, n, raw, math.sqrt(n) * raw, min(1.0, max(0.0, p)), n < min_n)


def ks_test(s: Sample, null_cdf, acc: Accuracy = DEFAULT_ACCURACY, min_n: int = SMALL_SAMPLE_N) -> GofReport:
    s = s if isinstance(s, Sample) else Sample.of(s)
    d = ecdf_discrepancies(s, null_cdf).d
    return _report("ks", s.n, d, dist.ks_sf(math.sqrt(s.n) * d, acc), min_n)


def ks_plus_test(s: Sample, null_cdf, acc: Accuracy = DEFAULT_ACCURACY, min_n: int = SMALL_SAMPLE_N) -> GofReport:
    s = s if isinstance(s, Sample) else Sample.of(s)
    d = ecdf_discrepancies(s, null_cdf).d_plus
    return _report("ks_plus", s.n, d, dist.one_sided_tail(math.sqrt(s.n) * d), min_n)


def kuiper_test(s: Sample, null_cdf, acc: Accuracy = DEFAULT_ACCURACY, min_n: int = SMALL_SAMPLE_N) -> GofReport:
    s = s if isinstance(s, Sample) else Sample.of(s)
    v = ecdf_discrepancies(s, null_cdf).v
    return _report("kuiper", s.n, v, dist.kuiper_sf(math.sqrt(s.n) * v, acc), min_n)


# -- null distributions ------------------------------------------------------------

def uniform_cdf(x: float) -> float:
    return min(1.0, max(0.0, x))


def normal_cdf(mu: float = 0.0, sigma: float = 1.0) -> Callable[[float], float]:
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return lambda x: 0.5 * math.erfc(-(x - mu) / (sigma * math.sqrt(2.0)))


def exponential_cdf(rate: float = 1.0) -> Callable[[float], float]:
    if not rate > 0:
        raise DomainError("rate must be positive")
    return lambda x: -math.expm1(-rate * x) if x > 0 else 0.0


def gamma_half_cdf(theta: float) -> Callable[[float], float]:
    """Gamma(shape 1/2, rate theta): F(x) = erf(sqrt(theta x))."""
    if not theta > 0:
        raise DomainError("theta must be positive")
    return lambda x: math.erf(math.sqrt(theta * x)) if x > 0 else 0.0


def arcsine_cdf(x: float) -> float:
    """Beta(1/2, 1/2): F(x) = (2/pi) arcsin(sqrt(x))."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    return 2.0 / math.pi * math.asin(math.sqrt(x))
