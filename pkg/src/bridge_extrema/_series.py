"""Error-controlled summation of Gaussian-decay series and the clamping rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


class AccuracyError(ArithmeticError):
    """Requested accuracy could not be reached; carries the best value found."""

    def __init__(self, message: str, value: float, bound: float):
        super().__init__(message)
        self.value = value
        self.bound = bound


@dataclass(frozen=True)
class Accuracy:
    abs_tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError(f"max_terms must be a positive integer, got {self.max_terms!r}")


DEFAULT_ACCURACY = Accuracy()
_EPS = 2.0 ** -53


class SeriesValue(NamedTuple):
    value: float
    bound: float  # upper bound on the absolute truncation error
    terms: int


def gauss_series(
    term: Callable[[int], float],
    acc: Accuracy,
    start: int = 1,
    majorant: Optional[Callable[[int], float]] = None,
) -> SeriesValue:
    """Sum ``term(n)`` for n = start, start+1, ... until the tail is below ``acc.abs_tol``.

    ``majorant(n)`` must dominate ``|term(n)|`` and, from the point where it
    starts decreasing, have nonincreasing successive ratios. Every family
    used here (polynomial times exp(-a n^2)) has that shape, so the tail after
    index N is bounded by ``majorant(N+1) / (1 - majorant(N+2)/majorant(N+1))``.
    """
    if majorant is None:
        majorant = lambda n: abs(term(n))  # noqa: E731

    def done(total: float, tail: float, count: int) -> SeriesValue:
        # tail bound plus the rounding of a count-term float sum
        return SeriesValue(total, tail + 2.0 * (count + 1) * _EPS * abs(total), count)

    total = 0.0
    n = start
    prev_major = math.inf
    bound = math.inf
    while True:
        total += term(n)
        cur_major = majorant(n)
        nxt = majorant(n + 1)
        if nxt == 0.0:
            return done(total, 0.0, n - start + 1)
        if nxt <= cur_major <= prev_major:
            ratio = majorant(n + 2) / nxt
            if ratio < 1.0:
                bound = nxt / (1.0 - ratio)
                if bound <= acc.abs_tol:
                    return done(total, bound, n - start + 1)
        if n - start + 1 >= acc.max_terms:
            raise AccuracyError(
                f"series did not reach abs_tol={acc.abs_tol:g} within {acc.max_terms} terms",
                total,
                bound,
            )
        prev_major = cur_major
        n += 1


def clamp_prob(value: float, bound: float, acc: Accuracy) -> float:
    """Clamp to [0, 1]; overshoot beyond ``acc.abs_tol`` means the truncation went wrong."""
    if value < 0.0:
        excess = -value
        clamped = 0.0
    elif value > 1.0:
        excess = value - 1.0
        clamped = 1.0
    else:
        return value
    if excess > acc.abs_tol:
        raise AccuracyError(
            f"value {value!r} leaves [0, 1] by {excess:g} > abs_tol", value, bound
        )
    return clamped
