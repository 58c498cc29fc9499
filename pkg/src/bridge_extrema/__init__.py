"""Distributions of Brownian-bridge extrema with series, quadrature and Monte Carlo cross-checks."""

from ._series import Accuracy, AccuracyError, DomainError
from .distributions import (
    ExtremaMoments,
    diff_tail,
    extrema_moments,
    joint_cdf,
    ks_cdf,
    kuiper_cdf,
    min_extremum_tail,
    one_sided_tail,
    quotient_cdf,
)
from .laplace import QuadratureSpec, ThetaParam

__version__ = "0.1.0"
