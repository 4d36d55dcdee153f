"""Empirical copula processes: estimators, limiting covariances and efficiency comparisons.

The package compares two plug-in estimators of a bivariate copula ``C``: the
empirical distribution ``C_n`` of draws with known uniform margins, and the
rank-based empirical copula ``hat C_n``.  It provides parametric copula
families, exact evaluation of both estimators, covariance functions of their
limiting Gaussian processes, grid certification of covariance dominance,
asymptotic variances of concordance functionals, and a seeded Monte Carlo
harness.
"""

from .asymptotics import *  # noqa: F401,F403
from .copulas import *  # noqa: F401,F403
from .empirical import *  # noqa: F401,F403
from .exceptions import (
    CopulaError,
    DerivativeUndefined,
    DomainError,
    KindMismatch,
    MarginKindMismatch,
    ModelMismatch,
    ParameterOutOfRange,
    QuadratureFailure,
    ReplicationFailed,
    TiesPresent,
)
from .functionals import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from .samples import *  # noqa: F401,F403

from . import asymptotics, copulas, empirical, functionals, montecarlo, samples

__version__ = "0.1.0"

__all__ = (
    asymptotics.__all__
    + copulas.__all__
    + empirical.__all__
    + functionals.__all__
    + montecarlo.__all__
    + samples.__all__
    + [
        "CopulaError",
        "DerivativeUndefined",
        "DomainError",
        "KindMismatch",
        "MarginKindMismatch",
        "ModelMismatch",
        "ParameterOutOfRange",
        "QuadratureFailure",
        "ReplicationFailed",
        "TiesPresent",
    ]
)
