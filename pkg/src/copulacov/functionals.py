"""Concordance functionals, their plug-in estimators and asymptotic variances.

The functionals act on a copula (or any function on the unit square):

    T1  Blomqvist's beta      -1 + 4 C(1/2, 1/2)
    T2  Spearman's footrule   -2 + 6 int C(t, t) dt
    T3  Spearman's rho        -3 + 12 int int C(u, v) du dv
    T4  Gini's gamma          -2 + 4 int {C(t, t) + C(t, 1 - t)} dt
    T5  non-monotone variant   1 + 3 int {2 C(t, t) - C(t, 1) - C(1, t)} dt

T5 coincides with T2 on copulas but not on the known-margin estimator.

Each functional is linear up to a constant, so the asymptotic variance of
its plug-in estimator is the double integral of the limit covariance
against a fixed weighting (a point mass, line or area measure).  The
weightings are tabulated in ``_MEASURES``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .asymptotics import _chat_terms, _cov_c
from .copulas import CopulaModel, Family
from .empirical import GridFunction, GridKind, empirical_copula, known_margin_empirical, ranks
from .exceptions import KindMismatch, QuadratureFailure
from .quadrature import hypercube_rule, square_rule_cross, tanh_sinh
from .samples import MarginKind, PairSample, check_pairs

__all__ = [
    "Functional",
    "EstimatorKind",
    "VarianceMethod",
    "VarianceResult",
    "evaluate",
    "kendall_tau",
    "kendall_tau_naive",
    "asymptotic_variance",
    "fgm_closed_form_variance",
    "ConcordanceEstimator",
]

QUAD_TOL = 1e-10


class Functional(str, enum.Enum):
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"
    T4 = "t4"
    T5 = "t5"
    KENDALL = "kendall"

    @classmethod
    def parse(cls, x) -> "Functional":
        if isinstance(x, cls):
            return x
        key = str(x).strip().lower()
        aliases = {
            "blomqvist": "t1", "footrule": "t2", "spearman": "t3", "rho": "t3",
            "gini": "t4", "tau": "kendall", "kendalltau": "kendall",
        }
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown functional {x!r}; expected t1..t5 or kendall") from None


class EstimatorKind(str, enum.Enum):
    KNOWN = "known"
    RANK = "rank"


class VarianceMethod(str, enum.Enum):
    CLOSED_FORM_FGM = "closed-form-fgm"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class VarianceResult:
    functional: Functional
    estimator_kind: EstimatorKind
    variance: float
    method: VarianceMethod
    quadrature_error_bound: float | None = None

    def to_dict(self) -> dict:
        return {
            "functional": self.functional.value,
            "estimator_kind": self.estimator_kind.value,
            "variance": self.variance,
            "method": self.method.value,
            "error_bound": self.quadrature_error_bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- plug-in evaluation ---------------------------------------------------------


def _combine(functional: Functional, diag, anti, full, margin_u, margin_v, at_half):
    if functional is Functional.T1:
        return -1.0 + 4.0 * at_half()
    if functional is Functional.T2:
        return -2.0 + 6.0 * diag()
    if functional is Functional.T3:
        return -3.0 + 12.0 * full()
    if functional is Functional.T4:
        return -2.0 + 4.0 * (diag() + anti())
    if functional is Functional.T5:
        return 1.0 + 3.0 * (2.0 * diag() - margin_u() - margin_v())
    raise AssertionError(functional)


def _quad1(f):
    val, err = integrate.quad(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > QUAD_TOL:
        raise QuadratureFailure(f"adaptive quadrature error estimate {err:.2g} exceeds {QUAD_TOL:g}")
    return val


def _quad2(f, h=0.125):
    # tensor tanh-sinh at steps h and h / 2; f must accept arrays
    def rule(step):
        x, w = tanh_sinh(step)
        U, V = np.meshgrid(x, x, indexing="ij")
        return math.fsum((np.outer(w, w) * f(U, V)).ravel())

    coarse, fine = rule(h), rule(h / 2)
    if abs(fine - coarse) > QUAD_TOL:
        raise QuadratureFailure(
            f"tanh-sinh rule changed by {abs(fine - coarse):.2g} on step halving, above {QUAD_TOL:g}"
        )
    return fine


def _model_value(functional: Functional, model: CopulaModel) -> float:
    fam = model.family
    th = 0.0 if fam is Family.INDEPENDENCE else model.theta
    if fam in (Family.INDEPENDENCE, Family.FGM):
        # polynomial integrals of uv + th uv (1-u)(1-v)
        closed = {
            Functional.T1: th / 4.0,
            Functional.T2: th / 5.0,
            Functional.T3: th / 3.0,
            Functional.T4: 4.0 * th / 15.0,
            Functional.T5: th / 5.0,
            Functional.KENDALL: 2.0 * th / 9.0,
        }
        return closed[functional]
    if functional is Functional.KENDALL:
        if fam is Family.CLAYTON:
            return th / (th + 2.0)
        if fam is Family.GAUSSIAN:
            return 2.0 / math.pi * math.asin(th)
        # tau = 1 - 4 int int dC/du dC/dv
        return 1.0 - 4.0 * _quad2(lambda u, v: model.partial_u(u, v) * model.partial_v(u, v))
    C = lambda u, v: float(model.cdf(u, v))  # noqa: E731
    return _combine(
        functional,
        diag=lambda: _quad1(lambda t: C(t, t)),
        anti=lambda: _quad1(lambda t: C(t, 1.0 - t)),
        full=lambda: _quad2(model.cdf),
        margin_u=lambda: 0.5,
        margin_v=lambda: 0.5,
        at_half=lambda: C(0.5, 0.5),
    )


def evaluate(functional, f) -> float:
    """Value of a functional at a :class:`GridFunction` or a :class:`CopulaModel`.

    Grid functions are integrated exactly.  For models, FGM and independence
    use closed forms and other families adaptive quadrature.

    >>> from copulacov.copulas import CopulaModel
    >>> round(evaluate("t3", CopulaModel("fgm", 1.0)), 12)
    0.333333333333
    """
    functional = Functional.parse(functional)
    if isinstance(f, CopulaModel):
        return float(_model_value(functional, f))
    if not isinstance(f, GridFunction):
        raise TypeError(f"expected GridFunction or CopulaModel, got {type(f).__name__}")
    if functional is Functional.KENDALL:
        if f.kind is GridKind.CHECKERBOARD:
            raise KindMismatch("Kendall's tau is implemented for the two step estimators only")
        return _tau_from_ranks(f.ranks)
    return float(
        _combine(
            functional,
            diag=f.integral_diag,
            anti=f.integral_antidiag,
            full=f.integral_full,
            margin_u=lambda: f.integral_margin(0),
            margin_v=lambda: f.integral_margin(1),
            at_half=lambda: float(f.evaluate(0.5, 0.5)),
        )
    )


# -- Kendall's tau -------------------------------------------------------------


def _count_inversions(a: np.ndarray) -> int:
    """Number of pairs ``i < j`` with ``a[i] > a[j]``; distinct values, bottom-up merge."""
    vals = np.asarray(a).copy()
    n = vals.shape[0]
    idx = np.arange(n)
    inv = 0
    w = 1
    while w < n:
        pair = idx // (2 * w)
        right = (idx // w) % 2 == 1
        # halves are already sorted, so sorting each pair block merges it
        order = np.lexsort((vals, pair))
        is_left = ~right[order]
        cum_left = np.cumsum(is_left)
        start = pair * 2 * w
        left_before_block = np.where(start > 0, cum_left[np.maximum(start - 1, 0)], 0)
        left_seen = cum_left - left_before_block
        left_total = np.minimum(w, n - start)
        # each right element is inverted with every left element merged after it
        inv += int((left_total - left_seen)[~is_left].sum())
        vals = vals[order]
        w *= 2
    return inv


def _tau_from_ranks(R: np.ndarray) -> float:
    n = R.shape[0]
    if n < 2:
        raise ValueError("Kendall's tau needs at least two observations")
    y = R[np.argsort(R[:, 0]), 1]
    pairs = n * (n - 1) // 2
    discordant = _count_inversions(y)
    return (pairs - 2 * discordant) / pairs


def kendall_tau(sample) -> float:
    """Sample Kendall's tau, ``(concordant - discordant) / (n choose 2)``, in O(n log n).

    Depends on the sample only through its ranks, so raw data, uniform
    pairs and pseudo-observations all give the same float.
    """
    X = sample.pairs if isinstance(sample, PairSample) else check_pairs(sample)
    return _tau_from_ranks(ranks(X))


def kendall_tau_naive(sample) -> float:
    """O(n^2) pair count; reference implementation for testing."""
    X = sample.pairs if isinstance(sample, PairSample) else check_pairs(sample)
    n = X.shape[0]
    if n < 2:
        raise ValueError("Kendall's tau needs at least two observations")
    dx = np.sign(X[:, None, 0] - X[None, :, 0])
    dy = np.sign(X[:, None, 1] - X[None, :, 1])
    s = int(np.triu(dx * dy, 1).sum())
    return s / (n * (n - 1) // 2)


# -- asymptotic variances --------------------------------------------------------


def fgm_closed_form_variance(functional, theta: float, kind) -> float | None:
    """Known closed forms for the FGM family (``None`` where none is tabulated)."""
    functional = Functional.parse(functional)
    kind = EstimatorKind(kind)
    th = float(theta)
    if functional is Functional.T1:
        if kind is EstimatorKind.RANK:
            return (1.0 + th / 4.0) * (1.0 - th / 4.0)
        return (1.0 + th / 4.0) * (3.0 - th / 4.0)
    if functional in (Functional.T2, Functional.T5) and kind is EstimatorKind.RANK:
        return 2.0 / 5.0 + 3.0 * th / 70.0 - 11.0 * th * th / 150.0
    if functional is Functional.T2:
        return 2.0 + 2.0 * th / 5.0 - th * th / 25.0
    if functional is Functional.T5:
        return 0.5 - th / 10.0 - th * th / 25.0
    return None


# (weight, path) pairs; a path maps t in [0, 1] to a point (u, v)
_ONE = lambda t: np.ones_like(t)  # noqa: E731
_ID = lambda t: t  # noqa: E731
_FLIP = lambda t: 1.0 - t  # noqa: E731
_MEASURES = {
    Functional.T2: [(6.0, (_ID, _ID))],
    Functional.T4: [(4.0, (_ID, _ID)), (4.0, (_ID, _FLIP))],
    Functional.T5: [(6.0, (_ID, _ID)), (-3.0, (_ID, _ONE)), (-3.0, (_ONE, _ID))],
}


def _cov(model, kind, u, v, s, t):
    if kind is EstimatorKind.KNOWN:
        return _cov_c(model, u, v, s, t)
    return _chat_terms(model, u, v, s, t)[1]


def _line_variance(model, kind, functional, n):
    s, t, w = square_rule_cross(n)
    total = 0.0
    for wa, (fa, ga) in _MEASURES[functional]:
        for wb, (fb, gb) in _MEASURES[functional]:
            vals = _cov(model, kind, fa(s), ga(s), fb(t), gb(t))
            total += wa * wb * math.fsum(w * vals)
    return total


def _area_variance(model, kind, n):
    parts = [math.fsum(w * _cov(model, kind, u, v, s, t)) for u, v, s, t, w in hypercube_rule(n)]
    return 144.0 * math.fsum(parts)


def asymptotic_variance(
    functional,
    model: CopulaModel,
    estimator_kind,
    method: str = "auto",
    nodes: int | None = None,
    tol: float = 1e-4,
) -> VarianceResult:
    """Asymptotic variance of ``sqrt(n) (T(estimate) - T(C))``.

    Parameters
    ----------
    functional : Functional or str
        One of ``t1`` .. ``t5``.
    estimator_kind : {"known", "rank"}
        ``known`` integrates the covariance of the limit of ``C_n``, ``rank``
        that of the empirical copula limit.
    method : {"auto", "closed-form-fgm", "quadrature"}
        ``auto`` returns a tabulated FGM closed form when one exists and
        quadrature otherwise.
    nodes : int, optional
        Gauss-Legendre nodes per axis and per piece (default 32 for line
        measures, 12 for the area measure of T3).  The result uses ``2 * nodes``
        and the error bound is the change from ``nodes``.
    tol : float
        Largest acceptable error bound before :class:`QuadratureFailure`.
    """
    functional = Functional.parse(functional)
    kind = EstimatorKind(estimator_kind)
    if functional is Functional.KENDALL:
        raise ValueError("asymptotic variances are implemented for t1..t5")
    method = method if method == "auto" else VarianceMethod(method)

    if method in ("auto", VarianceMethod.CLOSED_FORM_FGM):
        closed = None
        if model.family in (Family.FGM, Family.INDEPENDENCE):
            th = model.theta if model.family is Family.FGM else 0.0
            closed = fgm_closed_form_variance(functional, th, kind)
        if closed is not None:
            return VarianceResult(functional, kind, closed, VarianceMethod.CLOSED_FORM_FGM, None)
        if method is VarianceMethod.CLOSED_FORM_FGM:
            raise ValueError(f"no closed form for {functional.value} under {model.name}")

    if functional is Functional.T1:
        half = np.array([0.5])
        val = 16.0 * float(_cov(model, kind, half, half, half, half)[0])
        return VarianceResult(functional, kind, val, VarianceMethod.QUADRATURE, 0.0)

    if functional is Functional.T3:
        n = nodes or 12
        coarse = _area_variance(model, kind, n)
        fine = _area_variance(model, kind, 2 * n)
    else:
        n = nodes or 32
        coarse = _line_variance(model, kind, functional, n)
        fine = _line_variance(model, kind, functional, 2 * n)
    err = abs(fine - coarse)
    if err > tol:
        raise QuadratureFailure(
            f"{functional.value} variance under {model.name}: node doubling changed the value by {err:.2g} > {tol:g}"
        )
    return VarianceResult(functional, kind, max(fine, 0.0), VarianceMethod.QUADRATURE, err)


# -- estimator API ---------------------------------------------------------------


class ConcordanceEstimator(BaseEstimator):
    """Plug-in estimates of concordance functionals from a bivariate sample.

    Parameters
    ----------
    functionals : sequence of str, default=("t1", "t2", "t3", "t4")
    margins : {"rank", "known"}, default="rank"
        ``rank`` plugs in the empirical copula of ``X``; ``known`` treats
        ``X`` as uniform-margin draws and plugs in their empirical CDF.

    Attributes
    ----------
    estimates_ : dict
        Functional id to estimate.
    grid_ : GridFunction
    """

    def __init__(self, functionals=("t1", "t2", "t3", "t4"), margins: str = "rank"):
        self.functionals = functionals
        self.margins = margins

    def fit(self, X, y=None):
        X = check_pairs(X)
        if self.margins == "rank":
            grid = empirical_copula(PairSample(X))
        elif self.margins == "known":
            grid = known_margin_empirical(PairSample(X, MarginKind.UNIFORM))
        else:
            raise ValueError(f"margins must be 'rank' or 'known', got {self.margins!r}")
        funcs = [Functional.parse(f) for f in self.functionals]
        self.grid_ = grid
        self.estimates_ = {f.value: evaluate(f, grid) for f in funcs}
        return self

    def predict(self, X=None):
        """Estimates in the order of ``functionals``."""
        check_is_fitted(self, "estimates_")
        return np.array([self.estimates_[Functional.parse(f).value] for f in self.functionals])
