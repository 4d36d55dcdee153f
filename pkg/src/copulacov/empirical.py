"""Empirical estimators of a copula: ``C_n``, the empirical copula and its checkerboard.

All three estimators are stored as :class:`GridFunction` objects built from
the atoms of the sample.  Evaluation is exact, and so are the integrals over
the diagonal, the anti-diagonal, the unit square and the two margins, which
come from closed forms in the atoms.  For rank-based kinds those closed forms
are evaluated in integer arithmetic and divided once, so identities such as
``int_0^1 hat C_n(t, 1) dt = (n - 1) / (2n)`` hold to the last bit.
"""

from __future__ import annotations

import enum
import io
import os

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError, KindMismatch, MarginKindMismatch, TiesPresent
from .samples import MarginKind, PairSample, check_pairs, has_ties

__all__ = [
    "GridKind",
    "GridFunction",
    "ranks",
    "pseudo_observations",
    "known_margin_empirical",
    "empirical_copula",
    "checkerboard",
    "integrate_diag",
    "integrate_antidiag",
    "integrate_full",
    "integrate_margin",
    "RankTransformer",
    "EmpiricalCopula",
]

# lattice count tables are (n + 1)^2 integers; above this size evaluate by counting
_LATTICE_MAX = 2048
# below this many queries, counting beats building the table
_FEW_QUERIES = 64


class GridKind(str, enum.Enum):
    KNOWN_MARGIN = "known-margin"
    EMPIRICAL_COPULA = "empirical-copula"
    CHECKERBOARD = "checkerboard"


def _ranks_1d(x: np.ndarray, rng=None) -> np.ndarray:
    if rng is None:
        order = np.argsort(x, kind="stable")
    else:
        order = np.lexsort((rng.permutation(x.shape[0]), x))
    r = np.empty(x.shape[0], dtype=np.int64)
    r[order] = np.arange(1, x.shape[0] + 1)
    return r


def ranks(X, ties: str = "raise", random_state=None) -> np.ndarray:
    """1-based column ranks of an ``(n, 2)`` array.

    Parameters
    ----------
    ties : {"raise", "random"}
        ``"raise"`` rejects tied coordinates with :class:`TiesPresent`;
        ``"random"`` breaks ties uniformly at random using ``random_state``.
    """
    X = check_pairs(X)
    if ties == "raise":
        if has_ties(X):
            raise TiesPresent("sample contains tied x- or y-coordinates")
        rng = None
    elif ties == "random":
        rng = check_random_state(random_state)
    else:
        raise ValueError(f"ties must be 'raise' or 'random', got {ties!r}")
    return np.column_stack([_ranks_1d(X[:, j], rng) for j in range(2)])


def pseudo_observations(sample: PairSample, ties: str = "raise", random_state=None) -> PairSample:
    """Rank-transform a sample to ``(R_i / n, S_i / n)``.

    >>> s = PairSample([[3.2, -1.0], [1.1, 4.0], [2.0, 0.0]])
    >>> pseudo_observations(s).pairs * 3
    array([[3., 1.],
           [1., 3.],
           [2., 2.]])
    """
    R = ranks(sample.pairs, ties=ties, random_state=random_state)
    return PairSample(R / sample.n, MarginKind.UNIFORM)


class GridFunction:
    """Exact step or multilinear representation of an empirical copula estimate.

    Use :func:`known_margin_empirical`, :func:`empirical_copula` or
    :func:`checkerboard` to build one.  Instances are immutable.

    Attributes
    ----------
    kind : GridKind
    n : int
    atoms : ndarray of shape (n, 2)
        Mass points ``(U_i, V_i)`` for the known-margin kind, ``(R_i/n, S_i/n)``
        for the other two (upper-right cell corners for the checkerboard).
    ranks : ndarray of shape (n, 2), int
        Column ranks of the atoms.
    """

    def __init__(self, kind: GridKind, atoms: np.ndarray, rank_pairs: np.ndarray):
        self.kind = GridKind(kind)
        self.atoms = np.array(atoms, dtype=float)
        self.ranks = np.array(rank_pairs, dtype=np.int64)
        self.atoms.setflags(write=False)
        self.ranks.setflags(write=False)
        self.n = int(self.atoms.shape[0])
        self._sorted = (np.sort(self.atoms[:, 0]), np.sort(self.atoms[:, 1]))
        self._table = None

    def __repr__(self) -> str:
        return f"GridFunction(kind={self.kind.value!r}, n={self.n})"

    @property
    def is_rank_based(self) -> bool:
        return self.kind is not GridKind.KNOWN_MARGIN

    def lattice_counts(self) -> np.ndarray:
        """``M[i, j] = #{k : R_k <= i, S_k <= j}`` for ``i, j = 0..n``."""
        if self._table is None:
            n = self.n
            P = np.zeros((n + 1, n + 1), dtype=np.int64)
            P[self.ranks[:, 0], self.ranks[:, 1]] = 1
            M = P.cumsum(axis=0).cumsum(axis=1)
            M.setflags(write=False)
            self._table = M
        return self._table

    def __call__(self, u, v):
        return self.evaluate(u, v)

    def evaluate(self, u, v):
        """Evaluate at ``(u, v)``; arrays broadcast."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(np.isnan(u)) or np.any(np.isnan(v)):
            raise DomainError("u and v must not be NaN")
        u, v = np.broadcast_arrays(u, v)
        shape = u.shape
        u = np.clip(u.ravel(), 0.0, 1.0)
        v = np.clip(v.ravel(), 0.0, 1.0)
        if self.kind is GridKind.CHECKERBOARD:
            out = self._eval_checkerboard(u, v)
        else:
            out = self._eval_step(u, v)
        out = out.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def _use_table(self, q: int) -> bool:
        return self._table is not None or (self.n <= _LATTICE_MAX and q > _FEW_QUERIES)

    def _eval_step(self, u, v):
        i = np.searchsorted(self._sorted[0], u, side="right")
        j = np.searchsorted(self._sorted[1], v, side="right")
        if self._use_table(u.shape[0]):
            return self.lattice_counts()[i, j] / self.n
        # rank of the atom is <= i iff atom <= u
        out = np.empty(u.shape[0])
        R, S = self.ranks[:, 0], self.ranks[:, 1]
        for start in range(0, u.shape[0], 256):
            sl = slice(start, start + 256)
            hits = (R[None, :] <= i[sl, None]) & (S[None, :] <= j[sl, None])
            out[sl] = hits.sum(axis=1)
        return out / self.n

    def _eval_checkerboard(self, u, v):
        n = self.n
        x = n * u
        y = n * v
        if self._use_table(u.shape[0]):
            M = self.lattice_counts()
            i = np.minimum(np.floor(x).astype(np.int64), n - 1)
            j = np.minimum(np.floor(y).astype(np.int64), n - 1)
            fx = x - i
            fy = y - j
            val = (
                M[i, j] * (1 - fx) * (1 - fy)
                + M[i + 1, j] * fx * (1 - fy)
                + M[i, j + 1] * (1 - fx) * fy
                + M[i + 1, j + 1] * fx * fy
            )
            return val / n
        out = np.empty(u.shape[0])
        a = (self.ranks[:, 0] - 1).astype(float)
        b = (self.ranks[:, 1] - 1).astype(float)
        for start in range(0, u.shape[0], 256):
            sl = slice(start, start + 256)
            gu = np.clip(x[sl, None] - a[None, :], 0.0, 1.0)
            gv = np.clip(y[sl, None] - b[None, :], 0.0, 1.0)
            out[sl] = (gu * gv).sum(axis=1)
        return out / n

    # -- exact integrals --------------------------------------------------

    def integral_diag(self) -> float:
        """``int_0^1 f(t, t) dt``."""
        n = self.n
        R, S = self.ranks[:, 0], self.ranks[:, 1]
        if self.kind is GridKind.KNOWN_MARGIN:
            return float(np.mean(1.0 - np.maximum(self.atoms[:, 0], self.atoms[:, 1])))
        if self.kind is GridKind.EMPIRICAL_COPULA:
            return int(n * n - np.maximum(R, S).sum()) / (n * n)
        # per cell: h/3 + 1 - a - h on the diagonal, 1 - max(a, b) - h/2 off it
        mx = np.maximum(R, S) - 1
        num = np.where(R == S, 6 * n - 6 * mx - 4, 6 * n - 6 * mx - 3)
        return int(num.sum()) / (6 * n * n)

    def integral_antidiag(self) -> float:
        """``int_0^1 f(t, 1 - t) dt``."""
        n = self.n
        R, S = self.ranks[:, 0], self.ranks[:, 1]
        if self.kind is GridKind.KNOWN_MARGIN:
            return float(np.mean(np.maximum(1.0 - self.atoms[:, 0] - self.atoms[:, 1], 0.0)))
        if self.kind is GridKind.EMPIRICAL_COPULA:
            return int(np.maximum(n - R - S, 0).sum()) / (n * n)
        # ramp up on [a, a + h] meets ramp down on [c, c + h], c = 1 - b - h
        alpha = R - 1
        gamma = n - S
        num = np.where(gamma > alpha, 6 * (gamma - alpha), np.where(gamma == alpha, 1, 0))
        return int(num.sum()) / (6 * n * n)

    def integral_full(self) -> float:
        """``int_0^1 int_0^1 f(u, v) du dv``."""
        n = self.n
        R, S = self.ranks[:, 0], self.ranks[:, 1]
        if self.kind is GridKind.KNOWN_MARGIN:
            return float(np.mean((1.0 - self.atoms[:, 0]) * (1.0 - self.atoms[:, 1])))
        if self.kind is GridKind.EMPIRICAL_COPULA:
            return int(((n - R) * (n - S)).sum()) / (n ** 3)
        return int(((2 * n - 2 * R + 1) * (2 * n - 2 * S + 1)).sum()) / (4 * n ** 3)

    def integral_margin(self, axis: int = 0) -> float:
        """``int_0^1 f(t, 1) dt`` for ``axis=0`` or ``int_0^1 f(1, t) dt`` for ``axis=1``."""
        if axis not in (0, 1):
            raise ValueError("axis must be 0 or 1")
        n = self.n
        if self.kind is GridKind.KNOWN_MARGIN:
            return float(np.mean(1.0 - self.atoms[:, axis]))
        R = self.ranks[:, axis]
        if self.kind is GridKind.EMPIRICAL_COPULA:
            return int(n * n - R.sum()) / (n * n)
        return int((2 * n - 2 * R + 1).sum()) / (2 * n * n)

    # -- export -----------------------------------------------------------

    def lattice(self, resolution: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints of the function (or a uniform grid of ``resolution + 1`` points)."""
        if resolution is not None:
            g = np.linspace(0.0, 1.0, int(resolution) + 1)
            return g, g
        if self.kind is GridKind.KNOWN_MARGIN:
            return np.concatenate([[0.0], self._sorted[0]]), np.concatenate([[0.0], self._sorted[1]])
        g = np.arange(self.n + 1) / self.n
        return g, g

    def to_csv(self, path: str | os.PathLike | None = None, resolution: int | None = None) -> str:
        """Dump ``u,v,value`` rows over :meth:`lattice`."""
        gu, gv = self.lattice(resolution)
        U, V = np.meshgrid(gu, gv, indexing="ij")
        vals = self.evaluate(U, V)
        buf = io.StringIO()
        buf.write("u,v,value\n")
        for a, b, c in zip(U.ravel(), V.ravel(), vals.ravel()):
            buf.write(f"{a:.17g},{b:.17g},{c:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def known_margin_empirical(sample: PairSample) -> GridFunction:
    """Empirical distribution function ``C_n`` of a sample drawn from the copula."""
    if sample.margin_kind is not MarginKind.UNIFORM:
        raise MarginKindMismatch("known-margin estimator needs uniform-margin pairs (U_i, V_i)")
    R = ranks(sample.pairs)
    return GridFunction(GridKind.KNOWN_MARGIN, sample.pairs, R)


def empirical_copula(sample: PairSample, ties: str = "raise", random_state=None) -> GridFunction:
    """Rank-based empirical copula ``hat C_n``; uses nothing but the ranks of ``sample``."""
    R = ranks(sample.pairs, ties=ties, random_state=random_state)
    return GridFunction(GridKind.EMPIRICAL_COPULA, R / sample.n, R)


def checkerboard(empirical: GridFunction) -> GridFunction:
    """Multilinear extension of the empirical copula's lattice values.

    The result is a genuine copula (uniform mass ``1/n`` on each cell holding
    a rank pair).  It agrees with its source on the lattice ``i / n`` and lies
    within ``2/n`` of it in sup norm.  No copula can do better than
    ``2/n - o(1)`` in general: for ranks ``(1, 2), (2, 1)`` the empirical
    copula vanishes at ``(u, u)``, ``u < 1``, while every copula is at least
    ``2u - 1`` there.
    """
    if empirical.kind is not GridKind.EMPIRICAL_COPULA:
        raise KindMismatch(f"checkerboard needs an empirical copula, got {empirical.kind.value}")
    return GridFunction(GridKind.CHECKERBOARD, empirical.atoms, empirical.ranks)


def integrate_diag(f: GridFunction) -> float:
    return f.integral_diag()


def integrate_antidiag(f: GridFunction) -> float:
    return f.integral_antidiag()


def integrate_full(f: GridFunction) -> float:
    return f.integral_full()


def integrate_margin(f: GridFunction, axis: int = 0) -> float:
    return f.integral_margin(axis)


# -- estimator API -----------------------------------------------------------


class RankTransformer(TransformerMixin, BaseEstimator):
    """Map each column through its empirical distribution function.

    ``fit_transform`` returns the pseudo-observations ``(R_i / n, S_i / n)``;
    ``transform`` on new data evaluates the fitted right-continuous empirical
    margins ``F_n`` and ``G_n``.

    Parameters
    ----------
    ties : {"raise", "random"}, default="raise"
    random_state : int, RandomState instance or None
        Used only when ``ties="random"``.
    """

    def __init__(self, ties: str = "raise", random_state=None):
        self.ties = ties
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_pairs(X)
        if self.ties == "raise" and has_ties(X):
            raise TiesPresent("sample contains tied x- or y-coordinates")
        self.sorted_ = [np.sort(X[:, 0]), np.sort(X[:, 1])]
        self.n_samples_ = X.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "sorted_")
        X = check_pairs(X)
        cols = [np.searchsorted(s, X[:, j], side="right") for j, s in enumerate(self.sorted_)]
        return np.column_stack(cols) / self.n_samples_

    def fit_transform(self, X, y=None):
        X = check_pairs(X)
        self.fit(X)
        return ranks(X, ties=self.ties, random_state=self.random_state) / X.shape[0]


class EmpiricalCopula(BaseEstimator):
    """Empirical copula estimator.

    Parameters
    ----------
    margins : {"rank", "known"}, default="rank"
        ``"rank"`` builds ``hat C_n`` from the ranks of ``X``.  ``"known"``
        treats ``X`` as draws ``(U_i, V_i)`` from the copula and builds ``C_n``.
    smoothing : {"none", "checkerboard"}, default="none"
        ``"checkerboard"`` replaces ``hat C_n`` by its multilinear extension.
    ties : {"raise", "random"}, default="raise"
    random_state : int, RandomState instance or None

    Attributes
    ----------
    grid_ : GridFunction
    n_samples_ : int

    Examples
    --------
    >>> import numpy as np
    >>> est = EmpiricalCopula().fit(np.array([[0.1, 5.0], [0.4, 2.0], [0.3, 9.0]]))
    >>> float(est.cdf([[0.7, 0.7]])[0])
    0.3333333333333333
    """

    def __init__(self, margins: str = "rank", smoothing: str = "none", ties: str = "raise", random_state=None):
        self.margins = margins
        self.smoothing = smoothing
        self.ties = ties
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_pairs(X)
        if self.margins == "rank":
            grid = empirical_copula(PairSample(X), ties=self.ties, random_state=self.random_state)
        elif self.margins == "known":
            grid = known_margin_empirical(PairSample(X, MarginKind.UNIFORM))
        else:
            raise ValueError(f"margins must be 'rank' or 'known', got {self.margins!r}")
        if self.smoothing == "checkerboard":
            grid = checkerboard(grid)
        elif self.smoothing != "none":
            raise ValueError(f"smoothing must be 'none' or 'checkerboard', got {self.smoothing!r}")
        self.grid_ = grid
        self.n_samples_ = X.shape[0]
        return self

    def cdf(self, X):
        """Evaluate the fitted estimate at the rows ``(u, v)`` of ``X``."""
        check_is_fitted(self, "grid_")
        X = check_pairs(X)
        return self.grid_.evaluate(X[:, 0], X[:, 1])
