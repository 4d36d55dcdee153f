"""Covariance functions of the limiting empirical processes and dominance scans.

``C`` below is the limit of ``sqrt(n) (C_n - C)`` (a pinned C-Brownian
sheet) and ``Chat`` the limit of ``sqrt(n) (hat C_n - C)``,

    Chat(u, v) = C(u, v) - dC/du(u, v) C(u, 1) - dC/dv(u, v) C(1, v).

Its covariance is expanded by bilinearity into the covariance of the first
process plus four cross terms ``A_i`` minus four terms ``B_i``, each a
covariance of the first process weighted by partial derivatives.
"""

from __future__ import annotations

import enum
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .copulas import Condition, CopulaModel, Family, check_condition, interior_grid
from .exceptions import DomainError

__all__ = [
    "cov_process_C",
    "cov_process_Chat",
    "CovarianceReport",
    "covariance_difference_independence",
    "multivariate_independence_difference",
    "Proposition",
    "DominanceCertificate",
    "certify_dominance",
    "diagonal_counterexample_search",
    "CERTIFY_TOL",
]

CERTIFY_TOL = 1e-9


def _unit(*xs):
    out = []
    for x in xs:
        x = np.asarray(x, dtype=float)
        if np.any(np.isnan(x)) or np.any((x < 0.0) | (x > 1.0)):
            raise DomainError("query coordinates must lie in [0, 1]")
        out.append(x)
    return np.broadcast_arrays(*out)


def _cov_c(model: CopulaModel, u, v, s, t):
    return model.cdf(np.minimum(u, s), np.minimum(v, t)) - model.cdf(u, v) * model.cdf(s, t)


def cov_process_C(model: CopulaModel, u, v, s, t):
    """``cov{C(u, v), C(s, t)} = C(u ^ s, v ^ t) - C(u, v) C(s, t)``."""
    u, v, s, t = _unit(u, v, s, t)
    return _cov_c(model, u, v, s, t)


def _clamped_partial(model: CopulaModel, u, v, axis: int):
    # dC/du multiplies C(u, 1), which vanishes identically for u in {0, 1};
    # likewise dC/dv multiplies C(1, v).  Skip the partial there.
    x = u if axis == 0 else v
    live = (x > 0.0) & (x < 1.0)
    out = np.zeros(u.shape)
    if live.any():
        f = model.partial_u if axis == 0 else model.partial_v
        out[live] = f(u[live], v[live])
    return out


@dataclass(frozen=True)
class CovarianceReport:
    """Covariances of both limit processes at ``(u, v)`` and ``(s, t)``.

    Fields are floats for scalar queries and arrays for array queries.
    ``difference`` is ``cov_Chat - cov_C``, which equals
    ``sum(a_terms) - sum(b_terms)``.
    """

    query: tuple
    cov_C: object
    cov_Chat: object
    a_terms: tuple
    b_terms: tuple
    difference: object

    def to_dict(self) -> dict:
        f = lambda x: np.asarray(x).tolist()  # noqa: E731
        return {
            "query": [f(q) for q in self.query],
            "cov_C": f(self.cov_C),
            "cov_Chat": f(self.cov_Chat),
            "a_terms": [f(a) for a in self.a_terms],
            "b_terms": [f(b) for b in self.b_terms],
            "difference": f(self.difference),
        }


def _chat_terms(model, u, v, s, t):
    one = np.ones(u.shape)
    d1uv = _clamped_partial(model, u, v, 0)
    d2uv = _clamped_partial(model, u, v, 1)
    d1st = _clamped_partial(model, s, t, 0)
    d2st = _clamped_partial(model, s, t, 1)
    cc = _cov_c(model, u, v, s, t)
    A = (
        d1uv * d1st * _cov_c(model, u, one, s, one),
        d1uv * d2st * _cov_c(model, u, one, one, t),
        d2uv * d1st * _cov_c(model, one, v, s, one),
        d2uv * d2st * _cov_c(model, one, v, one, t),
    )
    B = (
        d1uv * _cov_c(model, u, one, s, t),
        d2uv * _cov_c(model, one, v, s, t),
        d1st * _cov_c(model, u, v, s, one),
        d2st * _cov_c(model, u, v, one, t),
    )
    chat = cc - (B[0] + B[1] + B[2] + B[3]) + (A[0] + A[1] + A[2] + A[3])
    return cc, chat, A, B


def cov_process_Chat(model: CopulaModel, u, v, s, t) -> CovarianceReport:
    """Covariance of the empirical copula limit at ``(u, v)`` and ``(s, t)``.

    Arguments broadcast.  On the border, terms whose process factor vanishes
    identically are set to zero without evaluating the partial derivative.

    >>> from copulacov.copulas import CopulaModel
    >>> rep = cov_process_Chat(CopulaModel("independence"), 0.5, 0.5, 0.5, 0.5)
    >>> float(rep.cov_Chat), float(rep.cov_C)
    (0.0625, 0.1875)
    """
    u, v, s, t = _unit(u, v, s, t)
    scalar = u.ndim == 0
    cc, chat, A, B = _chat_terms(model, *(np.atleast_1d(x) for x in (u, v, s, t)))
    diff = (A[0] + A[1] + A[2] + A[3]) - (B[0] + B[1] + B[2] + B[3])
    if scalar:
        pick = lambda x: float(x[0])  # noqa: E731
        return CovarianceReport(
            (float(u), float(v), float(s), float(t)),
            pick(cc), pick(chat), tuple(map(pick, A)), tuple(map(pick, B)), pick(diff),
        )
    return CovarianceReport((u, v, s, t), cc, chat, A, B, diff)


def covariance_difference_independence(u, v, s, t):
    """Closed form of ``cov{Chat} - cov{C}`` under independence: ``2uvst - us(v^t) - vt(u^s)``."""
    u, v, s, t = _unit(u, v, s, t)
    return 2.0 * u * v * s * t - u * s * np.minimum(v, t) - v * t * np.minimum(u, s)


def multivariate_independence_difference(u, v):
    """``cov{Chat_d(u), Chat_d(v)} - cov{C_d(u), C_d(v)}`` for the d-variate independence copula.

    ``u`` and ``v`` are arrays whose last axis has length ``d >= 2``.  Points
    with a zero coordinate give 0, since both processes vanish there.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1] or u.shape[-1] < 2:
        raise ValueError("u and v need the same dimension d >= 2 on their last axis")
    if np.any(np.isnan(u)) or np.any(np.isnan(v)) or np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
        raise DomainError("coordinates must lie in [0, 1]")
    u, v = np.broadcast_arrays(u, v)
    zero = np.any(u == 0.0, axis=-1) | np.any(v == 0.0, axis=-1)
    uu = np.where(u == 0.0, 1.0, u)
    vv = np.where(v == 0.0, 1.0, v)
    prod = uu * vv
    ratio = (np.minimum(uu, vv) - prod) / prod
    out = -np.prod(uu, axis=-1) * np.prod(vv, axis=-1) * ratio.sum(axis=-1)
    out = np.where(zero, 0.0, out)
    return out[()] if out.ndim == 0 else out


# -- certification ------------------------------------------------------------------


class Proposition(str, enum.Enum):
    P1 = "P1_full_covariance"
    P2 = "P2_variance_only"
    P4 = "P4_multivariate"

    @classmethod
    def parse(cls, x) -> "Proposition":
        if isinstance(x, cls):
            return x
        key = str(x).strip().upper()
        for p in cls:
            if key in (p.value.upper(), p.name, p.name[1:]):
                return p
        raise ValueError(f"unknown proposition {x!r}; expected 1, 2 or 4")


@dataclass(frozen=True)
class DominanceCertificate:
    proposition: Proposition
    grid_resolution: int
    max_difference: float
    witness: tuple
    certified: bool
    tolerance: float = CERTIFY_TOL
    premise_warning: str | None = None
    dim: int = 2
    points: dict | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "proposition": self.proposition.value,
            "grid_resolution": self.grid_resolution,
            "dim": self.dim,
            "max_difference": self.max_difference,
            "witness": list(self.witness),
            "certified": self.certified,
            "tolerance": self.tolerance,
            "premise_warning": self.premise_warning,
        }

    def to_csv(self, path: str | os.PathLike | None = None, header_lines=()) -> str:
        """Per-point dump; columns depend on the proposition scanned."""
        if self.points is None:
            raise ValueError("certificate was built without keep_points=True")
        cols = list(self.points)
        data = np.column_stack([np.ravel(self.points[c]) for c in cols])
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(",".join(cols) + "\n")
        fmt = ",".join(["%.17g"] * len(cols))
        np.savetxt(buf, data, fmt=fmt)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def diagonal_counterexample_search(model: CopulaModel, kmax: int = 40):
    """Evaluate ``var{Chat(u, u)} - var{C(u, u)}`` on the geometric diagonal ``u = 2^-k``."""
    u = 2.0 ** -np.arange(1, kmax + 1)
    rep = cov_process_Chat(model, u, u, u, u)
    return u, rep.difference


def certify_dominance(
    model: CopulaModel,
    proposition,
    grid_resolution: int = 21,
    tol: float = CERTIFY_TOL,
    dim: int = 2,
    keep_points: bool = False,
) -> DominanceCertificate:
    """Scan for the largest value of ``cov{Chat} - cov{C}`` on an interior grid.

    P1 scans all ``m^4`` quadruples ``(u, v, s, t)`` of the interior grid
    ``i / (m + 1)``.  P2 scans the ``m^2`` variances ``s = u, t = v`` plus the
    diagonal ``u = v = 2^-k``, ``k = 1..40``.  P4 scans ``m^(2d)`` pairs of
    points for the d-variate independence copula.  The certificate holds when
    the maximum does not exceed ``tol``.  An unmet premise (LTD for P1,
    condition3 for P2) is reported in ``premise_warning``.
    """
    prop = Proposition.parse(proposition)
    m = int(grid_resolution)
    g = interior_grid(m)
    warning = None
    points = None

    if prop is Proposition.P4:
        if model.family is not Family.INDEPENDENCE:
            raise ValueError("the multivariate scan applies to the independence copula only")
        if dim < 2:
            raise ValueError("dim must be at least 2")
        axes = np.meshgrid(*([g] * (2 * dim)), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=-1)
        diff = multivariate_independence_difference(pts[:, :dim], pts[:, dim:])
        i = int(np.argmax(diff))
        witness = tuple(float(x) for x in pts[i])
        if keep_points:
            points = {f"u{k + 1}": pts[:, k] for k in range(dim)}
            points.update({f"v{k + 1}": pts[:, dim + k] for k in range(dim)})
            points["diff"] = diff
        best = float(diff[i])
        return DominanceCertificate(prop, m, best, witness, best <= tol, tol, None, dim, points)

    if prop is Proposition.P1:
        premise = check_condition(model, Condition.LTD, 101)
        if not premise.holds:
            warning = f"premise LTD fails (worst violation {premise.worst_violation:.3g} at {premise.witness})"
        best = -np.inf
        witness = None
        chunks = {k: [] for k in ("u", "v", "s", "t", "cov_C", "cov_Chat", "diff")}
        V, S, T = np.meshgrid(g, g, g, indexing="ij")
        V, S, T = V.ravel(), S.ravel(), T.ravel()
        # one u-slice at a time keeps memory at m^3
        for u0 in g:
            U = np.full(V.shape, u0)
            cc, chat, _, _ = _chat_terms(model, U, V, S, T)
            diff = chat - cc
            j = int(np.argmax(diff))
            if diff[j] > best:
                best = float(diff[j])
                witness = (float(u0), float(V[j]), float(S[j]), float(T[j]))
            if keep_points:
                for k, arr in zip(chunks, (U, V, S, T, cc, chat, diff)):
                    chunks[k].append(arr)
        if keep_points:
            points = {k: np.concatenate(vs) for k, vs in chunks.items()}
        return DominanceCertificate(prop, m, best, witness, best <= tol, tol, warning, 2, points)

    premise = check_condition(model, Condition.CONDITION3, 101)
    if not premise.holds:
        warning = f"premise condition3 fails (worst violation {premise.worst_violation:.3g} at {premise.witness})"
    U, V = np.meshgrid(g, g, indexing="ij")
    U, V = U.ravel(), V.ravel()
    du = 2.0 ** -np.arange(1, 41)
    U = np.concatenate([U, du])
    V = np.concatenate([V, du])
    cc, chat, _, _ = _chat_terms(model, U, V, U, V)
    diff = chat - cc
    j = int(np.argmax(diff))
    best = float(diff[j])
    if keep_points:
        points = {"u": U, "v": V, "diff": diff}
    return DominanceCertificate(prop, m, best, (float(U[j]), float(V[j])), best <= tol, tol, warning, 2, points)
