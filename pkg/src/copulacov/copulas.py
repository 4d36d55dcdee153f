"""Parametric bivariate copula families.

Each family provides its distribution function, the partial derivative
``dC/du`` in closed form, and the inverse of that derivative in ``v``, which is
all conditional-inversion sampling needs.  Every implemented family is
exchangeable, so ``dC/dv(u, v) = dC/du(v, u)``.

Values on the border of the unit square are set from the uniform-margin
identities ``C(u, 0) = C(0, v) = 0``, ``C(u, 1) = u`` and ``C(1, v) = v``
rather than from the family formula, which may be undefined there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ._bvn import bvn_cdf
from .exceptions import DerivativeUndefined, DomainError, ParameterOutOfRange
from .samples import MarginKind, PairSample

__all__ = [
    "Family",
    "CopulaModel",
    "Condition",
    "ConditionReport",
    "check_condition",
    "make_copula",
    "interior_grid",
    "CONDITION_TOL",
]

CONDITION_TOL = 1e-9
_BISECT_TOL = 1e-12
_BISECT_EPS = 1e-15


class Family(str, enum.Enum):
    INDEPENDENCE = "independence"
    FGM = "fgm"
    GUMBEL_BARNETT = "gumbel-barnett"
    CLAYTON = "clayton"
    GAUSSIAN = "gaussian"


# -- family kernels, interior (0, 1)^2 only ------------------------------------


def _indep_cdf(u, v, theta):
    return u * v


def _indep_du(u, v, theta):
    return v * np.ones_like(u)


def _indep_inv(u, w, theta):
    return w.copy()


def _fgm_cdf(u, v, theta):
    return u * v + theta * u * v * (1.0 - u) * (1.0 - v)


def _fgm_du(u, v, theta):
    return v + theta * v * (1.0 - v) * (1.0 - 2.0 * u)


def _fgm_inv(u, w, theta):
    # solve a v^2 - (1 + a) v + w = 0 on [0, 1] with a = theta (1 - 2u);
    # rationalised root stays accurate as a -> 0
    a = theta * (1.0 - 2.0 * u)
    b = 1.0 + a
    disc = np.sqrt(np.maximum(b * b - 4.0 * a * w, 0.0))
    return 2.0 * w / (b + disc)


def _gb_cdf(u, v, theta):
    return u * v * np.exp(-theta * np.log(u) * np.log(v))


def _gb_du(u, v, theta):
    lv = np.log(v)
    return v * np.exp(-theta * np.log(u) * lv) * (1.0 - theta * lv)


def _gb_inv(u, w, theta):
    lo = np.full_like(w, _BISECT_EPS)
    hi = np.full_like(w, 1.0 - _BISECT_EPS)
    while np.max(hi - lo) > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        below = _gb_du(u, mid, theta) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _clayton_cdf(u, v, theta):
    return (u ** -theta + v ** -theta - 1.0) ** (-1.0 / theta)


def _clayton_du(u, v, theta):
    return (_clayton_cdf(u, v, theta) / u) ** (1.0 + theta)


def _clayton_inv(u, w, theta):
    return ((w ** (-theta / (1.0 + theta)) - 1.0) * u ** -theta + 1.0) ** (-1.0 / theta)


def _gauss_cdf(u, v, rho):
    return bvn_cdf(ndtri(u), ndtri(v), rho)


def _gauss_du(u, v, rho):
    return ndtr((ndtri(v) - rho * ndtri(u)) / math.sqrt(1.0 - rho * rho))


def _gauss_inv(u, w, rho):
    return ndtr(rho * ndtri(u) + math.sqrt(1.0 - rho * rho) * ndtri(w))


@dataclass(frozen=True)
class _Kernel:
    cdf: object
    du: object
    inv: object
    lo: float | None
    hi: float | None
    lo_open: bool
    hi_open: bool
    # derivative in u has a closed form on the whole of [0, 1]
    du_closed: bool


_KERNELS = {
    Family.INDEPENDENCE: _Kernel(_indep_cdf, _indep_du, _indep_inv, None, None, False, False, True),
    Family.FGM: _Kernel(_fgm_cdf, _fgm_du, _fgm_inv, -1.0, 1.0, False, False, True),
    Family.GUMBEL_BARNETT: _Kernel(_gb_cdf, _gb_du, _gb_inv, 0.0, 1.0, True, False, False),
    Family.CLAYTON: _Kernel(_clayton_cdf, _clayton_du, _clayton_inv, 0.0, math.inf, True, True, False),
    Family.GAUSSIAN: _Kernel(_gauss_cdf, _gauss_du, _gauss_inv, -1.0, 1.0, True, True, False),
}


def _as_unit(name, x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any((x < 0.0) | (x > 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


@dataclass(frozen=True)
class CopulaModel:
    """An immutable parametric copula.

    Parameters
    ----------
    family : Family or str
        One of ``independence``, ``fgm``, ``gumbel-barnett``, ``clayton``,
        ``gaussian``.
    theta : float, optional
        Dependence parameter: FGM in [-1, 1], Gumbel-Barnett in (0, 1],
        Clayton in (0, inf), Gaussian correlation in (-1, 1).  Must be
        omitted (or None) for the independence copula.

    Examples
    --------
    >>> C = CopulaModel("fgm", 1.0)
    >>> float(C.cdf(0.5, 0.5))
    0.3125
    """

    family: Family
    theta: float | None = None

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise ValueError(
                f"unknown family {self.family!r}; expected one of {[f.value for f in Family]}"
            ) from None
        object.__setattr__(self, "family", family)
        k = _KERNELS[family]
        if family is Family.INDEPENDENCE:
            if self.theta not in (None, 0, 0.0):
                raise ParameterOutOfRange("the independence copula takes no parameter")
            object.__setattr__(self, "theta", None)
            return
        if self.theta is None:
            raise ParameterOutOfRange(f"{family.value} requires a parameter")
        theta = float(self.theta)
        ok = math.isfinite(theta)
        ok = ok and (theta > k.lo if k.lo_open else theta >= k.lo)
        ok = ok and (theta < k.hi if k.hi_open else theta <= k.hi)
        if not ok:
            lb = "(" if k.lo_open else "["
            rb = ")" if k.hi_open else "]"
            raise ParameterOutOfRange(
                f"{family.value} parameter must lie in {lb}{k.lo}, {k.hi}{rb}, got {self.theta}"
            )
        object.__setattr__(self, "theta", theta)

    @property
    def _k(self) -> _Kernel:
        return _KERNELS[self.family]

    @property
    def name(self) -> str:
        if self.theta is None:
            return self.family.value
        return f"{self.family.value}({self.theta:g})"

    def to_dict(self) -> dict:
        return {"family": self.family.value, "theta": self.theta}

    def cdf(self, u, v):
        """Copula distribution function ``C(u, v)``."""
        u = _as_unit("u", u)
        v = _as_unit("v", v)
        u, v = np.broadcast_arrays(u, v)
        out = np.where(u == 1.0, v, np.where(v == 1.0, u, 0.0)).astype(float)
        inner = (u > 0.0) & (u < 1.0) & (v > 0.0) & (v < 1.0)
        if inner.any():
            out[inner] = self._k.cdf(u[inner], v[inner], self.theta)
        return out[()] if out.ndim == 0 else out

    def partial_u(self, u, v):
        """``dC/du`` at ``(u, v)``.

        Raises
        ------
        DerivativeUndefined
            If ``u`` is 0 or 1 and the family has no closed form there.
        """
        u = _as_unit("u", u)
        v = _as_unit("v", v)
        u, v = np.broadcast_arrays(u, v)
        if not self._k.du_closed and np.any((u == 0.0) | (u == 1.0)):
            raise DerivativeUndefined(f"dC/du of {self.name} is undefined at u in {{0, 1}}")
        out = np.where(v == 1.0, 1.0, 0.0)
        inner = (v > 0.0) & (v < 1.0)
        if inner.any():
            out[inner] = self._k.du(u[inner], v[inner], self.theta)
        out = np.clip(out, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def partial_v(self, u, v):
        """``dC/dv`` at ``(u, v)``; equals ``partial_u(v, u)`` by exchangeability."""
        try:
            return self.partial_u(v, u)
        except DerivativeUndefined:
            raise DerivativeUndefined(
                f"dC/dv of {self.name} is undefined at v in {{0, 1}}"
            ) from None

    def conditional_quantile(self, u, w):
        """Solve ``dC/du(u, v) = w`` for ``v``; ``u, w`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        u, w = np.broadcast_arrays(u, w)
        if np.any((u <= 0.0) | (u >= 1.0) | (w <= 0.0) | (w >= 1.0)):
            raise DomainError("conditional_quantile needs u and w in (0, 1)")
        return np.clip(self._k.inv(u, w.astype(float), self.theta), 0.0, 1.0)

    def sample(self, n: int, seed: int) -> PairSample:
        """Draw ``n`` i.i.d. pairs from the copula by conditional inversion.

        The generator is NumPy's PCG64 seeded through ``SeedSequence(seed)``.
        ``U`` is drawn first, then the conditional uniforms ``W``, each as
        ``(k + 1/2) / 2**53`` with ``k`` uniform on ``0 .. 2**53 - 1``.
        """
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n}")
        n = int(n)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
        u = _open_uniform(rng, n)
        w = _open_uniform(rng, n)
        v = self.conditional_quantile(u, w)
        return PairSample(np.column_stack([u, v]), MarginKind.UNIFORM)


def _open_uniform(rng, n):
    # midpoints of a 2^-53 lattice: uniform on the open interval (0, 1)
    return (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) * 2.0**-53


def make_copula(family: str, theta: float | None = None) -> CopulaModel:
    """Build a :class:`CopulaModel`; ``family`` accepts the CLI spellings too."""
    key = str(family).strip().lower().replace("_", "-")
    aliases = {"indep": "independence", "normal": "gaussian", "gb": "gumbel-barnett", "gumbelbarnett": "gumbel-barnett"}
    return CopulaModel(aliases.get(key, key), theta)


def interior_grid(m: int) -> np.ndarray:
    """The ``m`` equally spaced interior points ``i / (m + 1)``, ``i = 1..m``."""
    if int(m) != m or m < 1:
        raise ValueError(f"grid resolution must be a positive integer, got {m}")
    return np.arange(1, int(m) + 1) / (int(m) + 1.0)


# -- dependence conditions -------------------------------------------------------


class Condition(str, enum.Enum):
    LTD = "ltd"
    PQD = "pqd"
    NQD = "nqd"
    CONDITION3 = "condition3"


@dataclass(frozen=True)
class ConditionReport:
    condition: Condition
    holds: bool
    worst_violation: float
    witness: tuple[float, float]
    grid_resolution: int

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "holds": self.holds,
            "worst_violation": self.worst_violation,
            "witness": list(self.witness),
            "grid_resolution": self.grid_resolution,
        }


def condition_violation(model: CopulaModel, condition, u, v):
    """Signed violation of a dependence condition at ``(u, v)``; positive means violated.

    Derivative bounds are compared with denominators cleared, e.g. LTD uses
    ``u * dC/du - C`` in place of ``dC/du - C / u``.
    """
    condition = Condition(condition)
    c = model.cdf(u, v)
    if condition is Condition.PQD:
        return u * v - c
    if condition is Condition.NQD:
        return c - u * v
    d1 = model.partial_u(u, v)
    d2 = model.partial_v(u, v)
    if condition is Condition.LTD:
        return np.maximum(u * d1 - c, v * d2 - c)
    return np.maximum(np.maximum(u * d1 - 2.0 * c, v * d2 - 2.0 * c), c - u * v)


def check_condition(model: CopulaModel, condition, grid_resolution: int = 101) -> ConditionReport:
    """Scan an interior ``m x m`` grid for violations of LTD, PQD, NQD or ``condition3``.

    ``condition3`` comprises ``dC/du <= 2 C / u``, ``dC/dv <= 2 C / v`` and
    ``C <= uv``.  The condition holds when the worst violation does not exceed
    ``CONDITION_TOL``.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be at least 2")
    condition = Condition(condition)
    g = interior_grid(grid_resolution)
    U, V = np.meshgrid(g, g, indexing="ij")
    viol = condition_violation(model, condition, U, V)
    idx = np.unravel_index(np.argmax(viol), viol.shape)
    worst = float(viol[idx])
    return ConditionReport(
        condition=condition,
        holds=worst <= CONDITION_TOL,
        worst_violation=worst,
        witness=(float(U[idx]), float(V[idx])),
        grid_resolution=int(grid_resolution),
    )
