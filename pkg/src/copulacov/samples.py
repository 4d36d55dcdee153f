"""Bivariate samples and their CSV representation."""

from __future__ import annotations

import csv
import enum
import io
import os
from dataclasses import dataclass

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DomainError, TiesPresent

__all__ = ["MarginKind", "PairSample", "check_pairs", "has_ties"]


class MarginKind(str, enum.Enum):
    RAW = "raw"
    UNIFORM = "uniform"


def check_pairs(X, name: str = "X") -> np.ndarray:
    """Validate an ``(n, 2)`` array of finite observations and return it as float64."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    if X.shape[1] != 2:
        raise ValueError(f"{name} must have exactly two columns, got {X.shape[1]}")
    return X


def has_ties(X: np.ndarray) -> bool:
    for j in range(X.shape[1]):
        col = np.sort(X[:, j])
        if np.any(col[1:] == col[:-1]):
            return True
    return False


@dataclass(frozen=True, eq=False)
class PairSample:
    """An ordered collection of ``n`` bivariate observations.

    Parameters
    ----------
    pairs : array-like of shape (n, 2)
        Observations ``(x_i, y_i)``.
    margin_kind : MarginKind
        ``UNIFORM`` when the coordinates are draws from the copula itself
        (true ``F(X_i)``, ``G(Y_i)``) or pseudo-observations; ``RAW`` otherwise.
    """

    pairs: np.ndarray
    margin_kind: MarginKind = MarginKind.RAW

    def __post_init__(self):
        arr = check_pairs(self.pairs, "pairs").copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pairs", arr)
        kind = MarginKind(self.margin_kind)
        object.__setattr__(self, "margin_kind", kind)
        if kind is MarginKind.UNIFORM and (arr.min() < 0.0 or arr.max() > 1.0):
            raise DomainError("uniform-margin pairs must lie in [0, 1]^2")

    @property
    def n(self) -> int:
        return self.pairs.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.pairs[:, 1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairSample):
            return NotImplemented
        return self.margin_kind == other.margin_kind and np.array_equal(self.pairs, other.pairs)

    __hash__ = None

    def require_no_ties(self) -> None:
        if has_ties(self.pairs):
            raise TiesPresent("sample contains tied x- or y-coordinates")

    # -- CSV -------------------------------------------------------------

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        """Write ``u,v`` rows with 17 significant digits; return the text."""
        buf = io.StringIO()
        buf.write("u,v\n")
        for a, b in self.pairs:
            buf.write(f"{a:.17g},{b:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path: str | os.PathLike, margin_kind: MarginKind = MarginKind.RAW) -> "PairSample":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty file")
            if [h.strip() for h in header] not in (["u", "v"], ["x", "y"]):
                raise ValueError(f"{path}: expected header 'u,v', got {','.join(header)!r}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise ValueError(f"{path}: no observations")
        return cls(np.array(rows), margin_kind)
