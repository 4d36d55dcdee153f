"""Gauss-Legendre product rules on the unit square and hypercube.

Covariances of the limit processes involve ``min(u, s)`` and ``min(v, t)``,
so integrands have creases along the diagonals.  The rules here split the
domain along those creases and map each piece from a square with a collapsed
(Duffy) transform, which restores spectral convergence.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """``n``-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=32)
def tanh_sinh(h: float, cutoff: float = 4.5):
    """Tanh-sinh nodes and weights on (0, 1) with step ``h``.

    Nodes cluster double-exponentially at both ends, so integrands with
    endpoint singularities (derivative blow-up at a corner of the square)
    still converge quickly.  Nodes that round to 0 or 1 are dropped.
    """
    k = np.arange(-int(cutoff / h), int(cutoff / h) + 1) * h
    s = 0.5 * np.pi * np.sinh(k)
    x = 1.0 / (1.0 + np.exp(-2.0 * s))
    w = h * 0.25 * np.pi * np.cosh(k) / np.cosh(s) ** 2
    keep = (x > 0.0) & (x < 1.0) & (w > 0.0)
    return x[keep], w[keep]


@lru_cache(maxsize=32)
def square_rule_cross(n: int):
    """Rule on [0, 1]^2 split by both diagonals into four triangles.

    Returns ``(s, t, w)`` with ``4 n^2`` nodes.
    """
    x, wx = gauss_legendre(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(wx, wx)
    apex = np.array([0.5, 0.5])
    edges = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0))]
    ss, tt, ww = [], [], []
    for b, c in edges:
        b = np.asarray(b, float)
        c = np.asarray(c, float)
        # p = apex + y (b - apex) + x y (c - b); |det J| = y |det(c - b, b - apex)|
        px = apex[0] + Y * (b[0] - apex[0]) + X * Y * (c[0] - b[0])
        py = apex[1] + Y * (b[1] - apex[1]) + X * Y * (c[1] - b[1])
        det = abs((c[0] - b[0]) * (b[1] - apex[1]) - (c[1] - b[1]) * (b[0] - apex[0]))
        ss.append(px.ravel())
        tt.append(py.ravel())
        ww.append((W * Y * det).ravel())
    return np.concatenate(ss), np.concatenate(tt), np.concatenate(ww)


@lru_cache(maxsize=32)
def square_rule_diag(n: int):
    """Rule on [0, 1]^2 split by the diagonal ``a = b``; ``2 n^2`` nodes ``(a, b, w)``."""
    x, wx = gauss_legendre(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = (np.outer(wx, wx) * Y).ravel()
    lo = (X * Y).ravel()
    hi = Y.ravel()
    return np.concatenate([lo, hi]), np.concatenate([hi, lo]), np.concatenate([W, W])


def hypercube_rule(n: int):
    """Rule on [0, 1]^4 for ``(u, v, s, t)`` creased at ``u = s`` and ``v = t``.

    Yields ``(u, v, s, t, w)`` chunks so memory stays bounded; ``4 n^4`` nodes in total.
    """
    a, b, w = square_rule_diag(n)
    k = a.shape[0]
    step = max(1, 250_000 // k)
    for start in range(0, k, step):
        sl = slice(start, start + step)
        # (u, s) from the outer slice, (v, t) over all nodes
        u = np.repeat(a[sl], k)
        s = np.repeat(b[sl], k)
        wu = np.repeat(w[sl], k)
        m = u.shape[0] // k
        v = np.tile(a, m)
        t = np.tile(b, m)
        wv = np.tile(w, m)
        yield u, v, s, t, wu * wv
