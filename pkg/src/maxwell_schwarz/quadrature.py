"""Quadrature rules in barycentric form (weights sum to one)."""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import factorial

import numpy as np


def _compositions(total, parts):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cut:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield out


@lru_cache(maxsize=None)
def grundmann_moeller(s: int, dim: int = 3):
    """Grundmann-Moeller rule of degree ``2s + 1`` on the ``dim``-simplex.

    Returns ``(bary, weights)`` with barycentric points of shape
    (n_points, dim + 1) and weights normalized to sum to one.
    """
    d = 2 * s + 1
    pts, wts = [], []
    for i in range(s + 1):
        w = (-1) ** i * 2.0 ** (-2 * s) * (d + dim - 2 * i) ** d
        w /= factorial(i) * factorial(d + dim - i)
        for beta in _compositions(s - i, dim + 1):
            pts.append([(2 * b + 1) / (d + dim - 2 * i) for b in beta])
            wts.append(w)
    wts = np.array(wts) * factorial(dim)
    return np.array(pts), wts


def tet_rule(degree: int = 4):
    """Symmetric rule on the tetrahedron exact for polynomials of ``degree``."""
    s = max(0, degree // 2)
    return grundmann_moeller(s, 3)


def tet_rule_degree(degree: int) -> int:
    s = max(0, degree // 2)
    return 2 * s + 1


# 3-point interior rule on triangles, exact for degree 2
TRI3_BARY = np.array(
    [[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]
)
TRI3_WEIGHTS = np.full(3, 1 / 3)


def gauss_line(npts: int = 3):
    """Gauss-Legendre points as fractions ``t`` of a unit segment."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w
