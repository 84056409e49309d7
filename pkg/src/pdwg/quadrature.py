"""Quadrature rules on the reference triangle and the reference edge.

Triangle rules come from a collapsed (Duffy) Gauss-Legendre x Gauss-Jacobi
product, then averaged over the six vertex relabelings of the reference
triangle so the final rule is symmetric.  Edge rules are plain
Gauss-Legendre on [-1, 1].  Rules are cached per degree; all consumers
share the same immutable tables.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRI_DEGREE = 20
MAX_EDGE_DEGREE = 40

#: vertex permutations of the reference triangle (barycentric relabelings)
_TRI_SYMMETRIES = ((0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2))


@dataclass(frozen=True)
class QuadRule:
    """Points and weights with a guaranteed polynomial exactness degree.

    Triangle rules store barycentric coordinates, shape (n, 3), with
    weights summing to 1/2 (the reference-triangle area).  Edge rules
    store parameter values s in [-1, 1] with weights summing to 2.
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int


@lru_cache(maxsize=None)
def make_tri_rule(required_degree: int) -> QuadRule:
    """Symmetric triangle rule exact for total degree >= required_degree.

    Parameters
    ----------
    required_degree : int
        Highest total polynomial degree that must be integrated exactly.
        Supported range is 0..20.
    """
    if not 0 <= required_degree <= MAX_TRI_DEGREE:
        raise ValueError(
            f"triangle quadrature degree {required_degree} unsupported "
            f"(must be 0..{MAX_TRI_DEGREE})")
    n = (required_degree + 2) // 2  # Gauss points per direction
    gl_t, gl_w = np.polynomial.legendre.leggauss(n)
    xi = 0.5 * (gl_t + 1.0)
    w_xi = 0.5 * gl_w
    gj_t, gj_w = roots_jacobi(n, 1, 0)  # weight (1 - t) on [-1, 1]
    eta = 0.5 * (gj_t + 1.0)
    w_eta = 0.25 * gj_w

    x = np.outer(xi, 1.0 - eta).ravel()
    y = np.broadcast_to(eta, (n, n)).ravel()
    w = np.outer(w_xi, w_eta).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])

    pts = np.vstack([bary[:, perm] for perm in _TRI_SYMMETRIES])
    wts = np.tile(w, len(_TRI_SYMMETRIES)) / len(_TRI_SYMMETRIES)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule(pts, wts, 2 * n - 1)


@lru_cache(maxsize=None)
def make_edge_rule(required_degree: int) -> QuadRule:
    """Gauss-Legendre rule on [-1, 1] exact for degree >= required_degree."""
    if not 0 <= required_degree <= MAX_EDGE_DEGREE:
        raise ValueError(
            f"edge quadrature degree {required_degree} unsupported "
            f"(must be 0..{MAX_EDGE_DEGREE})")
    n = (required_degree + 2) // 2
    s, w = np.polynomial.legendre.leggauss(n)
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(s, w, 2 * n - 1)


def tri_rule_physical(rule: QuadRule, verts):
    """Map a reference triangle rule to a physical triangle.

    Returns (points, weights) with points of shape (n, 2) and weights
    scaled so they sum to the triangle area.
    """
    from .geometry import signed_area

    v = np.asarray(verts, dtype=float)
    pts = rule.points @ v
    w = rule.weights * (2.0 * signed_area(v))
    return pts, w


def edge_rule_physical(rule: QuadRule, p0, p1):
    """Map the reference edge rule to the segment p0 -> p1.

    Returns (s, points, weights); weights sum to the segment length.
    """
    from .geometry import edge_points

    length = float(np.linalg.norm(np.asarray(p1, float) - np.asarray(p0, float)))
    pts = edge_points(p0, p1, rule.points)
    return rule.points, pts, rule.weights * (0.5 * length)
