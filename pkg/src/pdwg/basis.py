"""Polynomial bases on elements and edges.

Element bases are scaled monomials ((x - xc)/h)^a ((y - yc)/h)^b centered
at the element centroid, ordered by total degree and then by descending
x-exponent.  Edge bases are Legendre polynomials in the canonical edge
parameter s in [-1, 1].
"""

from dataclasses import dataclass

import numpy as np

from .geometry import triangle_diameter


def basis_dim(degree: int) -> int:
    """Dimension of P_degree in two variables."""
    return (degree + 1) * (degree + 2) // 2


def _exponents(degree: int) -> np.ndarray:
    exps = [(a, t - a) for t in range(degree + 1) for a in range(t, -1, -1)]
    return np.array(exps, dtype=int)


@dataclass(frozen=True)
class ElementBasis:
    """Scaled monomial basis of P_degree on a triangle."""

    degree: int
    centroid: np.ndarray
    scale: float
    exponents: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.exponents)


@dataclass(frozen=True)
class EdgeBasis:
    """Legendre basis L_0..L_degree in the canonical edge parameter."""

    degree: int

    @property
    def n_modes(self) -> int:
        return self.degree + 1


def element_basis(degree: int, verts) -> ElementBasis:
    v = np.asarray(verts, dtype=float)
    centroid = v.mean(axis=0)
    centroid.setflags(write=False)
    return ElementBasis(degree, centroid, triangle_diameter(v), _exponents(degree))


def _scaled_coords(basis: ElementBasis, pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return (pts - basis.centroid) / basis.scale


def _powers(t: np.ndarray, max_exp: int) -> np.ndarray:
    # t ** e for e = 0..max_exp, shape (len(t), max_exp + 1)
    out = np.ones((len(t), max_exp + 1))
    for e in range(1, max_exp + 1):
        out[:, e] = out[:, e - 1] * t
    return out


def eval_basis(basis, pts):
    """Values of all basis functions at the given points.

    For an ElementBasis, pts is an (n, 2) array of physical points and the
    result has shape (n, dim).  For an EdgeBasis, pts is an array of
    parameter values s and the result has shape (n, n_modes).
    Extrapolation outside the element or edge is permitted.
    """
    if isinstance(basis, EdgeBasis):
        s = np.atleast_1d(np.asarray(pts, dtype=float))
        return np.polynomial.legendre.legvander(s, basis.degree)
    xy = _scaled_coords(basis, pts)
    a = basis.exponents[:, 0]
    b = basis.exponents[:, 1]
    px = _powers(xy[:, 0], int(a.max(initial=0)))
    py = _powers(xy[:, 1], int(b.max(initial=0)))
    return px[:, a] * py[:, b]


def eval_basis_grad(basis: ElementBasis, pts) -> np.ndarray:
    """Gradients of all element basis functions, shape (n, dim, 2).

    Carries the 1/h chain factor from the coordinate scaling.
    """
    xy = _scaled_coords(basis, pts)
    a = basis.exponents[:, 0]
    b = basis.exponents[:, 1]
    px = _powers(xy[:, 0], int(a.max(initial=0)))
    py = _powers(xy[:, 1], int(b.max(initial=0)))
    grad = np.zeros((len(xy), basis.dim, 2))
    # a = 0 (resp. b = 0) kills the term through the leading factor
    grad[:, :, 0] = a * px[:, np.maximum(a - 1, 0)] * py[:, b]
    grad[:, :, 1] = b * px[:, a] * py[:, np.maximum(b - 1, 0)]
    return grad / basis.scale


def eval_basis_lap(basis: ElementBasis, pts) -> np.ndarray:
    """Laplacians of all element basis functions, shape (n, dim)."""
    xy = _scaled_coords(basis, pts)
    a = basis.exponents[:, 0]
    b = basis.exponents[:, 1]
    px = _powers(xy[:, 0], int(a.max(initial=0)))
    py = _powers(xy[:, 1], int(b.max(initial=0)))
    lap = a * (a - 1) * px[:, np.maximum(a - 2, 0)] * py[:, b]
    lap = lap + b * (b - 1) * px[:, a] * py[:, np.maximum(b - 2, 0)]
    return lap / basis.scale ** 2


def edge_mass_diag(n_modes: int, length: float) -> np.ndarray:
    """Diagonal of the edge mass matrix: |e| / (2 i + 1) per Legendre mode."""
    return length / (2.0 * np.arange(n_modes) + 1.0)
