"""Small planar-geometry helpers shared by the mesh and basis layers."""

import numpy as np


def signed_area(verts) -> float:
    """Signed area of a triangle given as a (3, 2) vertex array.

    Positive for counterclockwise vertex order.
    """
    v = np.asarray(verts, dtype=float)
    return 0.5 * ((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1])
                  - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))


def triangle_diameter(verts) -> float:
    """Longest edge length of a triangle (the element size h_T)."""
    v = np.asarray(verts, dtype=float)
    return max(float(np.linalg.norm(v[i] - v[(i + 1) % 3])) for i in range(3))


def edge_points(p0, p1, s):
    """Map parameter values s in [-1, 1] to points on the segment p0 -> p1."""
    s = np.asarray(s, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    return 0.5 * (1.0 - s)[:, None] * p0 + 0.5 * (1.0 + s)[:, None] * p1


def rot90_ccw(d):
    """Rotate a 2-vector by 90 degrees counterclockwise."""
    return np.array([-d[1], d[0]])
