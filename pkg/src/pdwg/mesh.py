"""Conforming triangular meshes of the unit square and their partitions.

A mesh carries a globally oriented edge inventory: every edge stores a
single unit normal, and each incident element knows the sign tau = +1/-1
relating its own outward normal to that stored normal.  The orientation
convention is deterministic:

* the normal starts as the 90-degree counterclockwise rotation of the
  edge direction from the lower to the higher endpoint index,
* on boundary edges it is flipped, if necessary, to point out of the
  domain,
* on interior edges it is flipped, if necessary, so that the "owner"
  element (the incident element with the smaller index) gets tau = +1.

Meshes and partitions are immutable after construction and safe for
concurrent reads.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import rot90_ccw, signed_area, triangle_diameter

MESH_FORMAT_HEADER = "pdwg-mesh v1"


class GeometryError(ValueError):
    """A mesh or element is geometrically invalid (degenerate, flipped)."""


class MeshFormatError(ValueError):
    """A mesh file or mesh description does not satisfy the format contract."""


@dataclass(frozen=True)
class EdgeRecord:
    """One mesh edge with its global orientation data.

    endpoints is the (lower, higher) vertex-index pair; global_normal is
    the unit normal every single-valued edge unknown refers to;
    incident_elements lists the owner element first.
    """

    endpoints: tuple
    global_normal: np.ndarray
    is_boundary: bool
    length: float
    incident_elements: tuple


@dataclass(frozen=True)
class Mesh2D:
    """Conforming triangulation with oriented edges.

    element_edges[t, i] = (edge id, tau) for the local edge between local
    vertices i and (i + 1) % 3 of element t.  structured_n is the n of
    build_uniform_mesh, or None for imported meshes.
    """

    vertices: np.ndarray
    elements: np.ndarray
    edges: tuple
    element_edges: np.ndarray
    element_diameters: np.ndarray
    h_max: float
    structured_n: int | None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_boundary_edges(self) -> int:
        return sum(1 for e in self.edges if e.is_boundary)

    def element_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.elements[t]]


@dataclass(frozen=True)
class InterfaceRecord:
    """Edges shared by an (ordered, j < k) pair of subdomains."""

    pair: tuple
    edge_ids: tuple


@dataclass(frozen=True)
class Partition:
    """Assignment of elements to subdomains 1..M plus the interface inventory."""

    subdomain_of: np.ndarray
    M: int
    interfaces: tuple

    def elements_of(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.subdomain_of == j)


def _outward_normal(verts, a_local: int, b_local: int) -> np.ndarray:
    # Outward normal of a CCW triangle on the edge traversed a -> b:
    # the clockwise rotation of the traversal direction.
    d = verts[b_local] - verts[a_local]
    n = np.array([d[1], -d[0]])
    return n / np.linalg.norm(n)


def build_mesh(vertices, elements, structured_n: int | None = None) -> Mesh2D:
    """Build a Mesh2D from raw vertex and element arrays.

    Parameters
    ----------
    vertices : (V, 2) array of point coordinates.
    elements : (T, 3) array of counterclockwise vertex-index triples.
    structured_n : n of the structured unit-square family, if applicable.

    Raises
    ------
    GeometryError
        If an element is degenerate or clockwise.
    MeshFormatError
        If the triangulation is non-conforming or not simply connected.
    """
    verts = np.array(vertices, dtype=float)
    elems = np.array(elements, dtype=int)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise MeshFormatError("vertices must be a (V, 2) array")
    if elems.ndim != 2 or elems.shape[1] != 3:
        raise MeshFormatError("elements must be a (T, 3) array")
    if elems.size and (elems.min() < 0 or elems.max() >= len(verts)):
        raise MeshFormatError("element vertex index out of range")

    diameters = np.empty(len(elems))
    for t, tri in enumerate(elems):
        v = verts[tri]
        if signed_area(v) <= 0.0:
            raise GeometryError(
                f"element {t} has non-positive area (vertices must be "
                f"counterclockwise and non-degenerate)")
        diameters[t] = triangle_diameter(v)

    # edge inventory keyed by the sorted endpoint pair
    edge_id: dict = {}
    incident: list = []
    for t, tri in enumerate(elems):
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            e = edge_id.setdefault(key, len(edge_id))
            if e == len(incident):
                incident.append([])
            if len(incident[e]) >= 2:
                raise MeshFormatError(
                    f"edge {key} has more than two incident elements")
            incident[e].append(t)

    n_edges = len(edge_id)
    if len(verts) - n_edges + len(elems) != 1:
        raise MeshFormatError(
            "triangulation is not a simply connected surface "
            f"(V - E + F = {len(verts) - n_edges + len(elems)}, expected 1)")

    edges = []
    for key, e in edge_id.items():
        lo, hi = key
        vec = verts[hi] - verts[lo]
        length = float(np.linalg.norm(vec))
        if length == 0.0:
            raise GeometryError(f"edge {key} has zero length")
        normal = rot90_ccw(vec / length)
        owner = incident[e][0]
        tri = elems[owner]
        n_out = None
        for i in range(3):
            if {int(tri[i]), int(tri[(i + 1) % 3])} == {lo, hi}:
                n_out = _outward_normal(verts[tri], i, (i + 1) % 3)
                break
        if float(n_out @ normal) < 0.0:
            normal = -normal
        normal.setflags(write=False)
        edges.append(EdgeRecord(
            endpoints=key,
            global_normal=normal,
            is_boundary=len(incident[e]) == 1,
            length=length,
            incident_elements=tuple(incident[e]),
        ))

    element_edges = np.empty((len(elems), 3, 2), dtype=int)
    for t, tri in enumerate(elems):
        for i in range(3):
            key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            e = edge_id[key]
            n_out = _outward_normal(verts[tri], i, (i + 1) % 3)
            sign = 1 if float(n_out @ edges[e].global_normal) > 0.0 else -1
            element_edges[t, i] = (e, sign)

    verts.setflags(write=False)
    elems.setflags(write=False)
    element_edges.setflags(write=False)
    diameters.setflags(write=False)
    return Mesh2D(
        vertices=verts,
        elements=elems,
        edges=tuple(edges),
        element_edges=element_edges,
        element_diameters=diameters,
        h_max=float(diameters.max()) if len(elems) else 0.0,
        structured_n=structured_n,
    )


def build_uniform_mesh(n: int) -> Mesh2D:
    """Structured mesh of the unit square: n x n cells, two triangles each.

    Each cell is split by the diagonal from its lower-left to its
    upper-right corner, so h_max = sqrt(2)/n.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([(x, y) for y in xs for x in xs])

    def vid(i, j):
        return j * (n + 1) + i

    elems = []
    for j in range(n):
        for i in range(n):
            ll, lr = vid(i, j), vid(i + 1, j)
            ul, ur = vid(i, j + 1), vid(i + 1, j + 1)
            elems.append((ll, lr, ur))
            elems.append((ll, ur, ul))
    return build_mesh(verts, elems, structured_n=n)


def tau(mesh: Mesh2D, element: int, edge: int) -> int:
    """Sign n_T . n_e of an element's outward normal against the edge normal.

    Raises ValueError if the edge is not incident to the element.
    """
    for e, sign in mesh.element_edges[element]:
        if e == edge:
            return int(sign)
    raise ValueError(f"edge {edge} is not incident to element {element}")


def build_partition(mesh: Mesh2D, strategy: str, p: int | None = None) -> Partition:
    """Partition elements into subdomains.

    strategy "per-element" makes every triangle its own subdomain
    (M = element count, ids = element index + 1).  strategy "blocks"
    requires a structured mesh and p dividing n; it forms p x p square
    blocks of cells, numbered in row-major block order.
    """
    if strategy == "per-element":
        labels = np.arange(1, mesh.n_elements + 1)
    elif strategy == "blocks":
        n = mesh.structured_n
        if n is None:
            raise ValueError("blocks(p) requires a structured mesh")
        if p is None or p < 1:
            raise ValueError("blocks(p) requires a positive block count p")
        if n % p != 0:
            raise ValueError(f"blocks(p): p={p} does not divide n={n}")
        cells_per_block = n // p
        labels = np.empty(mesh.n_elements, dtype=int)
        for t in range(mesh.n_elements):
            cell = t // 2
            ci, cj = cell % n, cell // n
            labels[t] = (cj // cells_per_block) * p + (ci // cells_per_block) + 1
    else:
        raise ValueError(f"unknown partition strategy {strategy!r}")

    m = int(labels.max()) if len(labels) else 0
    by_pair: dict = {}
    for e, rec in enumerate(mesh.edges):
        if rec.is_boundary:
            continue
        a, b = rec.incident_elements
        ja, jb = int(labels[a]), int(labels[b])
        if ja != jb:
            by_pair.setdefault((min(ja, jb), max(ja, jb)), []).append(e)
    interfaces = tuple(
        InterfaceRecord(pair=pair, edge_ids=tuple(sorted(ids)))
        for pair, ids in sorted(by_pair.items()))
    labels.setflags(write=False)
    return Partition(subdomain_of=labels, M=m, interfaces=interfaces)


def write_mesh(mesh: Mesh2D, path) -> None:
    """Write a mesh in the plain-text v1 exchange format."""
    lines = [MESH_FORMAT_HEADER, str(mesh.n_vertices)]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines.append(str(mesh.n_elements))
    lines += [f"{int(a)} {int(b)} {int(c)}" for a, b, c in mesh.elements]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh2D:
    """Read a mesh written by write_mesh (or any conforming producer)."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != MESH_FORMAT_HEADER:
        raise MeshFormatError(f"missing '{MESH_FORMAT_HEADER}' header")
    tokens = " ".join(lines[1:]).split()
    pos = 0

    def take(count):
        nonlocal pos
        if pos + count > len(tokens):
            raise MeshFormatError("unexpected end of mesh file")
        out = tokens[pos:pos + count]
        pos += count
        return out

    try:
        nv = int(take(1)[0])
        coords = np.array(take(2 * nv), dtype=float).reshape(nv, 2)
        nt = int(take(1)[0])
        tris = np.array(take(3 * nt), dtype=int).reshape(nt, 3)
    except ValueError as exc:
        raise MeshFormatError(f"malformed mesh file: {exc}") from exc
    if pos != len(tokens):
        raise MeshFormatError("trailing data in mesh file")
    return build_mesh(coords, tris)
