"""Discrete weak calculus: L2 projections, interpolation, weak Laplacian.

A weak function on a triangle is a triplet {sigma_0, sigma_b, sigma_n}:
an interior polynomial of degree k, one trace polynomial of degree k-1
per edge, and one flux polynomial of degree k-1 per edge.  Trace and
flux unknowns are single-valued per edge: traces live in the canonical
edge parametrization (lower to higher endpoint index) and fluxes are
stored against the edge's global normal.  Every element-local formula
converts a stored flux to the element-outward convention through the
sign tau of the element/edge pair.

The discrete weak Laplacian of a weak function is the unique polynomial
of degree k-1 whose moments against every test polynomial w equal

    (sigma_0, lap w)_T - <sigma_b, grad w . n>_dT + <tau sigma_n, w>_dT.

All bilinear pairings here involve polynomial integrands only and are
integrated exactly; projections of general smooth fields use dedicated
high-order data rules so projection error stays at round-off level on
desk-scale meshes.
"""

from dataclasses import dataclass

import numpy as np

from .basis import (ElementBasis, basis_dim, edge_mass_diag, element_basis,
                    eval_basis, eval_basis_grad, eval_basis_lap)
from .geometry import edge_points, signed_area
from .mesh import GeometryError, Mesh2D
from .quadrature import (edge_rule_physical, make_edge_rule, make_tri_rule,
                         tri_rule_physical)

#: exactness of the rules used to project general (non-polynomial) fields
DATA_TRI_DEGREE = 20
DATA_EDGE_DEGREE = 21


@dataclass
class LocalWeakFunction:
    """Coefficients of one weak function on a single element.

    sigma_b rows follow the canonical edge parametrization; sigma_n rows
    are stored against the global edge normals.
    """

    sigma0: np.ndarray   # (dim P_k,)
    sigma_b: np.ndarray  # (3, k)
    sigma_n: np.ndarray  # (3, k)


class ElementContext:
    """Per-element operator bundle for degree-k weak functions.

    Precomputes the element and edge bases, mass matrices, trace and
    normal-derivative moment maps, the local stabilizer matrix and the
    local weak-Laplacian pairing.  Local weak dofs are ordered
    [interior | trace edge 0..2 | flux edge 0..2].
    """

    def __init__(self, verts, k: int, edge_endpoints, normals, taus):
        verts = np.asarray(verts, dtype=float)
        area = signed_area(verts)
        if area <= 0.0:
            raise GeometryError("element is degenerate or clockwise")
        self.verts = verts
        self.k = k
        self.area = area
        self.basis_k = element_basis(k, verts)
        self.basis_u = element_basis(k - 1, verts)
        self.h_T = self.basis_k.scale
        self.n0 = basis_dim(k)
        self.nu = basis_dim(k - 1)
        self.n_modes = k
        self.n_loc = self.n0 + 6 * k
        self.taus = [int(t) for t in taus]
        self.normals = [np.asarray(nrm, dtype=float) for nrm in normals]
        self.edge_endpoints = [(np.asarray(p0, float), np.asarray(p1, float))
                               for p0, p1 in edge_endpoints]
        self.edge_lengths = [float(np.linalg.norm(p1 - p0))
                             for p0, p1 in self.edge_endpoints]

        rule = make_tri_rule(2 * k + 2)
        pts, w = tri_rule_physical(rule, verts)
        vk = eval_basis(self.basis_k, pts)
        vu = eval_basis(self.basis_u, pts)
        lap_u = eval_basis_lap(self.basis_u, pts)
        self.mass_k = _sym((vk * w[:, None]).T @ vk)
        self.mass_u = _sym((vu * w[:, None]).T @ vu)
        vol_block = (lap_u * w[:, None]).T @ vk  # (nu, n0)

        erule = make_edge_rule(2 * k + 1)
        self.edge_mass = []
        self._tr0 = []   # Legendre coeffs of Q_b(phi_k trace) per edge
        self._dn0 = []   # Legendre coeffs of grad(phi_k) . n_out per edge
        self._tru = []   # Legendre coeffs of phi_u trace per edge
        self._dnu = []   # Legendre coeffs of grad(phi_u) . n_out per edge
        proj_w = (2.0 * np.arange(k) + 1.0) / 2.0
        for le in range(3):
            p0, p1 = self.edge_endpoints[le]
            s, epts, _ = edge_rule_physical(erule, p0, p1)
            legv = np.polynomial.legendre.legvander(s, k - 1)   # (nq, k)
            moments = (legv * erule.weights[:, None]).T * proj_w[:, None]
            n_out = self.taus[le] * self.normals[le]
            phik = eval_basis(self.basis_k, epts)
            gk = eval_basis_grad(self.basis_k, epts) @ n_out
            phiu = eval_basis(self.basis_u, epts)
            gu = eval_basis_grad(self.basis_u, epts) @ n_out
            self._tr0.append(moments @ phik)
            self._dn0.append(moments @ gk)
            self._tru.append(moments @ phiu)
            self._dnu.append(moments @ gu)
            self.edge_mass.append(edge_mass_diag(k, self.edge_lengths[le]))

        self.stab = self._build_stabilizer()
        self.b_pair = self._build_b_pair(vol_block)
        self.wlap_op = np.linalg.solve(self.mass_u, self.b_pair)

    # local dof slices
    def slice_interior(self):
        return slice(0, self.n0)

    def slice_trace(self, le: int):
        k = self.n_modes
        return slice(self.n0 + le * k, self.n0 + (le + 1) * k)

    def slice_flux(self, le: int):
        k = self.n_modes
        return slice(self.n0 + 3 * k + le * k, self.n0 + (3 + le + 1) * k)

    def _build_stabilizer(self) -> np.ndarray:
        k = self.n_modes
        s_loc = np.zeros((self.n_loc, self.n_loc))
        for le in range(3):
            a_e = np.zeros((k, self.n_loc))
            a_e[:, :self.n0] = self._tr0[le]
            a_e[:, self.slice_trace(le)] = -np.eye(k)
            b_e = np.zeros((k, self.n_loc))
            b_e[:, :self.n0] = self._dn0[le]
            b_e[:, self.slice_flux(le)] = -self.taus[le] * np.eye(k)
            me = self.edge_mass[le][:, None]
            s_loc += self.h_T ** -3 * (a_e.T @ (me * a_e))
            s_loc += self.h_T ** -1 * (b_e.T @ (me * b_e))
        return _sym(s_loc)

    def _build_b_pair(self, vol_block) -> np.ndarray:
        # entry (i, j) = (phi_u_i, weak_laplacian(chi_j))_T
        k = self.n_modes
        pair = np.zeros((self.nu, self.n_loc))
        pair[:, :self.n0] = vol_block
        for le in range(3):
            me = self.edge_mass[le][:, None]
            pair[:, self.slice_trace(le)] = -(me * self._dnu[le]).T
            pair[:, self.slice_flux(le)] = self.taus[le] * (me * self._tru[le]).T
        return pair

    def pack(self, wf: LocalWeakFunction) -> np.ndarray:
        """Flatten a LocalWeakFunction into the local dof ordering."""
        out = np.empty(self.n_loc)
        out[:self.n0] = wf.sigma0
        for le in range(3):
            out[self.slice_trace(le)] = wf.sigma_b[le]
            out[self.slice_flux(le)] = wf.sigma_n[le]
        return out

    def load_interior(self, f) -> np.ndarray:
        """Moments (f, phi_k_i)_T of a scalar field, data-rule quadrature."""
        pts, w = tri_rule_physical(make_tri_rule(DATA_TRI_DEGREE), self.verts)
        return eval_basis(self.basis_k, pts).T @ (w * np.asarray(f(pts), float))


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def element_context(mesh: Mesh2D, t: int, k: int) -> ElementContext:
    """Element context for mesh element t, orientation data from the mesh."""
    endpoints, normals, taus = [], [], []
    for e, sign in mesh.element_edges[t]:
        rec = mesh.edges[e]
        lo, hi = rec.endpoints
        endpoints.append((mesh.vertices[lo], mesh.vertices[hi]))
        normals.append(rec.global_normal)
        taus.append(sign)
    return ElementContext(mesh.element_vertices(t), k, endpoints, normals, taus)


def standalone_context(verts, k: int) -> ElementContext:
    """Context for a triangle outside any mesh: all edges element-owned.

    Canonical edge direction follows the local vertex order and every
    global normal is the outward one (tau = +1 on all edges).
    """
    verts = np.asarray(verts, dtype=float)
    endpoints, normals = [], []
    for le in range(3):
        p0, p1 = verts[le], verts[(le + 1) % 3]
        d = (p1 - p0) / np.linalg.norm(p1 - p0)
        endpoints.append((p0, p1))
        normals.append(np.array([d[1], -d[0]]))
    return ElementContext(verts, k, endpoints, normals, [1, 1, 1])


def element_contexts(mesh: Mesh2D, k: int) -> list:
    """Contexts for all elements; the shared operator cache for assembly."""
    return [element_context(mesh, t, k) for t in range(mesh.n_elements)]


def project_element(f, degree: int, verts) -> np.ndarray:
    """L2-project a scalar field onto P_degree of a triangle.

    Returns the coefficient vector in the scaled monomial basis of
    element_basis(degree, verts).  Fields are callables taking an (n, 2)
    point array.
    """
    verts = np.asarray(verts, dtype=float)
    if signed_area(verts) <= 0.0:
        raise GeometryError("cannot project on a degenerate triangle")
    basis = element_basis(degree, verts)
    pts, w = tri_rule_physical(make_tri_rule(DATA_TRI_DEGREE), verts)
    v = eval_basis(basis, pts)
    gram = _sym((v * w[:, None]).T @ v)
    rhs = v.T @ (w * np.asarray(f(pts), float))
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular Gram matrix on element: {exc}") from exc


def project_edge(f, p0, p1, n_modes: int) -> np.ndarray:
    """L2-project a scalar field on a segment onto Legendre modes 0..n_modes-1.

    The field is evaluated at physical points of the segment; the
    parametrization runs from p0 to p1.
    """
    rule = make_edge_rule(DATA_EDGE_DEGREE)
    s, pts, _ = edge_rule_physical(rule, p0, p1)
    legv = np.polynomial.legendre.legvander(s, n_modes - 1)
    coeff_w = (2.0 * np.arange(n_modes) + 1.0) / 2.0
    return coeff_w * (legv.T @ (rule.weights * np.asarray(f(pts), float)))


def weak_laplacian(ctx: ElementContext, wf: LocalWeakFunction) -> np.ndarray:
    """Coefficients (in the P_{k-1} basis) of the discrete weak Laplacian."""
    return ctx.wlap_op @ ctx.pack(wf)


class WeakDofMap:
    """Global dof layout of the weak space: [interior | trace | flux].

    With homogeneous=True boundary-edge trace dofs are eliminated (the
    layout of the dual space with zero Dirichlet trace); otherwise every
    edge carries a trace block (the full weak space, e.g. interpolants).
    """

    def __init__(self, mesh: Mesh2D, k: int, homogeneous: bool):
        self.mesh = mesh
        self.k = k
        self.homogeneous = homogeneous
        self.n0 = basis_dim(k)
        self.n_modes = k
        trace_pos = np.full(mesh.n_edges, -1, dtype=int)
        pos = 0
        for e, rec in enumerate(mesh.edges):
            if homogeneous and rec.is_boundary:
                continue
            trace_pos[e] = pos
            pos += 1
        self._trace_pos = trace_pos
        self.n_trace_edges = pos
        self.interior_total = mesh.n_elements * self.n0
        self.trace_total = self.n_trace_edges * k
        self.flux_total = mesh.n_edges * k
        self.total = self.interior_total + self.trace_total + self.flux_total

    def interior_slice(self, t: int):
        return slice(t * self.n0, (t + 1) * self.n0)

    def trace_slice(self, e: int):
        pos = self._trace_pos[e]
        if pos < 0:
            return None
        start = self.interior_total + pos * self.n_modes
        return slice(start, start + self.n_modes)

    def flux_slice(self, e: int):
        start = self.interior_total + self.trace_total + e * self.n_modes
        return slice(start, start + self.n_modes)

    def element_gather(self, t: int) -> np.ndarray:
        """Global index of every local dof of element t (-1 if eliminated)."""
        idx = np.full(self.n0 + 6 * self.n_modes, -1, dtype=int)
        idx[:self.n0] = np.arange(t * self.n0, (t + 1) * self.n0)
        k = self.n_modes
        for le in range(3):
            e = int(self.mesh.element_edges[t, le, 0])
            tsl = self.trace_slice(e)
            if tsl is not None:
                idx[self.n0 + le * k:self.n0 + (le + 1) * k] = np.arange(
                    tsl.start, tsl.stop)
            fsl = self.flux_slice(e)
            idx[self.n0 + 3 * k + le * k:self.n0 + (3 + le + 1) * k] = np.arange(
                fsl.start, fsl.stop)
        return idx


@dataclass
class WeakCoeffs:
    """A weak finite element function as a flat coefficient vector."""

    dof_map: WeakDofMap
    values: np.ndarray

    def interior_block(self, t: int) -> np.ndarray:
        return self.values[self.dof_map.interior_slice(t)]

    def trace_block(self, e: int) -> np.ndarray:
        sl = self.dof_map.trace_slice(e)
        if sl is None:
            return np.zeros(self.dof_map.n_modes)
        return self.values[sl]

    def flux_block(self, e: int) -> np.ndarray:
        return self.values[self.dof_map.flux_slice(e)]

    def local_function(self, t: int) -> LocalWeakFunction:
        mesh = self.dof_map.mesh
        k = self.dof_map.n_modes
        sb = np.empty((3, k))
        sn = np.empty((3, k))
        for le in range(3):
            e = int(mesh.element_edges[t, le, 0])
            sb[le] = self.trace_block(e)
            sn[le] = self.flux_block(e)
        return LocalWeakFunction(self.interior_block(t).copy(), sb, sn)


def interpolate_Qh(w, grad_w, mesh: Mesh2D, k: int) -> WeakCoeffs:
    """Interpolate a smooth field into the full weak space.

    Per element the interior block is the degree-k L2 projection; per
    edge the trace block projects w itself and the flux block projects
    grad w dotted with the edge's stored global normal.
    """
    dof_map = WeakDofMap(mesh, k, homogeneous=False)
    values = np.zeros(dof_map.total)
    for t in range(mesh.n_elements):
        values[dof_map.interior_slice(t)] = project_element(
            w, k, mesh.element_vertices(t))
    for e, rec in enumerate(mesh.edges):
        lo, hi = rec.endpoints
        p0, p1 = mesh.vertices[lo], mesh.vertices[hi]
        values[dof_map.trace_slice(e)] = project_edge(w, p0, p1, k)
        normal = rec.global_normal
        values[dof_map.flux_slice(e)] = project_edge(
            lambda pts: np.asarray(grad_w(pts), float) @ normal, p0, p1, k)
    return WeakCoeffs(dof_map, values)
