"""Robin-exchange domain-decomposition iteration for the saddle scheme.

Each subdomain solves its own saddle problem, augmented on interface
edges by Robin terms beta <lambda_b, w_b> and sigma_r <lambda_n, w_n>.
After every synchronized sweep the transmission data is refreshed by the
reflection update

    r[into j from k] <- 2 * weight * lambda(k side) - r[into k from j],

starting from zero transmission data.  The exchanged blocks are Legendre
coefficients per interface edge; flux data stays in the global-normal
convention, so the exchange itself carries no orientation signs.

Energy bookkeeping runs on consecutive-iterate increments.  For
inhomogeneous data the raw iterates converge to the coupled solution,
whose transmission data and stabilizer energy are nonzero; the
increments, by linearity, follow the homogeneous-data recursion, for
which the per-sweep energy identity

    |r|^2_w(m) = |r|^2_w(m-1) - 4 * sum_j s_j(lambda_j, lambda_j)

is exact.  The audit checks that identity on increments; the raw
stabilizer energy is recorded alongside for homogeneous-data runs.

Concurrency contract: phase 1 (subdomain solves) is embarrassingly
parallel over immutable factorizations and may run on any number of
workers; phase 2 (the exchange) runs at a single synchronization point
in a fixed pair order.  Results are bit-identical for any worker count.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .basis import basis_dim, edge_mass_diag
from .mesh import Mesh2D, Partition, tau
from .saddle import (PrimalCoeffs, PrimalDofMap, Solution, SolverError,
                     boundary_flux_load)
from .weak_calculus import element_contexts

_TINY = 1e-300

#: audit denominators are floored at (this multiple of the raw data scale)^2;
#: below that level the identity is satisfied to float resolution and a pure
#: relative defect would just amplify round-off noise
AUDIT_FLOOR_REL = 1e-6


@dataclass
class SubdomainProblem:
    """One subdomain's factorized Robin-augmented saddle problem.

    Local dual dofs are ordered [interiors | traces | fluxes] over the
    subdomain's elements and edges in ascending global-id order; primal
    dofs are appended after the dual block.  Exterior-boundary traces are
    eliminated; interface edges keep their own duplicated trace and flux
    blocks.
    """

    j: int
    degree: int
    elements: np.ndarray
    edges: list
    n_lam: int
    n_u: int
    K: sp.csc_matrix
    lu: object
    S_stab: sp.csr_matrix
    static_rhs: np.ndarray
    interface_edges: dict
    edge_mass: dict
    interior_slices: dict
    trace_slices: dict
    flux_slices: dict
    u_slices: dict
    tau_of: dict
    beta: float
    sigma_r: float

    def lam_part(self, x: np.ndarray) -> np.ndarray:
        return x[:self.n_lam]

    def u_part(self, x: np.ndarray) -> np.ndarray:
        return x[self.n_lam:]

    def stab_energy(self, lam: np.ndarray) -> float:
        return float(max(lam @ (self.S_stab @ lam), 0.0))


@dataclass
class RobinState:
    """Transmission data of one exchange generation.

    r_b[(j, k)] maps each edge of the j/k interface to the trace data
    flowing into subdomain j from subdomain k (and r_n likewise for flux
    data).  Generation 0 is all zeros.  The ledger accumulates one
    (m, weighted residual, increment stabilizer energy) triple per sweep.
    """

    m: int
    r_b: dict
    r_n: dict
    ledger: list = field(default_factory=list)
    scale: float = 0.0  # running max of the raw weighted residual norm


@dataclass
class TraceRow:
    """Per-sweep diagnostics; the CSV trace serializes a subset."""

    m: int
    weighted_residual: float
    stab_energy: float
    energy_defect: float | None
    diff_to_monolithic: float | None
    wall_ms: float | None
    stab_energy_raw: float
    rel_change: float
    lambda_interface_norm: float
    jump_b: float | None = None
    jump_n: float | None = None


@dataclass
class IterationReport:
    """Outcome of the exchange iteration plus the gathered solution."""

    iterations: int
    converged: bool
    final_weighted_residual: float
    energy_defect_max: float | None
    rows: list
    jump_b: float
    jump_n: float
    mu_mismatch_b: float | None
    mu_mismatch_n: float | None
    diff_to_monolithic: float | None
    u: PrimalCoeffs
    lambda_locals: list
    problems: list
    beta: float
    sigma_r: float


@dataclass
class IterationParams:
    """Knobs of the exchange iteration.

    beta / sigma_r default to the stabilizer-matched scalings h^-3 and
    h^-1 when left as None ("auto").
    """

    beta: float | None = None
    sigma_r: float | None = None
    tol: float = 1e-8
    max_iters: int = 10000
    workers: int = 1
    reference: Solution | None = None
    initial_state: RobinState | None = None
    collect_timings: bool = False


def resolve_weights(mesh: Mesh2D, beta, sigma_r) -> tuple:
    """Resolve "auto" Robin weights to the h-scaled defaults."""
    h = mesh.h_max
    b = h ** -3 if beta is None else float(beta)
    s = h ** -1 if sigma_r is None else float(sigma_r)
    if b <= 0.0 or s <= 0.0:
        raise ValueError("Robin weights beta and sigma_r must be positive")
    return b, s


def build_subdomain(mesh: Mesh2D, partition: Partition, j: int, degree: int,
                    f, g, beta: float, sigma_r: float,
                    contexts=None) -> SubdomainProblem:
    """Assemble and factorize the Robin-augmented problem of subdomain j."""
    if beta <= 0.0 or sigma_r <= 0.0:
        raise ValueError("Robin weights beta and sigma_r must be positive")
    if contexts is None:
        contexts = element_contexts(mesh, degree)
    elements = partition.elements_of(j)
    if len(elements) == 0:
        raise ValueError(f"subdomain {j} is empty")
    labels = partition.subdomain_of
    edge_set = sorted({int(e) for t in elements
                       for e in mesh.element_edges[t, :, 0]})

    n0 = basis_dim(degree)
    nm = degree
    interior_slices = {}
    pos = 0
    for t in elements:
        interior_slices[int(t)] = slice(pos, pos + n0)
        pos += n0
    trace_slices = {}
    for e in edge_set:
        if mesh.edges[e].is_boundary:
            trace_slices[e] = None
            continue
        trace_slices[e] = slice(pos, pos + nm)
        pos += nm
    flux_slices = {}
    for e in edge_set:
        flux_slices[e] = slice(pos, pos + nm)
        pos += nm
    n_lam = pos
    u_slices = {}
    nu = basis_dim(degree - 1)
    for t in elements:
        u_slices[int(t)] = slice(pos, pos + nu)
        pos += nu
    n_u = pos - n_lam

    interface_edges: dict = {}
    tau_of: dict = {}
    for e in edge_set:
        rec = mesh.edges[e]
        if rec.is_boundary:
            continue
        a, b = rec.incident_elements
        ja, jb = int(labels[a]), int(labels[b])
        if ja == jb:
            continue
        other = jb if ja == j else ja
        own_elem = a if ja == j else b
        interface_edges.setdefault(other, []).append(e)
        tau_of[e] = tau(mesh, own_elem, e)
    for other in interface_edges:
        interface_edges[other].sort()

    edge_mass = {e: edge_mass_diag(nm, mesh.edges[e].length) for e in edge_set}

    # scatter local stabilizer + pairing blocks
    s_rows, s_cols, s_vals = [], [], []
    b_rows, b_cols, b_vals = [], [], []
    static_rhs = np.zeros(n_lam + n_u)
    for t in elements:
        t = int(t)
        ctx = contexts[t]
        gmap = np.full(ctx.n_loc, -1, dtype=int)
        gmap[:n0] = np.arange(interior_slices[t].start, interior_slices[t].stop)
        for le in range(3):
            e = int(mesh.element_edges[t, le, 0])
            tsl = trace_slices[e]
            if tsl is not None:
                gmap[ctx.slice_trace(le)] = np.arange(tsl.start, tsl.stop)
            fsl = flux_slices[e]
            gmap[ctx.slice_flux(le)] = np.arange(fsl.start, fsl.stop)
        keep = np.flatnonzero(gmap >= 0)
        gk = gmap[keep]
        s_loc = ctx.stab[np.ix_(keep, keep)]
        s_rows.append(np.repeat(gk, len(gk)))
        s_cols.append(np.tile(gk, len(gk)))
        s_vals.append(s_loc.ravel())
        urows = np.arange(u_slices[t].start - n_lam, u_slices[t].stop - n_lam)
        b_rows.append(np.repeat(urows, len(gk)))
        b_cols.append(np.tile(gk, len(urows)))
        b_vals.append(ctx.b_pair[:, keep].ravel())
        static_rhs[interior_slices[t]] = ctx.load_interior(f)

    for e in edge_set:
        if mesh.edges[e].is_boundary:
            static_rhs[flux_slices[e]] += boundary_flux_load(mesh, e, g, degree)

    S_stab = sp.coo_matrix(
        (np.concatenate(s_vals), (np.concatenate(s_rows), np.concatenate(s_cols))),
        shape=(n_lam, n_lam)).tocsr()

    robin_rows, robin_vals = [], []
    for edges in interface_edges.values():
        for e in edges:
            tsl = trace_slices[e]
            robin_rows.append(np.arange(tsl.start, tsl.stop))
            robin_vals.append(beta * edge_mass[e])
            fsl = flux_slices[e]
            robin_rows.append(np.arange(fsl.start, fsl.stop))
            robin_vals.append(sigma_r * edge_mass[e])
    if robin_rows:
        rr = np.concatenate(robin_rows)
        robin = sp.coo_matrix(
            (np.concatenate(robin_vals), (rr, rr)), shape=(n_lam, n_lam)).tocsr()
        S_robin = S_stab + robin
    else:
        S_robin = S_stab

    B = sp.coo_matrix(
        (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
        shape=(n_u, n_lam)).tocsr()
    K = sp.bmat([[S_robin, B.T], [B, None]], format="csc")
    try:
        lu = splu(K)
    except (RuntimeError, ValueError) as exc:
        raise SolverError(
            f"subdomain {j} factorization failed ({exc}); "
            f"{n_lam} dual + {n_u} primal dofs") from exc

    return SubdomainProblem(
        j=j, degree=degree, elements=np.asarray(elements, dtype=int),
        edges=edge_set, n_lam=n_lam, n_u=n_u, K=K, lu=lu, S_stab=S_stab,
        static_rhs=static_rhs, interface_edges=interface_edges,
        edge_mass=edge_mass, interior_slices=interior_slices,
        trace_slices=trace_slices, flux_slices=flux_slices, u_slices=u_slices,
        tau_of=tau_of, beta=beta, sigma_r=sigma_r)


def build_all_subdomains(mesh, partition, degree, f, g, beta, sigma_r,
                         contexts=None) -> list:
    if contexts is None:
        contexts = element_contexts(mesh, degree)
    return [build_subdomain(mesh, partition, j, degree, f, g, beta, sigma_r,
                            contexts)
            for j in range(1, partition.M + 1)]


def zero_robin_state(partition: Partition, degree: int) -> RobinState:
    """Generation-0 state: all transmission blocks zero."""
    r_b: dict = {}
    r_n: dict = {}
    for rec in partition.interfaces:
        j, k = rec.pair
        for recv, send in ((j, k), (k, j)):
            r_b[(recv, send)] = {e: np.zeros(degree) for e in rec.edge_ids}
            r_n[(recv, send)] = {e: np.zeros(degree) for e in rec.edge_ids}
    return RobinState(m=0, r_b=r_b, r_n=r_n)


def random_robin_state(partition: Partition, degree: int, rng,
                       scale: float = 1.0) -> RobinState:
    """Random nonzero transmission data; test mode for decay studies."""
    state = zero_robin_state(partition, degree)
    for blocks in (state.r_b, state.r_n):
        for key in sorted(blocks):
            for e in sorted(blocks[key]):
                blocks[key][e] = scale * rng.standard_normal(degree)
    return state


def _solve_one(problem: SubdomainProblem, state: RobinState) -> np.ndarray:
    rhs = problem.static_rhs.copy()
    for other, edges in sorted(problem.interface_edges.items()):
        rb = state.r_b[(problem.j, other)]
        rn = state.r_n[(problem.j, other)]
        for e in edges:
            me = problem.edge_mass[e]
            rhs[problem.trace_slices[e]] += me * rb[e]
            rhs[problem.flux_slices[e]] += me * rn[e]
    return problem.lu.solve(rhs)


def sweep(problems: list, state: RobinState, workers: int = 1,
          generation: int | None = None) -> tuple:
    """One bulk-synchronous exchange step.

    Phase 1 solves every subdomain against generation state.m data;
    phase 2 rebuilds all transmission blocks in a fixed ordered-pair
    order from the fresh interface values.  Returns (solutions, state at
    generation state.m + 1); solutions[i] is the flat local vector of
    problems[i].
    """
    if generation is not None and generation != state.m + 1:
        raise ValueError(
            f"generation mismatch: state holds m={state.m}, "
            f"sweep would produce m={state.m + 1}, caller expected {generation}")
    if workers > 1 and len(problems) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(lambda p: _solve_one(p, state), problems))
    else:
        solutions = [_solve_one(p, state) for p in problems]

    new_rb: dict = {}
    new_rn: dict = {}
    for recv, send in sorted(state.r_b):
        sender = problems[send - 1]
        sol = solutions[send - 1]
        beta, sigma_r = sender.beta, sender.sigma_r
        rb_out = {}
        rn_out = {}
        for e in sorted(state.r_b[(recv, send)]):
            lam_b = sol[sender.trace_slices[e]]
            lam_n = sol[sender.flux_slices[e]]
            rb_out[e] = 2.0 * beta * lam_b - state.r_b[(send, recv)][e]
            rn_out[e] = 2.0 * sigma_r * lam_n - state.r_n[(send, recv)][e]
        new_rb[(recv, send)] = rb_out
        new_rn[(recv, send)] = rn_out
    new_state = RobinState(m=state.m + 1, r_b=new_rb, r_n=new_rn,
                           ledger=state.ledger)
    return solutions, new_state


def weighted_residual_sq(problems: list, r_b: dict, r_n: dict,
                         beta: float, sigma_r: float) -> float:
    """beta^-1 sum |r_b|^2 + sigma_r^-1 sum |r_n|^2 over ordered pairs.

    Norms are L2 edge norms from the Legendre edge mass matrices.
    """
    total = 0.0
    for key in sorted(r_b):
        recv = problems[key[0] - 1]
        for e in sorted(r_b[key]):
            me = recv.edge_mass[e]
            total += float(r_b[key][e] @ (me * r_b[key][e])) / beta
            total += float(r_n[key][e] @ (me * r_n[key][e])) / sigma_r
    return total


def _diff_blocks(new: dict, old: dict) -> dict:
    return {key: {e: new[key][e] - old[key][e] for e in new[key]} for key in new}


def energy_audit(state: RobinState) -> float:
    """Relative defect of the per-sweep energy identity on increments.

    Uses the two most recent ledger generations; raises ValueError when
    fewer than two sweeps have been recorded.
    """
    if len(state.ledger) < 2:
        raise ValueError("energy audit needs two consecutive generations")
    m, w_m, e_m = state.ledger[-1]
    _, w_prev, _ = state.ledger[-2]
    return _audit_defect(w_m, w_prev, e_m, state.scale)


def _audit_defect(w_m: float, w_prev: float, e_m: float, scale: float) -> float:
    floor = (AUDIT_FLOOR_REL * scale) ** 2
    return abs(w_m - w_prev + 4.0 * e_m) / max(w_m, w_prev, floor, _TINY)


def recover_mu(problems: list, solutions: list, used_state: RobinState,
               j: int, k: int) -> tuple:
    """Recover the interface Lagrange-multiplier blocks on the j/k interface.

    solutions must come from the sweep that consumed used_state.  Returns
    (mu_b, mu_n) as edge -> coefficient dictionaries in the global-normal
    convention, recovered from subdomain j's side:

        mu_n * tau = beta * lambda_b - r_b(into j)
        -mu_b * tau = sigma_r * lambda_n - r_n(into j)
    """
    problem = problems[j - 1]
    sol = solutions[j - 1]
    if k not in problem.interface_edges:
        raise ValueError(f"subdomains {j} and {k} share no interface")
    mu_b = {}
    mu_n = {}
    for e in problem.interface_edges[k]:
        t = problem.tau_of[e]
        lam_b = sol[problem.trace_slices[e]]
        lam_n = sol[problem.flux_slices[e]]
        mu_n[e] = t * (problem.beta * lam_b - used_state.r_b[(j, k)][e])
        mu_b[e] = -t * (problem.sigma_r * lam_n - used_state.r_n[(j, k)][e])
    return mu_b, mu_n


def gather_primal(problems: list, solutions: list, mesh: Mesh2D,
                  degree: int) -> PrimalCoeffs:
    """Stitch the per-subdomain primal blocks into the global layout."""
    u_map = PrimalDofMap(mesh.n_elements, degree)
    values = np.zeros(u_map.total)
    for problem, sol in zip(problems, solutions):
        for t in problem.elements:
            values[u_map.element_slice(int(t))] = sol[problem.u_slices[int(t)]]
    return PrimalCoeffs(u_map, values)


def interface_jumps(partition: Partition, problems: list,
                    solutions: list) -> tuple:
    """L2 norms of the trace and flux jumps across all interfaces."""
    jb = 0.0
    jn = 0.0
    for rec in partition.interfaces:
        j, k = rec.pair
        pj, pk = problems[j - 1], problems[k - 1]
        sj, sk = solutions[j - 1], solutions[k - 1]
        for e in rec.edge_ids:
            me = pj.edge_mass[e]
            db = sj[pj.trace_slices[e]] - sk[pk.trace_slices[e]]
            dn = sj[pj.flux_slices[e]] - sk[pk.flux_slices[e]]
            jb += float(db @ (me * db))
            jn += float(dn @ (me * dn))
    return float(np.sqrt(jb)), float(np.sqrt(jn))


def _interface_lambda_norm(problems: list, solutions: list) -> float:
    total = 0.0
    for problem, sol in zip(problems, solutions):
        for edges in problem.interface_edges.values():
            for e in edges:
                me = problem.edge_mass[e]
                lb = sol[problem.trace_slices[e]]
                ln = sol[problem.flux_slices[e]]
                total += float(lb @ (me * lb)) + float(ln @ (me * ln))
    return float(np.sqrt(total))


def _primal_l2_diff(problems: list, solutions: list, contexts,
                    reference: Solution, mesh: Mesh2D, degree: int) -> float:
    total = 0.0
    for problem, sol in zip(problems, solutions):
        for t in problem.elements:
            t = int(t)
            d = sol[problem.u_slices[t]] - reference.u.element_block(t)
            total += float(d @ contexts[t].mass_u @ d)
    return float(np.sqrt(total))


def iterate(mesh: Mesh2D, partition: Partition, degree: int, f, g,
            params: IterationParams | None = None,
            contexts=None) -> IterationReport:
    """Run the exchange iteration to tolerance or max_iters.

    Convergence requires the stabilizer energy of the lambda increment to
    fall below tol^2 and the relative change of the transmission data
    (against its running scale) to fall below tol.  Non-convergence
    within max_iters is reported, not raised.
    """
    params = params or IterationParams()
    if params.tol <= 0.0:
        raise ValueError("tol must be positive")
    beta, sigma_r = resolve_weights(mesh, params.beta, params.sigma_r)
    if contexts is None:
        contexts = element_contexts(mesh, degree)
    problems = build_all_subdomains(mesh, partition, degree, f, g,
                                    beta, sigma_r, contexts)
    state = params.initial_state or zero_robin_state(partition, degree)
    state.ledger.clear()

    reference = params.reference
    rows: list = []

    if not state.r_b:  # no interfaces: the local solve is the global solve
        solutions = [_solve_one(p, state) for p in problems]
        lam = [problems[i].lam_part(solutions[i]) for i in range(len(problems))]
        e_raw = sum(p.stab_energy(v) for p, v in zip(problems, lam))
        diff = (_primal_l2_diff(problems, solutions, contexts, reference,
                                mesh, degree) if reference else None)
        rows.append(TraceRow(m=1, weighted_residual=0.0, stab_energy=0.0,
                             energy_defect=None, diff_to_monolithic=diff,
                             wall_ms=None, stab_energy_raw=e_raw,
                             rel_change=0.0, lambda_interface_norm=0.0))
        state.ledger.append((1, 0.0, 0.0))
        return IterationReport(
            iterations=1, converged=True, final_weighted_residual=0.0,
            energy_defect_max=None, rows=rows, jump_b=0.0, jump_n=0.0,
            mu_mismatch_b=None, mu_mismatch_n=None, diff_to_monolithic=diff,
            u=gather_primal(problems, solutions, mesh, degree),
            lambda_locals=lam, problems=problems, beta=beta, sigma_r=sigma_r)

    prev_state = state
    prev_lam = None
    w_prev_delta = None
    hist_scale = np.sqrt(weighted_residual_sq(problems, state.r_b, state.r_n,
                                              beta, sigma_r))
    converged = False
    solutions: list = []
    used_state = state
    defect_max = None
    for m in range(1, params.max_iters + 1):
        t0 = time.perf_counter() if params.collect_timings else None
        used_state = prev_state
        solutions, state = sweep(problems, prev_state, workers=params.workers,
                                 generation=m)
        lam = [problems[i].lam_part(solutions[i]) for i in range(len(problems))]
        e_raw = sum(p.stab_energy(v) for p, v in zip(problems, lam))
        if prev_lam is None:
            e_delta = e_raw
        else:
            e_delta = sum(p.stab_energy(v - pv)
                          for p, v, pv in zip(problems, lam, prev_lam))
        db = _diff_blocks(state.r_b, prev_state.r_b)
        dn = _diff_blocks(state.r_n, prev_state.r_n)
        w_delta = weighted_residual_sq(problems, db, dn, beta, sigma_r)
        w_raw = weighted_residual_sq(problems, state.r_b, state.r_n,
                                     beta, sigma_r)
        hist_scale = max(hist_scale, float(np.sqrt(w_raw)))
        state.scale = hist_scale
        rel = float(np.sqrt(w_delta) / hist_scale) if hist_scale > 0.0 else 0.0
        defect = None
        if m >= 2:
            defect = _audit_defect(w_delta, w_prev_delta, e_delta, hist_scale)
            defect_max = defect if defect_max is None else max(defect_max, defect)
        state.ledger.append((m, w_delta, e_delta))
        diff = row_jb = row_jn = None
        if reference is not None:
            diff = _primal_l2_diff(problems, solutions, contexts, reference,
                                   mesh, degree)
            row_jb, row_jn = interface_jumps(partition, problems, solutions)
        wall = None
        if params.collect_timings:
            wall = (time.perf_counter() - t0) * 1e3
        rows.append(TraceRow(
            m=m, weighted_residual=w_delta, stab_energy=e_delta,
            energy_defect=defect, diff_to_monolithic=diff, wall_ms=wall,
            stab_energy_raw=e_raw, rel_change=rel,
            lambda_interface_norm=_interface_lambda_norm(problems, solutions),
            jump_b=row_jb, jump_n=row_jn))
        if e_delta <= params.tol ** 2 and rel <= params.tol:
            converged = True
            break
        prev_state = state
        prev_lam = lam
        w_prev_delta = w_delta

    jump_b, jump_n = interface_jumps(partition, problems, solutions)
    mu_b_mis, mu_n_mis = _mu_mismatch(partition, problems, solutions, used_state)
    return IterationReport(
        iterations=rows[-1].m, converged=converged,
        final_weighted_residual=rows[-1].weighted_residual,
        energy_defect_max=defect_max, rows=rows, jump_b=jump_b, jump_n=jump_n,
        mu_mismatch_b=mu_b_mis, mu_mismatch_n=mu_n_mis,
        diff_to_monolithic=rows[-1].diff_to_monolithic,
        u=gather_primal(problems, solutions, mesh, degree),
        lambda_locals=[problems[i].lam_part(solutions[i])
                       for i in range(len(problems))],
        problems=problems, beta=beta, sigma_r=sigma_r)


def _mu_mismatch(partition: Partition, problems: list, solutions: list,
                 used_state: RobinState) -> tuple:
    mb = 0.0
    mn = 0.0
    for rec in partition.interfaces:
        j, k = rec.pair
        mu_b_j, mu_n_j = recover_mu(problems, solutions, used_state, j, k)
        mu_b_k, mu_n_k = recover_mu(problems, solutions, used_state, k, j)
        for e in rec.edge_ids:
            me = problems[j - 1].edge_mass[e]
            d_b = mu_b_j[e] - mu_b_k[e]
            d_n = mu_n_j[e] - mu_n_k[e]
            mb += float(d_b @ (me * d_b))
            mn += float(d_n @ (me * d_n))
    return float(np.sqrt(mb)), float(np.sqrt(mn))
