"""Discrete energy and Gauss-Seidel relaxation to harmonic maps.

The energy of a map f on a weighted graph is

    E(f) = 1/2 sum_edges w_uv d(f(u), gamma_uv . f(v))^2

with gamma_uv the edge twist resolved through a representation (identity
when untwisted).  One relaxation sweep replaces each updatable vertex by
the exact minimizer of its star energy -- the weighted Karcher mean of
the (transported) neighbor values -- so the energy is non-increasing
sweep by sweep.  Sequential sweeps in ascending vertex order are the
default and are bit-reproducible; red-black ordering interleaves two
independent classes from a greedy 2-coloring (exact red-black on
bipartite grids).

Euclidean, hyperbolic-plane, and real spd(2) targets run the sweep in
the kernel backend (compiled when available); all other targets use the
generic per-vertex path through ``barycenter.karcher_mean``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barycenter import WeightedCloud, karcher_mean
from .domains import DiscreteMap, DomainGraph, Representation
from .errors import ConvergenceError, UsageError
from .spaces import Euclidean, HyperbolicPlane, MobiusMap, Pod, RigidMotion, SLAction, Spd
from ._kernels import kernels


@dataclass
class SolveConfig:
    tol: float = 1e-8            # max vertex displacement per sweep
    max_sweeps: int = 100000
    order: str = "sequential"    # or "red-black"
    seed: int = 0
    divergence_bound: float = 1e6  # max pairwise distance before aborting
    karcher_tol: float | None = None
    karcher_max_iter: int = 200

    def __post_init__(self):
        if self.tol <= 0:
            raise UsageError("tol must be positive")
        if self.order not in ("sequential", "red-black"):
            raise UsageError("order must be 'sequential' or 'red-black'")

    @property
    def star_tol(self):
        if self.karcher_tol is not None:
            return self.karcher_tol
        return max(1e-14, 1e-3 * self.tol)


@dataclass
class SolveTrace:
    """Per-sweep records (sweep index, energy after sweep, max displacement)."""

    sweeps: list = field(default_factory=list)
    status: str = "unconverged"

    def record(self, i, energy, max_disp):
        self.sweeps.append((i, energy, max_disp))

    @property
    def energies(self):
        return [e for _, e, _ in self.sweeps]

    @property
    def final_energy(self):
        return self.sweeps[-1][1] if self.sweeps else math.nan

    def to_csv(self):
        lines = ["sweep,energy,max_disp"]
        for i, e, d in self.sweeps:
            lines.append(f"{i},{e!r},{d!r}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# problem preparation
# ---------------------------------------------------------------------------

class _Prepared:
    """Resolved edge isometries plus kernel-ready arrays (when supported)."""

    def __init__(self, domain: DomainGraph, space, rep: Representation | None):
        self.domain = domain
        self.space = space
        self.rep = rep
        adj = domain.adjacency()
        self.star = []  # per vertex: list of (nbr, weight, iso or None)
        for v in range(domain.n):
            entries = []
            for u, w, word in adj[v]:
                if word:
                    if rep is None:
                        raise UsageError("twisted domain requires a representation")
                    entries.append((u, w, rep.isometry(word)))
                else:
                    entries.append((u, w, None))
            self.star.append(entries)
        self.edge_iso = []
        for e in domain.edges:
            self.edge_iso.append(rep.isometry(e.twist) if e.twist else None)
        self.kind = self._kernel_kind()
        if self.kind:
            self._build_arrays()

    def _kernel_kind(self):
        sp = self.space
        if isinstance(sp, Euclidean):
            return "euc"
        if isinstance(sp, HyperbolicPlane):
            return "hyp"
        if isinstance(sp, Spd) and sp.n == 2 and sp.field == "real":
            return "spd2"
        return None

    def _build_arrays(self):
        dom, sp = self.domain, self.space
        indptr = [0]
        nbr, wts, mats = [], [], []
        shifts = [] if self.kind == "euc" else None
        dim = sp.dim if self.kind == "euc" else 2
        for v in range(dom.n):
            for u, w, iso in self.star[v]:
                nbr.append(u)
                wts.append(w)
                mats.append(self._iso_matrix(iso))
                if shifts is not None:
                    shifts.append(np.zeros(dim) if iso is None else iso.shift)
            indptr.append(len(nbr))
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.nbr = np.asarray(nbr, dtype=np.int64)
        self.wts = np.asarray(wts, dtype=float)
        self.mats = np.ascontiguousarray(np.stack(mats)) if mats else np.zeros((0, dim, dim))
        self.shifts = (np.ascontiguousarray(np.stack(shifts))
                       if shifts else None) if self.kind == "euc" else None
        eu, ev, ew, emat = [], [], [], []
        eshift = [] if self.kind == "euc" else None
        for e, iso in zip(dom.edges, self.edge_iso):
            eu.append(e.u)
            ev.append(e.v)
            ew.append(e.weight)
            emat.append(self._iso_matrix(iso))
            if eshift is not None:
                eshift.append(np.zeros(dim) if iso is None else iso.shift)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=float)
        self.emat = np.ascontiguousarray(np.stack(emat)) if emat else np.zeros((0, dim, dim))
        self.eshift = (np.ascontiguousarray(np.stack(eshift))
                       if eshift else None) if self.kind == "euc" else None

    def _iso_matrix(self, iso):
        """Kernel transform matrix: euc rotation, Mobius matrix, or g^{-1}
        for the spd action h -> (g^{-1})^T h g^{-1}."""
        if self.kind == "euc":
            dim = self.space.dim
            return np.eye(dim) if iso is None else iso.rot
        if self.kind == "hyp":
            return np.eye(2) if iso is None else iso.mat
        return np.eye(2) if iso is None else np.linalg.inv(iso.mat)

    def values_array(self, dmap):
        if self.kind == "spd2":
            return np.ascontiguousarray(np.stack(dmap.values))
        return np.ascontiguousarray(np.stack(dmap.values), dtype=float)

    def kernel_energy(self, values):
        if self.kind == "euc":
            return kernels.euc_energy(values, self.eu, self.ev, self.ew,
                                      self.emat, self.eshift)
        if self.kind == "hyp":
            return kernels.hyp_energy(values, self.eu, self.ev, self.ew, self.emat)
        return kernels.spd2_energy(values, self.eu, self.ev, self.ew, self.emat)

    def kernel_sweep(self, values, order, cfg):
        if self.kind == "euc":
            return kernels.euc_sweep(values, self.indptr, self.nbr, self.wts,
                                     self.mats, self.shifts, order)
        if self.kind == "hyp":
            return kernels.hyp_sweep(values, self.indptr, self.nbr, self.wts,
                                     self.mats, order, cfg.star_tol,
                                     cfg.karcher_max_iter)
        return kernels.spd2_sweep(values, self.indptr, self.nbr, self.wts,
                                  self.mats, order, cfg.star_tol,
                                  cfg.karcher_max_iter)


# ---------------------------------------------------------------------------
# energy / local replacement
# ---------------------------------------------------------------------------

def energy(domain: DomainGraph, dmap: DiscreteMap, rep: Representation | None = None):
    """Total discrete energy; zero iff the map is constant on every
    twist-trivial component."""
    if len(dmap) != domain.n:
        raise UsageError("map does not cover the domain")
    prep = _Prepared(domain, dmap.space, rep)
    if prep.kind:
        return float(prep.kernel_energy(prep.values_array(dmap)))
    space = dmap.space
    e = 0.0
    for edge, iso in zip(domain.edges, prep.edge_iso):
        seen = dmap[edge.v] if iso is None else iso.apply(dmap[edge.v])
        d = space.distance(dmap[edge.u], seen)
        e += 0.5 * edge.weight * d * d
    return e


def star_cloud(prep: _Prepared, dmap, vertex):
    pts, wts = [], []
    for u, w, iso in prep.star[vertex]:
        val = dmap[u]
        pts.append(val if iso is None else iso.apply(val))
        wts.append(w)
    return WeightedCloud(pts, wts)


def local_replace(domain, dmap, vertex, rep=None, tol=1e-12, max_iter=500):
    """Exact minimizer of the one-vertex star energy: the weighted Karcher
    mean of the twisted neighbor values."""
    if vertex in domain.boundary:
        raise UsageError(f"vertex {vertex} is a boundary vertex")
    prep = _Prepared(domain, dmap.space, rep)
    return karcher_mean(dmap.space, star_cloud(prep, dmap, vertex),
                        tol=tol, max_iter=max_iter)


# ---------------------------------------------------------------------------
# sweeps and solves
# ---------------------------------------------------------------------------

def _two_coloring(domain, updatable):
    """Greedy 2-coloring; on bipartite graphs this is exact red-black."""
    color = {}
    adj = domain.adjacency()
    for start in updatable:
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            v = stack.pop()
            for u, _, _ in adj[v]:
                if u in color or u not in updatable:
                    continue
                color[u] = 1 - color[v]
                stack.append(u)
    reds = [v for v in updatable if color.get(v, 0) == 0]
    blacks = [v for v in updatable if color.get(v, 0) == 1]
    return reds, blacks


def _order_array(domain, updatable, order):
    upd = sorted(updatable)
    if order == "sequential":
        return np.asarray(upd, dtype=np.int64)
    reds, blacks = _two_coloring(domain, set(upd))
    return np.asarray(reds + blacks, dtype=np.int64)


def _generic_sweep(prep, dmap, order, cfg):
    space = dmap.space
    maxd = 0.0
    for v in order:
        new = karcher_mean(space, star_cloud(prep, dmap, int(v)),
                           tol=cfg.star_tol, max_iter=cfg.karcher_max_iter)
        d = space.distance(dmap[int(v)], new)
        if d > maxd:
            maxd = d
        dmap[int(v)] = new
    return maxd


def _run(prep, dmap, updatable, cfg, check_divergence=False):
    order = _order_array(prep.domain, updatable, cfg.order)
    trace = SolveTrace()
    if prep.kind:
        values = prep.values_array(dmap)
        for sweep in range(1, cfg.max_sweeps + 1):
            disp = prep.kernel_sweep(values, order, cfg)
            trace.record(sweep, float(prep.kernel_energy(values)), float(disp))
            if check_divergence and _diverged(prep.space, values, cfg):
                raise _divergence_error(trace)
            if disp <= cfg.tol:
                trace.status = "converged"
                break
        _writeback(dmap, values)
    else:
        for sweep in range(1, cfg.max_sweeps + 1):
            disp = _generic_sweep(prep, dmap, order, cfg)
            trace.record(sweep, energy(prep.domain, dmap, prep.rep), float(disp))
            if check_divergence and dmap.max_pairwise_distance() > cfg.divergence_bound:
                raise _divergence_error(trace)
            if disp <= cfg.tol:
                trace.status = "converged"
                break
    if trace.status != "converged":
        raise ConvergenceError(
            f"relaxation did not reach tol={cfg.tol} in {cfg.max_sweeps} sweeps",
            best=dmap, displacement=trace.sweeps[-1][2] if trace.sweeps else math.inf,
            trace=trace)
    return dmap, trace


def _diverged(space, values, cfg):
    if isinstance(space, Euclidean):
        r = np.linalg.norm(values - values[0], axis=1).max()
    elif isinstance(space, HyperbolicPlane):
        r = space.batch_distance(np.broadcast_to(values[0], values.shape), values).max()
    else:
        r = space.batch_distance(np.broadcast_to(values[0], values.shape), values).max()
    return 2 * r > cfg.divergence_bound


def _divergence_error(trace):
    return ConvergenceError(
        "map values diverge to infinity: the representation appears to fix a "
        "point at infinity, so no finite-energy minimizer exists "
        "(cannot fix a point at infinity)", trace=trace)


def _writeback(dmap, values):
    for v in range(len(values)):
        dmap.values[v] = values[v].copy()


def solve_dirichlet(domain, boundary_values, init, cfg=None, rep=None):
    """Relax to the harmonic map with prescribed boundary values.

    ``boundary_values`` maps every boundary vertex to a target point and
    must agree with ``init`` there.  Returns (map, trace); the result is
    fixed under local_replace within cfg.tol at every interior vertex.
    """
    cfg = cfg or SolveConfig()
    if not domain.boundary:
        raise UsageError("domain has no boundary; use solve_equivariant")
    missing = domain.boundary - set(boundary_values)
    if missing:
        raise UsageError(f"boundary values missing for vertices {sorted(missing)}")
    space = init.space
    dmap = init.copy()
    for v, p in boundary_values.items():
        if int(v) not in domain.boundary:
            raise UsageError(f"vertex {v} is not a boundary vertex")
        p = space.validate_point(p)
        if space.distance(init[int(v)], p) > 1e-9:
            raise UsageError(f"init disagrees with boundary value at vertex {v}")
        dmap[int(v)] = p
    prep = _Prepared(domain, space, rep)
    return _run(prep, dmap, domain.interior, cfg)


def solve_equivariant(domain, rep, init=None, cfg=None):
    """Relax the twisted (equivariant) energy over all vertices.

    The minimizer is unique only up to target isometries; contractual
    outputs are the energy and the fixed-point residual.  Divergence to
    infinity (representation fixing a boundary point at infinity) aborts
    with a ConvergenceError.
    """
    cfg = cfg or SolveConfig()
    if domain.boundary:
        raise UsageError("equivariant solve expects a boundary-free domain")
    if init is None:
        init = _default_equivariant_init(domain, rep, cfg)
    prep = _Prepared(domain, init.space, rep)
    return _run(prep, init.copy(), range(domain.n), cfg, check_divergence=True)


def _default_equivariant_init(domain, rep, cfg):
    """Constant map at a basepoint, then one mollification pass; this is a
    finite-energy equivariant start."""
    from .barycenter import mollify

    space = rep.space
    if isinstance(space, Euclidean):
        base = np.zeros(space.dim)
    elif isinstance(space, HyperbolicPlane):
        base = np.array([0.0, 1.0])
    elif isinstance(space, Spd):
        base = np.eye(space.n, dtype=complex if space.field == "complex" else float)
    elif isinstance(space, Pod):
        base = space.origin()
    else:
        raise UsageError(f"no default basepoint for {space.kind}")
    const = DiscreteMap.constant(space, domain.n, base)
    return mollify(const, domain, radius=1, rep=rep)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def energy_along_interpolation(domain, map0, map1, samples=11, rep=None):
    """E(f_t) for the vertexwise geodesic interpolation f_t; convex in t
    for NPC targets.  Boundary values must agree when a boundary exists."""
    if samples < 3:
        raise UsageError("need at least 3 samples")
    if map0.space != map1.space:
        raise UsageError("maps must share a target space")
    if len(map0) != domain.n or len(map1) != domain.n:
        raise UsageError("maps must cover the domain")
    space = map0.space
    for b in domain.boundary:
        if space.distance(map0[b], map1[b]) > 1e-9:
            raise UsageError(f"boundary values differ at vertex {b}")
    out = []
    for i in range(samples):
        t = i / (samples - 1)
        ft = DiscreteMap(space, [space.interpolate(map0[v], map1[v], t)
                                 for v in range(domain.n)])
        out.append((t, energy(domain, ft, rep)))
    return out


def lipschitz_ratio(domain, dmap, rep=None):
    """max over edges of w_uv * d(f(u), gamma f(v))^2: the discrete
    analogue of sup |df|^2, reported against the total energy when
    checking the interior Lipschitz bound."""
    prep = _Prepared(domain, dmap.space, rep)
    space = dmap.space
    worst = 0.0
    for edge, iso in zip(domain.edges, prep.edge_iso):
        seen = dmap[edge.v] if iso is None else iso.apply(dmap[edge.v])
        val = edge.weight * space.distance(dmap[edge.u], seen) ** 2
        if val > worst:
            worst = val
    return worst
