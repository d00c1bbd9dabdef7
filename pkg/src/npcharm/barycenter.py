"""Weighted centers of mass in NPC targets and ball-average mollification.

``karcher_mean`` returns the unique minimizer of

    I(Q) = sum_i w_i d(p_i, Q)^2

(uniqueness is the NPC center-of-mass lemma).  Manifold kinds use the
fixed-point iteration Q <- exp_Q(sum_i w_i log_Q p_i) with unit step; the
1-strong convexity of I along geodesics in an NPC space makes the unit
step contractive.  Euclidean targets short-circuit to the arithmetic
mean and pod targets use the exact per-ray closed form: on the ray-r
coordinate axis every input point has signed coordinate +radius (same
ray) or -radius, so the restricted problem is a clamped weighted average;
the best ray wins, ties broken by lowest index.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, UsageError
from .spaces import Euclidean, HyperbolicPlane, Pod, PodPoint, Spd
from ._kernels import kernels


class WeightedCloud:
    """Nonempty point list with positive weights, normalized to sum 1."""

    def __init__(self, points, weights=None, normalize=True):
        points = list(points)
        if not points:
            raise UsageError("cloud must be nonempty")
        if weights is None:
            weights = np.full(len(points), 1.0 / len(points))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(points),):
            raise UsageError("one weight per point required")
        if (weights <= 0).any():
            raise UsageError("weights must be positive")
        s = weights.sum()
        if normalize:
            weights = weights / s
        elif abs(s - 1.0) > 1e-12:
            raise UsageError("weights must sum to 1 within 1e-12")
        self.points = points
        self.weights = weights

    def __len__(self):
        return len(self.points)


def variance(space, cloud, q):
    """I(q) = sum_i w_i d(p_i, q)^2."""
    return float(sum(w * space.distance(p, q) ** 2
                     for p, w in zip(cloud.points, cloud.weights)))


def _pod_mean(space, cloud):
    best = None
    for ray in range(space.k):
        s = np.array([p.radius if p.ray == ray else -p.radius
                      for p in (space.validate_point(p) for p in cloud.points)])
        m = max(0.0, float(cloud.weights @ s))
        val = float(cloud.weights @ (m - s) ** 2)
        if best is None or val < best[0] - 1e-15:
            best = (val, ray, m)
    return space.validate_point(PodPoint(best[1], best[2]))


def karcher_mean(space, cloud, tol=1e-10, max_iter=1000):
    """Weighted center of mass; raises ConvergenceError if the gradient
    criterion |sum_i w_i log_Q p_i|_g <= tol is not met in max_iter steps.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    if isinstance(space, Euclidean):
        pts = np.stack([space.validate_point(p) for p in cloud.points])
        return cloud.weights @ pts
    if isinstance(space, Pod):
        return _pod_mean(space, cloud)
    if isinstance(space, HyperbolicPlane):
        pts = np.stack([space.validate_point(p) for p in cloud.points])
        q, disp, _ = kernels.hyp_karcher(pts, cloud.weights, tol, max_iter)
        if disp > tol:
            raise ConvergenceError("karcher mean did not converge",
                                   best=q, displacement=disp)
        return q
    if isinstance(space, Spd) and space.n == 2 and space.field == "real":
        pts = np.stack([space.validate_point(p) for p in cloud.points])
        q, disp, _ = kernels.spd2_karcher(pts, cloud.weights, tol, max_iter)
        if disp > tol:
            raise ConvergenceError("karcher mean did not converge",
                                   best=q, displacement=disp)
        return q
    return _karcher_generic(space, cloud, tol, max_iter)


def _karcher_generic(space, cloud, tol, max_iter):
    pts = [space.validate_point(p) for p in cloud.points]
    q = pts[0]
    if len(pts) == 1:
        return q
    disp = math.inf
    for _ in range(max_iter):
        g = sum(w * space.log_map(q, p) for p, w in zip(pts, cloud.weights))
        disp = space.tangent_norm(q, g)
        if disp <= tol:
            return q
        q = space.exp_map(q, g)
    raise ConvergenceError("karcher mean did not converge",
                           best=q, displacement=disp)


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------

def _hop_ball(domain, rep, center, radius):
    """BFS ball with accumulated twist transport along first-found paths.

    Returns [(vertex, transport)] where transport maps the stored value at
    the vertex into the chart of the center (identity when untwisted).
    """
    adj = domain.adjacency()
    ident = rep.space.identity_isometry() if rep is not None else None
    seen = {center: ident}
    frontier = [center]
    out = [(center, ident)]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            tv = seen[v]
            for u, _, word in adj[v]:
                if u in seen:
                    continue
                if word and rep is None:
                    raise UsageError("twisted domain requires a representation")
                tu = tv.compose(rep.isometry(word)) if word else tv
                seen[u] = tu
                out.append((u, tu))
                nxt.append(u)
        frontier = nxt
    return out


def mollify(dmap, domain, radius, rep=None, tol=1e-10, max_iter=1000):
    """Replace each vertex value by the mu-weighted Karcher mean over its
    hop-distance ball (Jacobi semantics: all reads from the input map).

    On twisted domains values are transported into each center's chart
    along BFS-tree paths before averaging, which preserves equivariance.
    """
    if radius < 1:
        raise UsageError("mollify radius must be >= 1")
    from .domains import DiscreteMap

    space = dmap.space
    new_values = []
    for v in range(len(dmap)):
        ball = _hop_ball(domain, rep, v, radius)
        pts = []
        wts = []
        for u, transport in ball:
            val = dmap[u]
            if transport is not None:
                val = transport.apply(val)
            pts.append(val)
            wts.append(domain.mu[u])
        try:
            new_values.append(karcher_mean(space, WeightedCloud(pts, wts),
                                           tol=tol, max_iter=max_iter))
        except ConvergenceError as exc:
            raise ConvergenceError(f"mollify failed at vertex {v}: {exc}",
                                   best=exc.best, displacement=exc.displacement)
    return DiscreteMap(space, new_values)
