"""The harmonic-metric / flat-connection dictionary for SL(n).

For a map h into determinant-one positive definite matrices, the
decomposition d = D + theta of the flat connection into a Hermitian
connection and a self-adjoint 1-form is realized discretely by

    theta_e = -1/2 h_u^{-1} (h_v - h_u) / spacing

on each oriented edge (value stored at the tail vertex), which makes the
identity h * theta = -1/2 dh hold exactly by construction.  The
covariant divergence d_D^* theta is evaluated through that identity:
conjugating by h turns it into the metric adjoint of the Levi-Civita
connection applied to -1/2 dh, for which a centered second-order stencil
exists; on chain domains (paths, cycles) the discrete divergence of the
converged harmonic map then vanishes at O(spacing^2).

Twisted edges transport values through the group action: crossing an
edge twisted by g pulls points back by h -> g^* h g and tangent objects
by X -> g^* X g.
"""

from __future__ import annotations

import math

import numpy as np

from .domains import DiscreteMap, DomainGraph, Representation, build_grid_domain, build_twisted_domain
from .errors import DomainError, UsageError
from .solver import SolveConfig, solve_equivariant
from .spaces import SLAction, Spd

DET_TOL = 1e-10


def _expm_selfadjoint(x):
    w, v = np.linalg.eigh(x)
    return (v * np.exp(w)) @ v.conj().T


def check_group_element(g, n=None, field="complex"):
    """Validate an SL(n) matrix: invertible, determinant 1 within 1e-10."""
    g = np.asarray(g, dtype=complex if field == "complex" else float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise UsageError("group element must be a square matrix")
    if n is not None and g.shape[0] != n:
        raise UsageError(f"expected a {n}x{n} matrix")
    det = np.linalg.det(g)
    if abs(det) < 1e-12:
        raise DomainError("singular group element")
    if abs(det - 1.0) > DET_TOL:
        raise DomainError(f"determinant must be 1 (got {det})")
    return g


def psi(g):
    """Coset map gK -> g^{-1*} g^{-1}: positive definite, determinant one,
    equivariant for left multiplication vs. the h -> g^{-*} h g^{-1} action."""
    g = check_group_element(g)
    gi = np.linalg.inv(g)
    out = gi.conj().T @ gi
    return (out + out.conj().T) / 2


def killing_form(X, Y):
    """B(X, Y) = 2n trace(XY) on sl(n)."""
    X = np.asarray(X)
    n = X.shape[0]
    return complex(2 * n * np.trace(X @ np.asarray(Y))).real


def matrix_metric(h, X, Y):
    """g_H(X, Y) = (n/2) trace(h^{-1} X h^{-1} Y)."""
    hinv = np.linalg.inv(h)
    n = h.shape[0]
    return complex((n / 2) * np.trace(hinv @ X @ hinv @ Y)).real


def psi_isometry_residual(g, X, Y, step=1e-4):
    """|g_H(dPsi dL_g X, dPsi dL_g Y) - B(X, Y)| with the pushforward by
    central finite differences along t -> Psi(g e^{tX} K); O(step^2).

    X, Y must be self-adjoint trace-free (tangent vectors in the
    symmetric part of the Cartan decomposition, translated to gK).
    """
    g = check_group_element(g)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    for M in (X, Y):
        if np.abs(M - M.conj().T).max() > 1e-10:
            raise UsageError("tangent directions must be self-adjoint")
        if abs(np.trace(M)) > 1e-10:
            raise UsageError("tangent directions must be trace-free")

    def push(M):
        hp = psi(g @ _expm_selfadjoint(step * M))
        hm = psi(g @ _expm_selfadjoint(-step * M))
        return (hp - hm) / (2 * step)

    h = psi(g)
    lhs = matrix_metric(h, push(X), push(Y))
    return abs(lhs - killing_form(X, Y))


def hermitian_pairing(h, s, t):
    """H(s, t) = conj(s)^T h t: the Hermitian metric induced by h."""
    h = np.asarray(h)
    s = np.asarray(s, dtype=complex)
    t = np.asarray(t, dtype=complex)
    return complex(np.conj(s) @ h @ t)


# ---------------------------------------------------------------------------
# discrete theta field and covariant divergence
# ---------------------------------------------------------------------------

class ThetaField:
    """Edge-indexed theta matrices (at tail vertices) with base h values.

    ``theta[j]`` belongs to ``domain.edges[j]``; ``alpha[j] = h_tail @
    theta[j]`` equals -1/2 dh/spacing exactly.
    """

    def __init__(self, domain, h_map, theta, spacing, rep=None):
        self.domain = domain
        self.h_map = h_map
        self.theta = theta
        self.spacing = float(spacing)
        self.rep = rep
        self.large_steps = False

    def htheta_identity_residual(self):
        """max_e || h_u theta_e + 1/2 (h_v^seen - h_u)/spacing ||."""
        worst = 0.0
        for e, th in zip(self.domain.edges, self.theta):
            hu = self.h_map[e.u]
            hv = _lifted(self, e)
            resid = hu @ th + 0.5 * (hv - hu) / self.spacing
            worst = max(worst, float(np.abs(resid).max()))
        return worst

    def trace_residual(self):
        return max(float(abs(np.trace(th))) for th in self.theta)

    def selfadjoint_residual(self):
        """max_e || h^{-1} theta^* h - theta || (O(spacing) discretely)."""
        worst = 0.0
        for e, th in zip(self.domain.edges, self.theta):
            h = self.h_map[e.u]
            resid = np.linalg.inv(h) @ th.conj().T @ h - th
            worst = max(worst, float(np.abs(resid).max()))
        return worst


def _edge_iso_mat(rep, e):
    if e.twist is None:
        return None
    iso = rep.isometry(e.twist)
    if not isinstance(iso, SLAction):
        raise UsageError("theta fields require SL(n) twists")
    return iso.mat


def _lifted(tf, e):
    """Value of h at e.v as seen from e.u (through the twist)."""
    hv = tf.h_map[e.v]
    if e.twist is None:
        return hv
    g = _edge_iso_mat(tf.rep, e)
    gi = np.linalg.inv(g)
    return gi.conj().T @ hv @ gi


def theta_field(domain, h_map, spacing=None, rep=None, warn_distance=1.0):
    """theta_e = -1/2 h_u^{-1}(h_v - h_u)/spacing per oriented edge.

    ``spacing`` defaults to 1/E on boundary-free chains (unit-circumference
    cycles) and 1/(V-1) on paths.  Consecutive values farther apart than
    ``warn_distance`` in the matrix metric flag a warning in the result.
    """
    if spacing is None:
        spacing = (1.0 / len(domain.edges)) if not domain.boundary \
            else 1.0 / max(domain.n - 1, 1)
    tf = ThetaField(domain, h_map, [], spacing, rep)
    space = h_map.space
    warned = False
    for e in domain.edges:
        hu = h_map[e.u]
        hv = _lifted(tf, e)
        if isinstance(space, Spd) and space.distance(hu, hv) > warn_distance:
            warned = True
        tf.theta.append(-0.5 * np.linalg.inv(hu) @ (hv - hu) / spacing)
    tf.large_steps = warned
    return tf


def _chain_neighbors(domain):
    """For path/cycle domains: per-vertex (prev_edge_idx, next_edge_idx),
    requiring every vertex to touch at most two edges."""
    inc = [[] for _ in range(domain.n)]
    for j, e in enumerate(domain.edges):
        inc[e.u].append((j, +1))
        inc[e.v].append((j, -1))
    out = []
    for v in range(domain.n):
        if len(inc[v]) > 2:
            return None
        nxt = [j for j, s in inc[v] if s > 0]
        prv = [j for j, s in inc[v] if s < 0]
        out.append((prv[0] if prv else None, nxt[0] if nxt else None))
    return out


def covariant_divergence(tf: ThetaField):
    """Discrete d_D^* theta per vertex.

    On chains the centered stencil below is evaluated through the exact
    identity alpha = h theta = -1/2 dh/spacing, making it second-order
    consistent; interior vertices only (None at chain endpoints).  On
    other graphs the weighted graph divergence of the transported edge
    values is used (first-order).
    """
    domain, D = tf.domain, tf.spacing
    chain = _chain_neighbors(domain)
    if chain is not None:
        return _chain_divergence(tf, chain)
    return _graph_divergence(tf)


def _pull_prev(tf, e, X):
    """Transport a tangent object on the tail side of edge e into the
    chart of its head vertex (inverse action differential: g^* X g)."""
    if e.twist is None:
        return X
    g = _edge_iso_mat(tf.rep, e)
    return g.conj().T @ X @ g


def _chain_divergence(tf, chain):
    domain, D = tf.domain, tf.spacing
    out = [None] * domain.n
    for v in range(domain.n):
        jprev, jnext = chain[v]
        if jprev is None or jnext is None:
            continue
        ep, en = domain.edges[jprev], domain.edges[jnext]
        hj = tf.h_map[v]
        hp = _lifted(tf, en)
        hm = _pull_prev(tf, ep, tf.h_map[ep.u])
        a_next = tf.h_map[en.u] @ tf.theta[jnext]
        a_prev = _pull_prev(tf, ep, tf.h_map[ep.u] @ tf.theta[jprev])
        wn, wp = en.weight, ep.weight
        Wv = 0.5 * (wn + wp)
        hinv = np.linalg.inv(hj)
        hd = (hp - hm) / (2 * D)
        abar = 0.5 * (a_next + a_prev)
        corr = 0.5 * (hd @ hinv @ abar + abar @ hinv @ hd)
        dstar = -Wv * ((wn * a_next - wp * a_prev) / D - Wv * corr)
        out[v] = hinv @ dstar
    return out


def _graph_divergence(tf):
    domain, D = tf.domain, tf.spacing
    acc = [np.zeros_like(tf.theta[0]) for _ in range(domain.n)]
    for j, e in enumerate(domain.edges):
        a = tf.h_map[e.u] @ tf.theta[j]
        acc[e.u] -= e.weight * a
        acc[e.v] += e.weight * _pull_prev(tf, e, a)
    out = []
    for v in range(domain.n):
        hinv = np.linalg.inv(tf.h_map[v])
        out.append(hinv @ acc[v] / (domain.mu[v] * D))
    return out


def chain_tension(domain, h_map, spacing, rep=None):
    """Finite-difference tension of an spd-valued map on a chain: the
    weighted second difference with the Levi-Civita quadratic correction,

        tau_j = Wv * [w_n (h_p - h_j) - w_p (h_j - h_m)]/D^2
                - Wv^2 * hd h_j^{-1} hd,    hd = (h_p - h_m)/(2D)

    vanishing at O(D^2) on converged discrete-harmonic maps."""
    chain = _chain_neighbors(domain)
    if chain is None:
        raise UsageError("chain_tension requires a path or cycle domain")
    tf = ThetaField(domain, h_map, [], spacing, rep)
    out = [None] * domain.n
    for v in range(domain.n):
        jprev, jnext = chain[v]
        if jprev is None or jnext is None:
            continue
        ep, en = domain.edges[jprev], domain.edges[jnext]
        hj = h_map[v]
        hp = _lifted(tf, en)
        hm = _pull_prev(tf, ep, h_map[ep.u])
        wn, wp = en.weight, ep.weight
        Wv = 0.5 * (wn + wp)
        hd = (hp - hm) / (2 * spacing)
        lap = (wn * (hp - hj) - wp * (hj - hm)) / spacing ** 2
        out[v] = Wv * lap - Wv ** 2 * hd @ np.linalg.inv(hj) @ hd
    return out


def correspondence_residual(domain, h_map, spacing=None, rep=None):
    """Both sides of the correspondence on a converged solve output:
    the finite-difference tension and ||d_D^* theta||, plus the exact
    h*theta = -1/2 dh identity residual.  Norms are max Frobenius over
    interior vertices."""
    if spacing is None:
        spacing = (1.0 / len(domain.edges)) if not domain.boundary \
            else 1.0 / max(domain.n - 1, 1)
    tf = theta_field(domain, h_map, spacing, rep)
    div = covariant_divergence(tf)
    tau = chain_tension(domain, h_map, spacing, rep)
    div_norm = max(float(np.linalg.norm(d)) for d in div if d is not None)
    tau_norm = max(float(np.linalg.norm(t)) for t in tau if t is not None)
    return {
        "tension_residual": tau_norm,
        "divergence_norm": div_norm,
        "htheta_identity": tf.htheta_identity_residual(),
        "theta_trace": tf.trace_residual(),
        "theta_selfadjoint": tf.selfadjoint_residual(),
    }


# ---------------------------------------------------------------------------
# refinement study on twisted cycles
# ---------------------------------------------------------------------------

def twisted_cycle_study(g, Ns=(16, 32, 64), weight_profile=None, field="real",
                        tol=1e-10, max_sweeps=200000):
    """Solve the g-twisted cycle problem at several resolutions and
    measure how the correspondence residuals scale in 1/N.

    ``weight_profile``: smooth positive function on [0, 1) giving edge
    weights w_e = W((j + 1/2)/N); uniform cycles make the discrete
    correspondence exact (residuals at solver tolerance), so rate
    measurements should use a non-constant profile.

    Returns {"runs": {N: {...}}, "rates": {...}} with least-squares
    log-log slopes against 1/N.
    """
    g = np.asarray(g)
    n = g.shape[0]
    space = Spd(n, field)
    rep = Representation(space, {"A": space.make_isometry(g)})
    runs = {}
    for N in Ns:
        if weight_profile is None:
            metric_weights = None
        else:
            def metric_weights(pu, pv, N=N):
                # edge midpoint arc position on the unit circle
                am = math.atan2(pu[1] + pv[1], pu[0] + pv[0]) / (2 * math.pi) % 1.0
                return weight_profile(am)
        base = build_grid_domain("circle", N, metric_weights)
        dom = build_twisted_domain(base, rep, {"x": "A"})
        sol, trace = solve_equivariant(dom, rep, cfg=SolveConfig(
            tol=tol, max_sweeps=max_sweeps))
        res = correspondence_residual(dom, sol, spacing=1.0 / N, rep=rep)
        res["energy"] = trace.final_energy
        res["sweeps"] = len(trace.sweeps)
        runs[N] = res
    rates = {}
    if len(runs) >= 2:
        ns = np.array(sorted(runs))
        for key in ("tension_residual", "divergence_norm"):
            vals = np.array([runs[N][key] for N in ns])
            if (vals > 0).all():
                slope = np.polyfit(np.log(1.0 / ns), np.log(vals), 1)[0]
                rates[key] = float(slope)
            else:
                rates[key] = math.inf
    return {"runs": runs, "rates": rates}


# ---------------------------------------------------------------------------
# flat vs. Levi-Civita connection difference
# ---------------------------------------------------------------------------

def flat_lc_difference_residual(h, X, Y, step=1e-5):
    """Check (flat minus Levi-Civita) applied to a constant field Y along
    direction X equals -1/2 h [h^{-1}X, h^{-1}Y]:

    the flat derivative is finite-differenced through the trivialization
    Z -> h^{-1} Z along the matrix line h + tX.
    """
    h = np.asarray(h, dtype=complex)
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    hp = h + step * X
    hm = h - step * X
    flat = h @ ((np.linalg.inv(hp) @ Y - np.linalg.inv(hm) @ Y) / (2 * step))
    hinv = np.linalg.inv(h)
    lc = -0.5 * (X @ hinv @ Y + Y @ hinv @ X)
    predicted = -0.5 * h @ (hinv @ X @ hinv @ Y - hinv @ Y @ hinv @ X)
    return float(np.abs((flat - lc) - predicted).max())
