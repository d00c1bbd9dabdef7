"""Pointwise smooth-map operators and curvature identities.

Everything here evaluates at a single domain point via the chart's
analytic Jacobian plus central finite differences: the energy density,
the tension field (the harmonic-map equation's left side), the Bochner
identity for the energy density, the mixed-second-derivative tensor
whose vanishing characterizes pluriharmonic maps, and the Sampson/Siu
curvature-sign tests.

Complex-variable conventions for maps from C^m (flat Kahler domain):
real coordinates are interleaved (x_1, y_1, ..., x_m, y_m) with
z_a = x_a + i y_a, and d/dz = (d/dx - i d/dy)/2.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .charts import ChartMap, KahlerCurvature, MetricChart, fd_scalar_laplacian
from .errors import UsageError

HARMONIC_TOL = 1e-6


# ---------------------------------------------------------------------------
# first-order quantities
# ---------------------------------------------------------------------------

def energy_density(chart: ChartMap, metrics: MetricChart, x):
    """e(f) = (1/2) g^{ab} h_ij df^i_a df^j_b at x."""
    x = np.asarray(x, dtype=float)
    J = chart.jacobian(x)
    ginv = np.linalg.inv(metrics.domain_metric_at(x))
    h = np.asarray(metrics.target_metric(chart.value(x)), dtype=float)
    return 0.5 * float(np.einsum("ab,ia,jb,ij->", ginv, J, J, h))


def tension_field(chart: ChartMap, metrics: MetricChart, x, step=None):
    """tau(f)^k = g^{ab} (f^k_{ab} - Gamma^c_{ab}(dom) f^k_c
                          + Gamma^k_{ij}(tgt) f^i_a f^j_b)."""
    x = np.asarray(x, dtype=float)
    J = chart.jacobian(x)
    H = chart.hessian(x, step)
    ginv = np.linalg.inv(metrics.domain_metric_at(x))
    Gt = metrics.christoffels(chart.value(x))
    tau = np.einsum("ab,kab->k", ginv, H)
    tau += np.einsum("ab,kij,ia,jb->k", ginv, Gt, J, J)
    if metrics.domain_metric is not None:
        Gd = metrics.domain_christoffels(x)
        tau -= np.einsum("ab,cab,kc->k", ginv, Gd, J)
    return tau


def second_fundamental_form(chart, metrics, x, step=None):
    """(nabla df)^k_{ab} = f^k_{ab} - Gamma^c_{ab} f^k_c + Gamma^k_{ij} f^i_a f^j_b."""
    x = np.asarray(x, dtype=float)
    J = chart.jacobian(x)
    H = chart.hessian(x, step)
    Gt = metrics.christoffels(chart.value(x))
    nd = H + np.einsum("kij,ia,jb->kab", Gt, J, J)
    if metrics.domain_metric is not None:
        Gd = metrics.domain_christoffels(x)
        nd -= np.einsum("cab,kc->kab", Gd, J)
    return nd


# ---------------------------------------------------------------------------
# Bochner identity for the energy density
# ---------------------------------------------------------------------------

def weitzenbock_sides(chart, metrics, x, step=None, enforce_harmonic=True):
    """(LHS, RHS) of the Bochner identity for a harmonic map:

        Delta e(f) = |nabla df|^2 + <df(Ric(e_a)), df(e_a)>
                     - sum_{a,b} <R(df e_a, df e_b) df e_b, df e_a>

    over a g-orthonormal frame (e_a).  The left side is the
    Laplace-Beltrami of the energy density, finite-differenced.
    """
    x = np.asarray(x, dtype=float)
    step = step or chart.step
    if enforce_harmonic:
        tau = tension_field(chart, metrics, x)
        h = np.asarray(metrics.target_metric(chart.value(x)), dtype=float)
        tnorm = math.sqrt(max(float(tau @ h @ tau), 0.0))
        if tnorm > HARMONIC_TOL:
            raise UsageError(
                f"Bochner identity requires a harmonic map (|tau| = {tnorm:.2e})")

    e_of = lambda xx: energy_density(chart, metrics, xx)
    if metrics.domain_metric is None:
        lhs = fd_scalar_laplacian(e_of, x, step)
    else:
        lhs = _laplace_beltrami(e_of, metrics, x, step)

    J = chart.jacobian(x)
    y = chart.value(x)
    h = np.asarray(metrics.target_metric(y), dtype=float)
    g = metrics.domain_metric_at(x)
    frame = _orthonormal_frame(g)
    df = J @ frame  # columns: df(e_a)
    nd = second_fundamental_form(chart, metrics, x, step)
    ginv = np.linalg.inv(g)
    rhs = float(np.einsum("kab,lcd,ac,bd,kl->", nd, nd, ginv, ginv, h))
    ric = metrics.domain_ric(x)
    if ric.any():
        # <df(Ric(e_a)), df(e_a)>; Ric given with lower indices
        ric_up = ginv @ ric @ ginv
        rhs += float(np.einsum("ab,ia,jb,ij->", ric_up, J, J, h))
    R = metrics.curvature(y)
    rhs -= float(np.einsum("ijkl,ia,jb,ka,lb->", R, df, df, df, df))
    return float(lhs), rhs


def weitzenbock_residual(chart, metrics, x, step=None, richardson=False):
    """|LHS - RHS| of the Bochner identity; O(step^2) for analytic charts.

    With ``richardson`` both sides are extrapolated from steps h and h/2.
    """
    step = step or chart.step
    if not richardson:
        lhs, rhs = weitzenbock_sides(chart, metrics, x, step)
        return abs(lhs - rhs)
    l1, r1 = weitzenbock_sides(chart, metrics, x, step)
    l2, r2 = weitzenbock_sides(chart, metrics, x, step / 2)
    return abs((4 * l2 - l1) / 3 - (4 * r2 - r1) / 3)


def _laplace_beltrami(f, metrics, x, step):
    m = len(x)

    def flux(xx):
        g = metrics.domain_metric_at(xx)
        gin = np.linalg.inv(g)
        sg = math.sqrt(np.linalg.det(g))
        grad = np.array([(f(xx + _e(m, t, step)) - f(xx - _e(m, t, step))) / (2 * step)
                         for t in range(m)])
        return sg * gin @ grad

    div = 0.0
    for s in range(m):
        div += (flux(x + _e(m, s, step))[s] - flux(x - _e(m, s, step))[s]) / (2 * step)
    g = metrics.domain_metric_at(x)
    return div / math.sqrt(np.linalg.det(g))


def _e(m, i, step):
    v = np.zeros(m)
    v[i] = step
    return v


def _orthonormal_frame(g):
    w, v = np.linalg.eigh(g)
    return v @ np.diag(w ** -0.5) @ v.T


# ---------------------------------------------------------------------------
# complex-variable operators on flat Kahler domains
# ---------------------------------------------------------------------------

def _check_complex_domain(chart):
    if chart.m % 2:
        raise UsageError("complex operators need an even-dimensional domain")
    return chart.m // 2


def _dz_rows(J, m):
    """d f / d z^a as (m, d) complex from a real (d, 2m) Jacobian."""
    return np.stack([(J[:, 2 * a] - 1j * J[:, 2 * a + 1]) / 2 for a in range(m)])


def _dzbar_rows(J, m):
    return np.stack([(J[:, 2 * a] + 1j * J[:, 2 * a + 1]) / 2 for a in range(m)])


def pluriharmonic_tensor(chart, metrics, x, step=None):
    """phi^k_{a bbar} = d^2 f^k / dz^a dzbar^b + Gamma^k_{ij} f^i_{z^a} f^j_{zbar^b},
    returned with shape (m, m, d) indexed [a][b][k].

    Its metric trace recovers the tension field: tau = 4 sum_a phi_{a abar}
    on a flat Kahler domain; the map is pluriharmonic iff phi vanishes.
    """
    m = _check_complex_domain(chart)
    if metrics.domain_metric is not None:
        raise UsageError("pluriharmonic tensor implemented for flat domains")
    x = np.asarray(x, dtype=float)
    J = chart.jacobian(x)
    H = chart.hessian(x, step)
    dz = _dz_rows(J, m)
    dzbar = _dzbar_rows(J, m)
    Gt = metrics.christoffels(chart.value(x))
    phi = np.empty((m, m, chart.d), dtype=complex)
    for a in range(m):
        for b in range(m):
            xa, ya = 2 * a, 2 * a + 1
            xb, yb = 2 * b, 2 * b + 1
            dd = 0.25 * (H[:, xa, xb] + H[:, ya, yb]
                         + 1j * (H[:, xa, yb] - H[:, ya, xb]))
            corr = np.einsum("kij,i,j->k", Gt, dz[a], dzbar[b])
            phi[a, b] = dd + corr
    return phi


def pluriharmonic_trace_residual(chart, metrics, x, step=None):
    """|4 trace(phi) - tau| -- the trace identity linking pluriharmonicity
    and harmonicity; should vanish to finite-difference accuracy."""
    phi = pluriharmonic_tensor(chart, metrics, x, step)
    tau = tension_field(chart, metrics, x, step)
    tr = 4.0 * sum(phi[a, a] for a in range(phi.shape[0]))
    return float(np.abs(tr - tau).max())


def sampson_Q0(metrics: MetricChart, y, dz, dzbar):
    """Q0 = -2 sum_{a,b} R_{ijkl} f^i_{z^a} f^k_{zbar^b} f^j_{z^b} f^l_{zbar^a}
    on a flat domain; nonnegative whenever the target is Hermitian
    negative and dzbar = conj(dz) (true for maps with real components).

    ``dz``/``dzbar`` are (m, d) complex arrays of holomorphic and
    antiholomorphic first derivatives.  The contraction uses the index
    order in which noncompact symmetric targets are Hermitian negative;
    relative to the ``MetricChart.curvature`` convention (sectional
    curvature = R_1212 on orthonormal pairs) this is the (k,l) pair swap,
    i.e. an overall sign.
    """
    dz = np.asarray(dz, dtype=complex)
    dzbar = np.asarray(dzbar, dtype=complex)
    R = metrics.curvature(y)
    q = np.einsum("ijkl,ai,bk,bj,al->", R, dz, dzbar, dz, dzbar)
    return float((2.0 * q).real)


def hermitian_negativity_form(R, A):
    """R_{ijkl} A^{i lbar} A^{j kbar} for Hermitian A, in the index order
    for which Hermitian-negative targets give values <= 0 (the (k,l) pair
    swap, hence minus, of the ``MetricChart.curvature`` convention)."""
    return float(-np.einsum("ijkl,il,jk->", R, A, A).real)


def hermitian_negativity_test(R, samples, rng, tol=1e-10):
    """Evaluate the Hermitian-negativity form on random PSD matrices
    A = G G* (complex Gaussian G).  Targets that are Hermitian negative
    give values <= 0; returns the worst value and violation count."""
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    worst = -math.inf
    violations = 0
    for _ in range(samples):
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        A = G @ G.conj().T
        val = hermitian_negativity_form(R, A)
        worst = max(worst, val)
        if val > tol:
            violations += 1
    return {"samples": int(samples), "worst": worst, "violations": violations}


def strong_negativity_form(kc: KahlerCurvature, A, B, C, D):
    """Siu's quadratic form R_{i jbar k lbar} sigma^{il} conj(sigma^{lk})
    with sigma^{ij} = A^i conj(B^j) - C^i conj(D^j)."""
    sigma = np.outer(A, np.conj(B)) - np.outer(C, np.conj(D))
    val = np.einsum("ijkl,ij,lk->", kc.components, sigma, np.conj(sigma))
    return float(val.real)


def strong_negativity_test(kc: KahlerCurvature, samples, rng, tol=1e-10):
    """Sign statistics of the Siu form over random complex (A, B, C, D)
    with the degenerate sigma = 0 draws skipped."""
    m = kc.m
    positives = negatives = 0
    worst = -math.inf
    best = math.inf
    n = 0
    while n < samples:
        A, B, C, D = (rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(4))
        sigma = np.outer(A, np.conj(B)) - np.outer(C, np.conj(D))
        if np.abs(sigma).max() < 1e-12:
            continue
        val = strong_negativity_form(kc, A, B, C, D)
        worst = max(worst, val)
        best = min(best, val)
        if val > tol:
            positives += 1
        elif val < -tol:
            negatives += 1
        n += 1
    return {"samples": int(samples), "max": worst, "min": best,
            "positives": positives, "negatives": negatives}


# ---------------------------------------------------------------------------
# Sampson's Bochner identity, complex dimension 2
# ---------------------------------------------------------------------------

def _perm_sign(tup):
    if len(set(tup)) != len(tup):
        return 0
    sign = 1
    lst = list(tup)
    for i in range(len(lst)):
        for j in range(i + 1, len(lst)):
            if lst[i] > lst[j]:
                sign = -sign
    return sign


def _pairing_matrix(chart, metrics, x):
    """psi_{abar b} = h_ij dbar_a f^i conj(dbar_b f^j): the (1,1)-pairing
    of the antiholomorphic derivative with itself."""
    m = chart.m // 2
    J = chart.jacobian(x)
    h = np.asarray(metrics.target_metric(chart.value(x)), dtype=float)
    db = _dzbar_rows(J, m)
    return np.array([[db[a] @ h @ np.conj(db[b]) for b in range(m)] for a in range(m)])


def sampson_identity_sides(chart, metrics, x, step=1e-3, enforce_harmonic=True):
    """(LHS, RHS) of Sampson's Bochner identity on a flat C^2 domain:

        d'd'' {d''f, d''f}  =  4 (|d'_E d''f|^2 + Q0) vol

    both expressed as multiples of the volume form omega^2/2!.  The left
    side mixed-differentiates the scalar pairing psi; the right side uses
    the pluriharmonic tensor and the curvature contraction Q0.
    """
    m = _check_complex_domain(chart)
    if m != 2:
        raise UsageError("identity implemented for complex dimension 2")
    if metrics.domain_metric is not None:
        raise UsageError("identity implemented for flat domains")
    x = np.asarray(x, dtype=float)
    if enforce_harmonic:
        tau = tension_field(chart, metrics, x)
        h = np.asarray(metrics.target_metric(chart.value(x)), dtype=float)
        tnorm = math.sqrt(max(float(tau @ h @ tau), 0.0))
        if tnorm > HARMONIC_TOL:
            raise UsageError(
                f"Sampson identity requires a harmonic map (|tau| = {tnorm:.2e})")

    # basis slots on C^2: dz1 -> 0, dzbar1 -> 1, dz2 -> 2, dzbar2 -> 3;
    # vol = dz1 ^ dzbar1 ^ dz2 ^ dzbar2 = -4 * omega^2/2!
    def psi_entry(xx, a, b):
        return _pairing_matrix(chart, metrics, xx)[a, b]

    coeff = 0.0 + 0j
    for dd, gg, aa, bb in product(range(m), repeat=4):
        sign = _perm_sign((2 * dd, 2 * gg + 1, 2 * aa + 1, 2 * bb))
        if sign == 0:
            continue
        coeff += sign * _mixed_dz_dzbar(lambda xx: psi_entry(xx, aa, bb),
                                        x, dd, gg, step)
    lhs = float((-4.0 * coeff).real)

    phi = pluriharmonic_tensor(chart, metrics, x)
    h = np.asarray(metrics.target_metric(chart.value(x)), dtype=float)
    nrm2 = 0.0
    for a in range(m):
        for b in range(m):
            nrm2 += float(np.real(phi[a, b] @ h @ np.conj(phi[a, b])))
    J = chart.jacobian(x)
    q0 = sampson_Q0(metrics, chart.value(x), _dz_rows(J, m), _dzbar_rows(J, m))
    rhs = 4.0 * (nrm2 + q0)
    return lhs, rhs


def sampson_identity_residual(chart, metrics, x, step=1e-3):
    lhs, rhs = sampson_identity_sides(chart, metrics, x, step)
    return abs(lhs - rhs)


def _mixed_dz_dzbar(fun, x, d_idx, g_idx, step):
    """d/dz^d d/dzbar^g of a scalar complex function of interleaved real
    coordinates, via single-level real mixed stencils."""
    def dd_real(i, j):
        if i == j:
            e = _e(len(x), i, step)
            return (fun(x + e) - 2 * fun(x) + fun(x - e)) / step ** 2
        ei = _e(len(x), i, step)
        ej = _e(len(x), j, step)
        return (fun(x + ei + ej) - fun(x + ei - ej)
                - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * step ** 2)

    xd, yd = 2 * d_idx, 2 * d_idx + 1
    xg, yg = 2 * g_idx, 2 * g_idx + 1
    return 0.25 * (dd_real(xd, xg) + 1j * dd_real(xd, yg)
                   - 1j * dd_real(yd, xg) + dd_real(yd, yg))
