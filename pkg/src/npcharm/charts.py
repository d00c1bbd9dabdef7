"""Analytic charts, metric data, and finite-difference calculus.

``ChartMap`` wraps a map f: R^m -> R^d given as a callable, optionally
with an analytic Jacobian (strongly recommended for the third-order
pointwise identities: it removes one level of finite differencing).

``MetricChart`` bundles the geometric data the pointwise operators need:
the target metric h_ij with its Christoffel symbols and curvature tensor,
and optionally a non-flat domain metric g_ab with its Ricci tensor.
Anything not supplied analytically is produced by central finite
differences (Levi-Civita formula for Gamma, the standard coordinate
formula for R^m_jkl).

Curvature convention, used consistently everywhere:

    R^m_{jkl} = d_k Gamma^m_{lj} - d_l Gamma^m_{kj}
                + Gamma^m_{kp} Gamma^p_{lj} - Gamma^m_{lp} Gamma^p_{kj}
    R_{ijkl}  = h_{im} R^m_{jkl}

so that the sectional curvature of the plane spanned by orthonormal
e_1, e_2 is R_{1212} and the upper half-plane has R_{1212} = -1.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, UsageError


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def fd_jacobian(f, x, step):
    x = np.asarray(x, dtype=float)
    cols = []
    for a in range(len(x)):
        e = np.zeros_like(x)
        e[a] = step
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)


def fd_hessian(f, x, step):
    """All second partials of vector-valued f: shape (d, m, m)."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    f0 = np.asarray(f(x))
    out = np.empty(f0.shape + (m, m))
    for a in range(m):
        ea = np.zeros(m)
        ea[a] = step
        out[..., a, a] = (np.asarray(f(x + ea)) - 2 * f0 + np.asarray(f(x - ea))) / step ** 2
        for b in range(a + 1, m):
            eb = np.zeros(m)
            eb[b] = step
            v = (np.asarray(f(x + ea + eb)) - np.asarray(f(x + ea - eb))
                 - np.asarray(f(x - ea + eb)) + np.asarray(f(x - ea - eb))) / (4 * step ** 2)
            out[..., a, b] = v
            out[..., b, a] = v
    return out


def fd_scalar_laplacian(f, x, step):
    x = np.asarray(x, dtype=float)
    f0 = f(x)
    acc = 0.0
    for a in range(len(x)):
        e = np.zeros_like(x)
        e[a] = step
        acc += (f(x + e) - 2 * f0 + f(x - e)) / step ** 2
    return acc


class ChartMap:
    """Map f: R^m -> R^d with derivative access up to the orders the
    pointwise identities need.  ``jacobian`` may be analytic; everything
    else is finite-differenced with the chart's step."""

    def __init__(self, f, m, d, jacobian=None, step=1e-4, name=""):
        self.f = f
        self.m = int(m)
        self.d = int(d)
        self._jac = jacobian
        self.step = float(step)
        self.name = name

    def value(self, x):
        return np.asarray(self.f(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x, step=None):
        if self._jac is not None:
            return np.asarray(self._jac(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.f, x, step or self.step)

    def hessian(self, x, step=None):
        return fd_hessian(self.f, x, step or self.step)

    def validate(self, points, tol=1e-6):
        """Cross-check the analytic Jacobian against central differences."""
        if self._jac is None:
            return 0.0
        worst = 0.0
        for x in points:
            diff = np.abs(self.jacobian(x) - fd_jacobian(self.f, x, self.step)).max()
            worst = max(worst, float(diff))
        if worst > tol:
            raise DomainError(f"analytic jacobian disagrees with finite differences "
                              f"({worst:.2e} > {tol:.0e})")
        return worst


# ---------------------------------------------------------------------------
# metric charts
# ---------------------------------------------------------------------------

def levi_civita_from_metric(metric, y, step):
    d = len(np.asarray(y))
    h = np.asarray(metric(y), dtype=float)
    hinv = np.linalg.inv(h)
    dh = np.empty((d, d, d))  # dh[l] = d h / d y^l
    for l in range(d):
        e = np.zeros(d)
        e[l] = step
        dh[l] = (np.asarray(metric(y + e)) - np.asarray(metric(y - e))) / (2 * step)
    gamma = np.empty((d, d, d))  # gamma[k][i][j]
    for k in range(d):
        for i in range(d):
            for j in range(d):
                gamma[k, i, j] = 0.5 * sum(
                    hinv[k, l] * (dh[i][j, l] + dh[j][i, l] - dh[l][i, j])
                    for l in range(d))
    return gamma


def curvature_from_christoffels(christoffels, metric, y, step):
    y = np.asarray(y, dtype=float)
    d = len(y)
    dG = np.empty((d, d, d, d))
    for a in range(d):
        e = np.zeros(d)
        e[a] = step
        dG[a] = (np.asarray(christoffels(y + e)) - np.asarray(christoffels(y - e))) / (2 * step)
    G = np.asarray(christoffels(y))
    Rup = np.empty((d, d, d, d))
    for m_ in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    Rup[m_, j, k, l] = (
                        dG[k][m_, l, j] - dG[l][m_, k, j]
                        + sum(G[m_, k, p] * G[p, l, j] - G[m_, l, p] * G[p, k, j]
                              for p in range(d)))
    h = np.asarray(metric(y), dtype=float)
    return np.einsum("im,mjkl->ijkl", h, Rup)


def constant_curvature_tensor(metric, y, kappa):
    h = np.asarray(metric(y), dtype=float)
    return kappa * (np.einsum("lj,ki->ijkl", h, h) - np.einsum("kj,li->ijkl", h, h))


class MetricChart:
    """Target metric h_ij (+ Christoffels, curvature) and optional domain
    metric g_ab with Ricci tensor.  A None domain metric means flat."""

    def __init__(self, target_dim, target_metric, christoffels=None, curvature=None,
                 domain_metric=None, domain_ric=None, fd_step=1e-5, name=""):
        self.d = int(target_dim)
        self.target_metric = target_metric
        self._christoffels = christoffels
        self._curvature = curvature
        self.domain_metric = domain_metric
        self._domain_ric = domain_ric
        self.fd_step = float(fd_step)
        self.name = name

    def christoffels(self, y):
        if self._christoffels is not None:
            return np.asarray(self._christoffels(y), dtype=float)
        return levi_civita_from_metric(self.target_metric, np.asarray(y, float), self.fd_step)

    def curvature(self, y):
        if self._curvature is not None:
            return np.asarray(self._curvature(y), dtype=float)
        return curvature_from_christoffels(self.christoffels, self.target_metric,
                                           y, max(self.fd_step, 1e-5))

    def domain_christoffels(self, x):
        if self.domain_metric is None:
            m = len(np.asarray(x))
            return np.zeros((m, m, m))
        return levi_civita_from_metric(self.domain_metric, np.asarray(x, float), self.fd_step)

    def domain_ric(self, x):
        if self._domain_ric is not None:
            return np.asarray(self._domain_ric(x), dtype=float)
        m = len(np.asarray(x))
        return np.zeros((m, m))

    def domain_metric_at(self, x):
        if self.domain_metric is None:
            m = len(np.asarray(x))
            return np.eye(m)
        g = np.asarray(self.domain_metric(x), dtype=float)
        if np.linalg.det(g) <= 0:
            raise DomainError("singular domain metric")
        return g

    # validation --------------------------------------------------------------
    def validate(self, points, tol_gamma=1e-6, tol_curv=1e-8):
        """Metric symmetry, Levi-Civita consistency of supplied Christoffels,
        and curvature tensor symmetries, sampled at the given points."""
        worst_gamma = 0.0
        worst_sym = 0.0
        for y in points:
            h = np.asarray(self.target_metric(y), dtype=float)
            if np.abs(h - h.T).max() > 1e-12:
                raise DomainError("target metric is not symmetric")
            if self._christoffels is not None:
                fd = levi_civita_from_metric(self.target_metric, np.asarray(y, float),
                                             self.fd_step)
                worst_gamma = max(worst_gamma,
                                  float(np.abs(fd - self.christoffels(y)).max()))
            R = self.curvature(y)
            worst_sym = max(
                worst_sym,
                float(np.abs(R + R.transpose(1, 0, 2, 3)).max()),
                float(np.abs(R + R.transpose(0, 1, 3, 2)).max()),
                float(np.abs(R - R.transpose(2, 3, 0, 1)).max()),
            )
        if worst_gamma > tol_gamma:
            raise DomainError(f"Christoffels inconsistent with metric "
                              f"({worst_gamma:.2e} > {tol_gamma:.0e})")
        if worst_sym > tol_curv:
            raise DomainError(f"curvature symmetries violated ({worst_sym:.2e})")
        return {"gamma_consistency": worst_gamma, "curvature_symmetry": worst_sym}


def _conformal_chart(dim, phi_grad_fn, scale_fn, kappa, name):
    """Metric e^{2 phi} * I with Gamma^k_ij = d_ik phi_j + d_jk phi_i - d_ij phi_k."""

    def metric(y):
        return scale_fn(np.asarray(y, float)) * np.eye(dim)

    def christoffels(y):
        y = np.asarray(y, float)
        p = phi_grad_fn(y)
        G = np.zeros((dim, dim, dim))
        for k in range(dim):
            for i in range(dim):
                for j in range(dim):
                    G[k, i, j] = ((k == i) * p[j] + (k == j) * p[i]
                                  - (i == j) * p[k])
        return G

    curv = None
    if kappa is not None:
        curv = lambda y: constant_curvature_tensor(metric, y, kappa)
    return MetricChart(dim, metric, christoffels, curv, name=name)


def target_metric_chart(name) -> MetricChart:
    """Built-in target geometries by name.

    flat:D       -- R^D
    hyperbolic   -- upper half-plane, curvature -1
    sphere       -- round 2-sphere, stereographic coordinates, curvature +1
    spd2         -- SL(2,R)/SO(2) in half-plane coordinates with the
                    n/2-normalized matrix metric (conformal factor 2/y^2,
                    curvature -1/2)
    """
    name = name.strip().lower()
    if name.startswith("flat:"):
        dim = int(name.split(":", 1)[1])
        return MetricChart(dim, lambda y: np.eye(dim),
                           lambda y: np.zeros((dim, dim, dim)),
                           lambda y: np.zeros((dim, dim, dim, dim)), name=name)
    if name == "hyperbolic":
        return _conformal_chart(
            2, lambda y: np.array([0.0, -1.0 / y[1]]),
            lambda y: 1.0 / y[1] ** 2, -1.0, "hyperbolic")
    if name == "sphere":
        # stereographic: 4/(1+|x|^2)^2 * I
        return _conformal_chart(
            2, lambda y: -2.0 * y / (1.0 + y @ y),
            lambda y: 4.0 / (1.0 + y @ y) ** 2, +1.0, "sphere")
    if name == "spd2":
        # determinant-one symmetric 2x2 matrices in half-plane coordinates
        # h(x, y) = [[1, -x], [-x, x^2 + y^2]] / y; pullback of the matrix
        # metric is 2 (dx^2 + dy^2)/y^2
        return _conformal_chart(
            2, lambda y: np.array([0.0, -1.0 / y[1]]),
            lambda y: 2.0 / y[1] ** 2, -0.5, "spd2")
    raise UsageError(f"unknown target metric chart {name!r}")


# ---------------------------------------------------------------------------
# Kahler targets
# ---------------------------------------------------------------------------

class KahlerCurvature:
    """Kahler curvature R_{i jbar k lbar} at a point, from the Hermitian
    metric h_{i jbar}(w) of a complex-m-dimensional target:

        R_{i jbar k lbar} = - d^2 h_{i jbar} / dw^k dwbar^l
                            + h^{p qbar} (d h_{i qbar}/dw^k)(d h_{p jbar}/dwbar^l)
    """

    def __init__(self, m, components):
        self.m = int(m)
        self.components = np.asarray(components, dtype=complex)
        if self.components.shape != (m, m, m, m):
            raise UsageError("curvature components must be (m, m, m, m)")

    @classmethod
    def from_metric(cls, m, metric, w, step=1e-4):
        """metric(w: complex vector) -> (m, m) Hermitian matrix.

        Complex derivatives are assembled from single-level real central
        stencils on the 2m real coordinates, so the purely imaginary
        stencil noise of nested differencing never appears.
        """
        w = np.asarray(w, dtype=complex)

        def met_real(xr):
            return np.asarray(metric(xr[:m] + 1j * xr[m:]), dtype=complex)

        x0 = np.concatenate([w.real, w.imag])
        d1 = np.empty((2 * m,) + (m, m), dtype=complex)  # real partials of h
        for a in range(2 * m):
            e = np.zeros(2 * m)
            e[a] = step
            d1[a] = (met_real(x0 + e) - met_real(x0 - e)) / (2 * step)
        d2 = np.empty((2 * m, 2 * m) + (m, m), dtype=complex)
        h0 = met_real(x0)
        for a in range(2 * m):
            ea = np.zeros(2 * m)
            ea[a] = step
            d2[a, a] = (met_real(x0 + ea) - 2 * h0 + met_real(x0 - ea)) / step ** 2
            for b in range(a + 1, 2 * m):
                eb = np.zeros(2 * m)
                eb[b] = step
                v = (met_real(x0 + ea + eb) - met_real(x0 + ea - eb)
                     - met_real(x0 - ea + eb) + met_real(x0 - ea - eb)) / (4 * step ** 2)
                d2[a, b] = v
                d2[b, a] = v

        def dw(k):
            return 0.5 * (d1[k] - 1j * d1[m + k])

        def dwbar(k):
            return 0.5 * (d1[k] + 1j * d1[m + k])

        def dw_dwbar(k, l):
            return 0.25 * (d2[k, l] + d2[m + k, m + l]
                           + 1j * (d2[k, m + l] - d2[m + k, l]))

        hinv = np.linalg.inv(h0)
        dh_w = [dw(k) for k in range(m)]
        dh_wbar = [dwbar(k) for k in range(m)]
        R = np.empty((m, m, m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    for l in range(m):
                        corr = 0.0 + 0j
                        for p in range(m):
                            for q in range(m):
                                corr += hinv[p, q] * dh_w[i][k, q] * dh_wbar[j][p, l]
                        R[i, j, k, l] = -dw_dwbar(k, l)[i, j] + corr
        return cls(m, R)

    def validate(self, tol=1e-10):
        """Hermitian symmetry R_{i jbar k lbar} = conj(R_{j ibar l kbar})."""
        R = self.components
        diff = np.abs(R - np.conj(R.transpose(1, 0, 3, 2))).max()
        if diff > tol:
            raise DomainError(f"Kahler curvature lacks Hermitian symmetry ({diff:.2e})")
        return float(diff)


def kahler_metric(name):
    """Built-in 1-dimensional Kahler metrics: poincare-disk (curvature < 0),
    fubini-study (curvature > 0), flat-line."""
    name = name.strip().lower()
    if name == "poincare-disk":
        return 1, lambda w: np.array([[2.0 / (1.0 - abs(w[0]) ** 2) ** 2]])
    if name == "fubini-study":
        return 1, lambda w: np.array([[2.0 / (1.0 + abs(w[0]) ** 2) ** 2]])
    if name == "flat-line":
        return 1, lambda w: np.array([[1.0]])
    raise UsageError(f"unknown Kahler metric {name!r}")


# ---------------------------------------------------------------------------
# built-in charts (maps) for the verification CLI and tests
# ---------------------------------------------------------------------------

def _identity_half_plane():
    return ChartMap(lambda x: np.array([x[0], x[1]]), 2, 2,
                    jacobian=lambda x: np.eye(2), name="identity")


def _stretch2y():
    return ChartMap(lambda x: np.array([x[0], 2.0 * x[1]]), 2, 2,
                    jacobian=lambda x: np.diag([1.0, 2.0]), name="stretch2y")


def _geodesic_product(a=0.7, b=-0.4):
    def f(x):
        return np.array([0.0, math.exp(a * x[0] + b * x[2])])

    def jac(x):
        e = math.exp(a * x[0] + b * x[2])
        return np.array([[0.0, 0.0, 0.0, 0.0], [a * e, 0.0, b * e, 0.0]])

    return ChartMap(f, 4, 2, jacobian=jac, name="geodesic-product")


def _re_z1zbar2():
    # f1 = Re(z1 * conj(z2)) = x1 x2 + y1 y2: harmonic, not pluriharmonic
    def f(x):
        return np.array([x[0] * x[2] + x[1] * x[3], 0.0])

    def jac(x):
        return np.array([[x[2], x[3], x[0], x[1]], [0.0, 0.0, 0.0, 0.0]])

    return ChartMap(f, 4, 2, jacobian=jac, name="re-z1zbar2")


def _z1zbar2():
    # z1 * conj(z2) into flat C = R^2
    def f(x):
        z = complex(x[0], x[1]) * complex(x[2], -x[3])
        return np.array([z.real, z.imag])

    def jac(x):
        x1, y1, x2, y2 = x
        return np.array([[x2, y2, x1, y1], [-y2, x2, y1, -x1]])

    return ChartMap(f, 4, 2, jacobian=jac, name="z1zbar2")


def _holomorphic_sq():
    def f(x):
        z = complex(x[0], x[1]) ** 2
        return np.array([z.real, z.imag])

    def jac(x):
        return 2.0 * np.array([[x[0], -x[1]], [x[1], x[0]]])

    return ChartMap(f, 2, 2, jacobian=jac, name="holomorphic-sq")


_CHARTS = {
    "identity": (_identity_half_plane, "hyperbolic"),
    "stretch2y": (_stretch2y, "hyperbolic"),
    "geodesic-product": (_geodesic_product, "hyperbolic"),
    "re-z1zbar2": (_re_z1zbar2, "flat:2"),
    "z1zbar2": (_z1zbar2, "flat:2"),
    "holomorphic-sq": (_holomorphic_sq, "flat:2"),
}


def chart_by_name(name):
    """(ChartMap, MetricChart) pair for a built-in chart name."""
    if name not in _CHARTS:
        raise UsageError(f"unknown chart {name!r}; available: {sorted(_CHARTS)}")
    mk, metric_name = _CHARTS[name]
    return mk(), target_metric_chart(metric_name)


def chart_sample_points(chart, n, rng):
    """Sample points in a window where the built-in charts are smooth and
    hyperbolic targets stay in the upper half-plane."""
    if chart.m == 2:
        x = rng.uniform(-1.0, 1.0, size=n)
        y = rng.uniform(0.5, 2.5, size=n)
        return np.stack([x, y], axis=1)
    return rng.uniform(-0.8, 0.8, size=(n, chart.m))
