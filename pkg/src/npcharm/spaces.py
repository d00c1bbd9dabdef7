"""Non-positively curved target spaces.

Four kinds are provided:

* ``Euclidean(dim)`` -- flat R^d, points are float vectors;
* ``HyperbolicPlane()`` -- upper half-plane with metric (dx^2+dy^2)/y^2,
  points are pairs (x, y), y > 0;
* ``Spd(n, field)`` -- self-adjoint positive-definite matrices of
  determinant one with the metric g(X, Y) = (n/2) trace(h^-1 X h^-1 Y).
  Note the n/2 normalization: distances are sqrt(n/2) times the bare
  affine-invariant log-Frobenius distance most references use.
* ``Pod(k)`` -- k rays glued at the origin, points are (ray, radius)
  with unit-speed rays; (r, 0) is canonicalized to ray 0.

Every space implements distance / interpolate / log_map / exp_map (pod
has no smooth tangent calculus and raises), isometry application, random
samplers, and JSON point (de)serialization.  The triangle and
quadrilateral comparison residuals live here as free functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from ._kernels import kernels

DET_TOL = 1e-10


# ---------------------------------------------------------------------------
# isometries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RigidMotion:
    """x -> rot @ x + shift with rot orthogonal."""

    rot: np.ndarray
    shift: np.ndarray

    def apply(self, p):
        return self.rot @ p + self.shift

    def compose(self, other):
        return RigidMotion(self.rot @ other.rot, self.rot @ other.shift + self.shift)

    def inverse(self):
        rt = self.rot.T
        return RigidMotion(rt, -(rt @ self.shift))


@dataclass(frozen=True)
class MobiusMap:
    """z -> (az + b)/(cz + d) with real [[a, b], [c, d]], det = 1."""

    mat: np.ndarray

    def apply(self, p):
        a, b = self.mat[0]
        c, d = self.mat[1]
        x, y = p
        nr, ni = a * x + b, a * y
        dr, di = c * x + d, c * y
        den = dr * dr + di * di
        return np.array([(nr * dr + ni * di) / den, (ni * dr - nr * di) / den])

    def compose(self, other):
        return MobiusMap(self.mat @ other.mat)

    def inverse(self):
        a, b = self.mat[0]
        c, d = self.mat[1]
        return MobiusMap(np.array([[d, -b], [-c, a]]))


@dataclass(frozen=True)
class SLAction:
    """h -> g^{-*} h g^{-1} for g in SL(n)."""

    mat: np.ndarray

    def apply(self, p):
        gi = np.linalg.inv(self.mat)
        return gi.conj().T @ p @ gi

    def compose(self, other):
        return SLAction(self.mat @ other.mat)

    def inverse(self):
        return SLAction(np.linalg.inv(self.mat))


@dataclass(frozen=True)
class RayPermutation:
    perm: tuple

    def apply(self, p):
        ray, radius = p
        return PodPoint(self.perm[ray], radius)

    def compose(self, other):
        return RayPermutation(tuple(self.perm[other.perm[i]] for i in range(len(self.perm))))

    def inverse(self):
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return RayPermutation(tuple(inv))


@dataclass(frozen=True)
class PodPoint:
    ray: int
    radius: float

    def __iter__(self):
        return iter((self.ray, self.radius))


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

class NpcSpace:
    kind = "abstract"

    def tangent_norm(self, base, v):
        raise NotImplementedError

    def points_equal(self, p, q, tol=1e-12):
        return self.distance(p, q) <= tol

    def check_isometry(self, iso):
        if not isinstance(iso, self._iso_type):
            raise UsageError(f"{self.kind} expects {self._iso_type.__name__} isometries")

    def apply_isometry(self, iso, p):
        self.check_isometry(iso)
        return iso.apply(self.validate_point(p))

    # JSON payload round trip -------------------------------------------------
    def point_to_json(self, p):
        return {"space": self.spec_string(), "payload": self._payload(p)}

    def point_from_json(self, obj):
        if obj.get("space") != self.spec_string():
            raise UsageError(
                f"point tagged {obj.get('space')!r} used with space {self.spec_string()!r}")
        return self._from_payload(obj["payload"])

    def __eq__(self, other):
        return isinstance(other, NpcSpace) and self.spec_string() == other.spec_string()

    def __hash__(self):
        return hash(self.spec_string())

    def __repr__(self):
        return f"NpcSpace({self.spec_string()!r})"


class Euclidean(NpcSpace):
    kind = "euclidean"
    _iso_type = RigidMotion

    def __init__(self, dim):
        if dim < 1:
            raise UsageError("euclidean dim must be >= 1")
        self.dim = int(dim)

    def spec_string(self):
        return f"euc:{self.dim}"

    def validate_point(self, p):
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != (self.dim,):
            raise UsageError(f"expected vector of length {self.dim}")
        return p

    def distance(self, p, q):
        return float(np.linalg.norm(self.validate_point(q) - self.validate_point(p)))

    def interpolate(self, p, q, t):
        _check_t(t)
        return (1 - t) * self.validate_point(p) + t * self.validate_point(q)

    def log_map(self, base, p):
        return self.validate_point(p) - self.validate_point(base)

    def exp_map(self, base, v):
        return self.validate_point(base) + np.asarray(v, dtype=float)

    def tangent_norm(self, base, v):
        return float(np.linalg.norm(v))

    def identity_isometry(self):
        return RigidMotion(np.eye(self.dim), np.zeros(self.dim))

    def random_point(self, rng, scale=1.0):
        return rng.normal(scale=scale, size=self.dim)

    def random_isometry(self, rng, scale=1.0):
        q, _ = np.linalg.qr(rng.normal(size=(self.dim, self.dim)))
        return RigidMotion(q, rng.normal(scale=scale, size=self.dim))

    def batch_random(self, rng, m, scale=1.0):
        return rng.normal(scale=scale, size=(m, self.dim))

    def batch_distance(self, P, Q):
        return np.linalg.norm(Q - P, axis=-1)

    def batch_interpolate(self, P, Q, t):
        t = np.asarray(t)[..., None]
        return (1 - t) * P + t * Q

    def _payload(self, p):
        return [float(x) for x in self.validate_point(p)]

    def _from_payload(self, payload):
        return self.validate_point(payload)


class HyperbolicPlane(NpcSpace):
    kind = "hyperbolic_plane"
    _iso_type = MobiusMap

    dim = 2

    def spec_string(self):
        return "hyp"

    def validate_point(self, p):
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != (2,):
            raise UsageError("hyperbolic point is a pair (x, y)")
        if not p[1] > 0:
            raise DomainError("upper half-plane requires y > 0")
        return p

    def distance(self, p, q):
        return float(kernels.hyp_distance(self.validate_point(p), self.validate_point(q)))

    def interpolate(self, p, q, t):
        _check_t(t)
        return kernels.hyp_interpolate(self.validate_point(p), self.validate_point(q), float(t))

    def log_map(self, base, p):
        return kernels.hyp_log(self.validate_point(base), self.validate_point(p))

    def exp_map(self, base, v):
        return kernels.hyp_exp(self.validate_point(base), np.asarray(v, dtype=float))

    def tangent_norm(self, base, v):
        return float(np.linalg.norm(v)) / float(base[1])

    def identity_isometry(self):
        return MobiusMap(np.eye(2))

    def make_isometry(self, mat):
        mat = np.asarray(mat, dtype=float)
        if abs(np.linalg.det(mat) - 1.0) > DET_TOL:
            raise DomainError("Mobius matrix must have determinant 1")
        return MobiusMap(mat)

    def random_point(self, rng, scale=1.0):
        return np.array([rng.normal(scale=scale), math.exp(rng.normal(scale=scale))])

    def random_isometry(self, rng, scale=1.0):
        m = np.eye(2) + scale * rng.normal(size=(2, 2))
        det = np.linalg.det(m)
        if abs(det) < 1e-8:
            m += np.eye(2)
            det = np.linalg.det(m)
        if det < 0:  # negative determinant would map into the lower half-plane
            m = m @ np.diag([1.0, -1.0])
            det = -det
        return MobiusMap(m / math.sqrt(det))

    def batch_random(self, rng, m, scale=1.0):
        return np.stack([rng.normal(scale=scale, size=m),
                         np.exp(rng.normal(scale=scale, size=m))], axis=-1)

    def batch_distance(self, P, Q):
        d2 = ((Q - P) ** 2).sum(axis=-1)
        arg = 1.0 + d2 / (2.0 * P[..., 1] * Q[..., 1])
        return np.arccosh(np.maximum(arg, 1.0))

    def batch_interpolate(self, P, Q, t):
        x0, y0 = P[..., 0], P[..., 1]
        u = (Q[..., 0] - x0) / y0
        w = Q[..., 1] / y0
        Y0 = (u * u + w * w + 1.0) / (2.0 * w)
        Y1 = u / w
        Y2 = (u * u + w * w - 1.0) / (2.0 * w)
        d = np.arccosh(np.maximum(Y0, 1.0))
        sd = np.sinh(d)
        small = sd < 1e-15
        sd = np.where(small, 1.0, sd)
        a = np.sinh((1.0 - t) * d) / sd
        b = np.sinh(t * d) / sd
        s = a + b * (Y0 - Y2)
        out = np.stack([y0 * b * Y1 / s + x0, y0 / s], axis=-1)
        return np.where(small[..., None], P, out)

    def _payload(self, p):
        return [float(p[0]), float(p[1])]

    def _from_payload(self, payload):
        return self.validate_point(payload)


class Spd(NpcSpace):
    kind = "spd"
    _iso_type = SLAction

    def __init__(self, n, field="real"):
        if n < 2:
            raise UsageError("spd requires n >= 2")
        if field not in ("real", "complex"):
            raise UsageError("field must be 'real' or 'complex'")
        self.n = int(n)
        self.field = field
        self._dtype = float if field == "real" else complex

    def spec_string(self):
        return f"spd:{self.n}" if self.field == "real" else f"spdc:{self.n}"

    def validate_point(self, p):
        p = np.asarray(p, dtype=self._dtype)
        if p.shape != (self.n, self.n):
            raise UsageError(f"expected {self.n}x{self.n} matrix")
        if np.abs(p - p.conj().T).max() > 1e-10 * max(1.0, np.abs(p).max()):
            raise DomainError("spd point must be self-adjoint")
        w = np.linalg.eigvalsh(p)
        if w[0] <= 0:
            raise DomainError("spd point must be positive definite")
        if abs(np.linalg.det(p) - 1.0) > DET_TOL * 10:
            raise DomainError("spd point must have determinant 1")
        return p

    def _eigh_fns(self, p):
        w, v = np.linalg.eigh(p)
        if w[0] <= 1e-14:
            raise DomainError("matrix is numerically singular")
        return w, v

    def _apply_fn(self, p, fn):
        w, v = self._eigh_fns(p)
        return (v * fn(w)) @ v.conj().T

    def distance(self, p, q):
        p = self.validate_point(p)
        q = self.validate_point(q)
        isq = self._apply_fn(p, lambda w: w ** -0.5)
        lam = np.linalg.eigvalsh(isq @ q @ isq)
        if lam[0] <= 0:
            raise DomainError("matrix is numerically singular")
        return math.sqrt(self.n / 2.0) * float(np.linalg.norm(np.log(lam)))

    def interpolate(self, p, q, t):
        _check_t(t)
        p = self.validate_point(p)
        q = self.validate_point(q)
        sq = self._apply_fn(p, np.sqrt)
        isq = self._apply_fn(p, lambda w: w ** -0.5)
        mid = self._apply_fn(isq @ q @ isq, lambda w: w ** t)
        out = sq @ mid @ sq
        return (out + out.conj().T) / 2

    def log_map(self, base, p):
        base = self.validate_point(base)
        p = self.validate_point(p)
        sq = self._apply_fn(base, np.sqrt)
        isq = self._apply_fn(base, lambda w: w ** -0.5)
        v = sq @ self._apply_fn(isq @ p @ isq, np.log) @ sq
        return (v + v.conj().T) / 2

    def exp_map(self, base, v):
        base = self.validate_point(base)
        v = np.asarray(v, dtype=self._dtype)
        sq = self._apply_fn(base, np.sqrt)
        isq = self._apply_fn(base, lambda w: w ** -0.5)
        out = sq @ self._apply_fn(isq @ v @ isq, np.exp) @ sq
        out = (out + out.conj().T) / 2
        det = np.linalg.det(out).real
        return out / det ** (1.0 / self.n)

    def tangent_norm(self, base, v):
        binv = np.linalg.inv(self.validate_point(base))
        m = binv @ v
        return math.sqrt(max((self.n / 2.0) * np.trace(m @ m).real, 0.0))

    def identity_isometry(self):
        return SLAction(np.eye(self.n, dtype=self._dtype))

    def make_isometry(self, g):
        g = np.asarray(g, dtype=self._dtype)
        det = np.linalg.det(g)
        if abs(det) < 1e-12:
            raise DomainError("singular group element")
        if abs(det - 1.0) > DET_TOL:
            raise DomainError("group element must have determinant 1")
        return SLAction(g)

    def random_tangent(self, rng, scale=1.0):
        """Self-adjoint trace-free matrix of Frobenius norm <= scale."""
        m = rng.normal(size=(self.n, self.n))
        if self.field == "complex":
            m = m + 1j * rng.normal(size=(self.n, self.n))
        m = (m + m.conj().T) / 2
        m -= np.trace(m).real / self.n * np.eye(self.n)
        nrm = np.linalg.norm(m)
        if nrm > 0:
            m *= rng.uniform(0, scale) / nrm
        return m

    def random_point(self, rng, scale=1.0):
        return self._exp_at_identity(self.random_tangent(rng, scale))

    def _exp_at_identity(self, m):
        w, v = np.linalg.eigh(m)
        return (v * np.exp(w)) @ v.conj().T

    def random_isometry(self, rng, scale=1.0):
        g = rng.normal(scale=scale, size=(self.n, self.n))
        if self.field == "complex":
            g = g + 1j * rng.normal(scale=scale, size=(self.n, self.n))
        g = g + np.eye(self.n)
        det = np.linalg.det(g)
        if abs(det) < 1e-8:
            g += np.eye(self.n)
            det = np.linalg.det(g)
        return SLAction(g / det ** (1.0 / self.n))

    def batch_random(self, rng, m, scale=1.0):
        out = np.empty((m, self.n, self.n), dtype=self._dtype)
        for i in range(m):
            out[i] = self._exp_at_identity(self.random_tangent(rng, scale))
        return out

    def batch_distance(self, P, Q):
        w, v = np.linalg.eigh(P)
        isq = (v * (w[..., None, :] ** -0.5)) @ np.conj(np.swapaxes(v, -1, -2))
        lam = np.linalg.eigvalsh(isq @ Q @ isq)
        return math.sqrt(self.n / 2.0) * np.linalg.norm(np.log(lam), axis=-1)

    def batch_interpolate(self, P, Q, t):
        w, v = np.linalg.eigh(P)
        vt = np.conj(np.swapaxes(v, -1, -2))
        sq = (v * (w[..., None, :] ** 0.5)) @ vt
        isq = (v * (w[..., None, :] ** -0.5)) @ vt
        w2, v2 = np.linalg.eigh(isq @ Q @ isq)
        t = np.asarray(t)[..., None]
        mid = (v2 * (w2 ** t)[..., None, :]) @ np.conj(np.swapaxes(v2, -1, -2))
        out = sq @ mid @ sq
        return (out + np.conj(np.swapaxes(out, -1, -2))) / 2

    def _payload(self, p):
        p = self.validate_point(p)
        if self.field == "real":
            return [[float(x) for x in row] for row in p]
        return [[[float(x.real), float(x.imag)] for x in row] for row in p]

    def _from_payload(self, payload):
        if self.field == "real":
            return self.validate_point(payload)
        arr = np.array([[complex(a, b) for (a, b) in row] for row in payload])
        return self.validate_point(arr)


class Pod(NpcSpace):
    """k-pod: k unit-speed rays glued at a common origin."""

    kind = "pod"
    _iso_type = RayPermutation

    def __init__(self, k):
        if k < 3:
            raise UsageError("pod requires k >= 3")
        self.k = int(k)

    def spec_string(self):
        return f"pod:{self.k}"

    def validate_point(self, p):
        ray, radius = p
        ray = int(ray)
        radius = float(radius)
        if not 0 <= ray < self.k:
            raise UsageError(f"ray index out of range [0, {self.k})")
        if radius < 0:
            raise DomainError("pod radius must be >= 0")
        if radius == 0.0:
            ray = 0  # origin is unique; canonicalize
        return PodPoint(ray, radius)

    def origin(self):
        return PodPoint(0, 0.0)

    def distance(self, p, q):
        p = self.validate_point(p)
        q = self.validate_point(q)
        if p.ray == q.ray or p.radius == 0.0 or q.radius == 0.0:
            return abs(p.radius - q.radius)
        return p.radius + q.radius

    def interpolate(self, p, q, t):
        _check_t(t)
        p = self.validate_point(p)
        q = self.validate_point(q)
        if p.radius == 0.0:
            return self.validate_point((q.ray, t * q.radius))
        if p.ray == q.ray or q.radius == 0.0:
            return self.validate_point((p.ray, (1 - t) * p.radius + t * q.radius))
        # through the origin: signed coordinate, p at +radius, q at -radius
        s = (1 - t) * p.radius - t * q.radius
        if s >= 0:
            return self.validate_point((p.ray, s))
        return self.validate_point((q.ray, -s))

    def log_map(self, base, p):
        raise UsageError("pod targets have no smooth tangent calculus")

    def exp_map(self, base, v):
        raise UsageError("pod targets have no smooth tangent calculus")

    def tangent_norm(self, base, v):
        raise UsageError("pod targets have no smooth tangent calculus")

    def identity_isometry(self):
        return RayPermutation(tuple(range(self.k)))

    def cyclic_isometry(self, shift=1):
        return RayPermutation(tuple((i + shift) % self.k for i in range(self.k)))

    def random_point(self, rng, scale=1.0):
        return PodPoint(int(rng.integers(0, self.k)), float(rng.uniform(0, 2 * scale)))

    def random_isometry(self, rng, scale=1.0):
        return RayPermutation(tuple(rng.permutation(self.k)))

    def batch_random(self, rng, m, scale=1.0):
        return np.stack([rng.integers(0, self.k, size=m).astype(float),
                         rng.uniform(0, 2 * scale, size=m)], axis=-1)

    def batch_distance(self, P, Q):
        same = (P[..., 0] == Q[..., 0]) | (P[..., 1] == 0) | (Q[..., 1] == 0)
        return np.where(same, np.abs(P[..., 1] - Q[..., 1]), P[..., 1] + Q[..., 1])

    def batch_interpolate(self, P, Q, t):
        same = (P[..., 0] == Q[..., 0]) | (Q[..., 1] == 0) | (P[..., 1] == 0)
        sgn_q = np.where(same, 1.0, -1.0)
        s = (1 - t) * P[..., 1] + t * sgn_q * Q[..., 1]
        ray_p = np.where(P[..., 1] == 0, Q[..., 0], P[..., 0])
        ray = np.where(s >= 0, ray_p, Q[..., 0])
        rad = np.abs(s)
        ray = np.where(rad == 0, 0.0, ray)
        return np.stack([ray, rad], axis=-1)

    def _payload(self, p):
        p = self.validate_point(p)
        return [p.ray, p.radius]

    def _from_payload(self, payload):
        return self.validate_point(payload)


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise UsageError("interpolation parameter must lie in [0, 1]")


# ---------------------------------------------------------------------------
# construction from CLI spec strings
# ---------------------------------------------------------------------------

def make_space(spec: str) -> NpcSpace:
    """Parse a target spec string: euc:D, hyp, spd:N, spdc:N, pod:K."""
    spec = spec.strip().lower()
    if spec == "hyp":
        return HyperbolicPlane()
    head, sep, arg = spec.partition(":")
    if not sep:
        raise UsageError(f"unknown target spec {spec!r}")
    try:
        num = int(arg)
    except ValueError:
        raise UsageError(f"bad numeric parameter in target spec {spec!r}") from None
    if head == "euc":
        return Euclidean(num)
    if head == "spd":
        return Spd(num, "real")
    if head == "spdc":
        return Spd(num, "complex")
    if head == "pod":
        return Pod(num)
    raise UsageError(f"unknown target spec {spec!r}")


# ---------------------------------------------------------------------------
# comparison inequalities
# ---------------------------------------------------------------------------

def check_triangle_comparison(space, P, Q, R, t):
    """Residual (RHS - LHS) of the NPC triangle comparison

        d(P, Q_t)^2 <= (1-t) d(P,Q)^2 + t d(P,R)^2 - t(1-t) d(Q,R)^2

    with Q_t the geodesic point from Q toward R.  Nonnegative (within
    roundoff) iff the space is NPC along this triangle.
    """
    Qt = space.interpolate(Q, R, t)
    lhs = space.distance(P, Qt) ** 2
    rhs = ((1 - t) * space.distance(P, Q) ** 2 + t * space.distance(P, R) ** 2
           - t * (1 - t) * space.distance(Q, R) ** 2)
    return rhs - lhs


def check_quadrilateral(space, P, Q, R, S, t):
    """Residuals of the two quadrilateral comparisons for the ordered
    quadrilateral with sides PQ, QR, RS, SP; P_t runs from P toward S and
    Q_t from Q toward R.

    Returned pair: (four-point interpolation residual, two-endpoint
    residual), each RHS - LHS >= 0 in an NPC space.  The second
    inequality is used in the sharp form

        d(Q_t,P)^2 + d(Q_{1-t},S)^2
            <= d(P,Q)^2 + d(R,S)^2 - 2t d(Q,R)^2 + 2t d(S,P) d(Q,R)
               + 2t^2 d(Q,R)^2

    which holds with equality for aligned Euclidean configurations.
    """
    Pt = space.interpolate(P, S, t)
    Qt = space.interpolate(Q, R, t)
    Q1t = space.interpolate(Q, R, 1 - t)
    dPQ = space.distance(P, Q)
    dRS = space.distance(R, S)
    dQR = space.distance(Q, R)
    dSP = space.distance(S, P)
    men = ((1 - t) * dPQ ** 2 + t * dRS ** 2 - t * (1 - t) * (dSP - dQR) ** 2
           - space.distance(Pt, Qt) ** 2)
    aga = (dPQ ** 2 + dRS ** 2 - 2 * t * dQR ** 2 + 2 * t * dSP * dQR
           + 2 * t ** 2 * dQR ** 2
           - space.distance(Qt, P) ** 2 - space.distance(Q1t, S) ** 2)
    return men, aga


def comparison_suite(space, n_samples, rng, scale=1.0):
    """Vectorized random sampling of all three comparison residuals.

    Returns a dict with the minimal residual of each inequality over
    ``n_samples`` random triples/quadruples with random t in [0, 1].
    """
    P = space.batch_random(rng, n_samples, scale)
    Q = space.batch_random(rng, n_samples, scale)
    R = space.batch_random(rng, n_samples, scale)
    S = space.batch_random(rng, n_samples, scale)
    t = rng.uniform(size=n_samples)

    d = space.batch_distance
    Qt = space.batch_interpolate(Q, R, t)
    tri = ((1 - t) * d(P, Q) ** 2 + t * d(P, R) ** 2
           - t * (1 - t) * d(Q, R) ** 2 - d(P, Qt) ** 2)

    Pt = space.batch_interpolate(P, S, t)
    dPQ, dRS, dQR, dSP = d(P, Q), d(R, S), d(Q, R), d(S, P)
    men = ((1 - t) * dPQ ** 2 + t * dRS ** 2 - t * (1 - t) * (dSP - dQR) ** 2
           - d(Pt, Qt) ** 2)

    Q1t = space.batch_interpolate(Q, R, 1 - t)
    aga = (dPQ ** 2 + dRS ** 2 - 2 * t * dQR ** 2 + 2 * t * dSP * dQR
           + 2 * t ** 2 * dQR ** 2 - d(Qt, P) ** 2 - d(Q1t, S) ** 2)

    return {
        "samples": int(n_samples),
        "tricomp_min": float(tri.min()),
        "menelaus_min": float(men.min()),
        "agamemnon_min": float(aga.min()),
    }
