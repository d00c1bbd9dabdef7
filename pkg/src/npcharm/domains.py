"""Weighted-graph domains, twisted edges, representations, and map storage.

A ``DomainGraph`` discretizes a Riemannian domain: vertices carry a
measure ``mu`` and optional plane positions, edges carry positive weights
(unit weights on grid graphs give the standard 5-point Laplacian as the
energy gradient), and a subset of vertices is flagged as boundary.

Equivariant problems are encoded by twisting edges with generator words:
an edge ``(u, v, gamma)`` contributes ``w * d(f(u), gamma . f(v))^2 / 2``
to the energy, i.e. traversal u -> v reads the neighbor value through
``gamma`` and traversal v -> u through ``gamma^{-1}``.  Words refer to
the generators of a ``Representation`` into the target's isometry group.

Text format (one graph per file, byte-stable round trip)::

    npcgraph v1
    V <id> <mu> [<x> <y>]
    E <u> <v> <w> [twist=<word>]
    B <id>

Words are dot-separated generator names with an optional ``^-1`` suffix,
e.g. ``A.B^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .spaces import NpcSpace


# ---------------------------------------------------------------------------
# generator words
# ---------------------------------------------------------------------------

def parse_word(word):
    """'A.B^-1' -> [('A', +1), ('B', -1)]; empty/None -> []."""
    if not word:
        return []
    out = []
    for tok in word.split("."):
        tok = tok.strip()
        if not tok:
            raise UsageError(f"empty token in word {word!r}")
        if tok.endswith("^-1"):
            out.append((tok[:-3], -1))
        else:
            out.append((tok, +1))
    return out


def invert_word(word):
    return ".".join(
        (name if sign < 0 else name + "^-1") for name, sign in reversed(parse_word(word))
    ) or None


class Representation:
    """Generator names -> isometries of a target space, with optional
    relation words that must act as the identity (checked on build)."""

    REL_TOL = 1e-8

    def __init__(self, space: NpcSpace, generators: dict, relations=()):
        self.space = space
        self.generators = dict(generators)
        for name, iso in self.generators.items():
            space.check_isometry(iso)
            if "." in name or "^" in name or not name:
                raise UsageError(f"bad generator name {name!r}")
        self.relations = list(relations)
        self._cache = {}
        for rel in self.relations:
            iso = self.isometry(rel)
            if not self.is_identity(iso):
                raise DomainError(f"relation {rel!r} does not act as the identity")

    def isometry(self, word):
        """Compose the isometry for a word (None/'' -> identity)."""
        if not word:
            return self.space.identity_isometry()
        if word in self._cache:
            return self._cache[word]
        iso = self.space.identity_isometry()
        for name, sign in parse_word(word):
            if name not in self.generators:
                raise UsageError(f"unknown generator {name!r}")
            g = self.generators[name]
            iso = iso.compose(g if sign > 0 else g.inverse())
        self._cache[word] = iso
        return iso

    def is_identity(self, iso, tol=REL_TOL):
        return _iso_is_identity(iso, tol)


def _iso_is_identity(iso, tol):
    from .spaces import MobiusMap, RayPermutation, RigidMotion, SLAction

    if isinstance(iso, RigidMotion):
        return (np.abs(iso.rot - np.eye(len(iso.shift))).max() <= tol
                and np.abs(iso.shift).max() <= tol)
    if isinstance(iso, MobiusMap):
        # PSL(2): +-I act identically
        return min(np.abs(iso.mat - np.eye(2)).max(),
                   np.abs(iso.mat + np.eye(2)).max()) <= tol
    if isinstance(iso, SLAction):
        n = iso.mat.shape[0]
        # the action is trivial iff g is a unit-modulus multiple of I
        # (an n-th root of unity inside SL(n))
        best = math.inf
        for j in range(n):
            zeta = np.exp(2j * np.pi * j / n)
            diff = np.abs(iso.mat - zeta * np.eye(n)).max()
            best = min(best, diff)
        return best <= tol
    if isinstance(iso, RayPermutation):
        return iso.perm == tuple(range(len(iso.perm)))
    raise UsageError(f"unknown isometry type {type(iso).__name__}")


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass
class Edge:
    u: int
    v: int
    weight: float
    twist: str | None = None
    wrap: str | None = None  # builder metadata, not serialized


class DomainGraph:
    def __init__(self, n_vertices, edges, boundary=(), mu=None, positions=None):
        self.n = int(n_vertices)
        self.edges = [e if isinstance(e, Edge) else Edge(*e) for e in edges]
        for e in self.edges:
            if not (0 <= e.u < self.n and 0 <= e.v < self.n):
                raise UsageError(f"edge ({e.u},{e.v}) references unknown vertex")
            if e.u == e.v:
                raise UsageError("self-loops are not allowed")
        self.edges.sort(key=lambda e: (e.u, e.v))
        self.boundary = frozenset(int(b) for b in boundary)
        if any(not 0 <= b < self.n for b in self.boundary):
            raise UsageError("boundary references unknown vertex")
        if mu is None:
            mu = np.zeros(self.n)
            for e in self.edges:
                mu[e.u] += e.weight / 2
                mu[e.v] += e.weight / 2
        self.mu = np.asarray(mu, dtype=float)
        self.positions = None if positions is None else np.asarray(positions, dtype=float)
        self._adj = None

    @property
    def interior(self):
        return [v for v in range(self.n) if v not in self.boundary]

    def adjacency(self):
        """Directed star lists: adj[v] = [(nbr, weight, twist_word)], where
        twist_word is the word seen when traversing v -> nbr."""
        if self._adj is None:
            adj = [[] for _ in range(self.n)]
            for e in self.edges:
                adj[e.u].append((e.v, e.weight, e.twist))
                adj[e.v].append((e.u, e.weight, invert_word(e.twist)))
            self._adj = adj
        return self._adj

    def degree(self, v):
        return len(self.adjacency()[v])

    def is_connected(self):
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        adj = self.adjacency()
        while stack:
            v = stack.pop()
            for u, _, _ in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        return bool(seen.all())

    # text format ------------------------------------------------------------
    def to_text(self):
        lines = ["npcgraph v1"]
        for v in range(self.n):
            parts = ["V", str(v), repr(float(self.mu[v]))]
            if self.positions is not None:
                parts += [repr(float(self.positions[v][0])), repr(float(self.positions[v][1]))]
            lines.append(" ".join(parts))
        for e in self.edges:
            parts = ["E", str(e.u), str(e.v), repr(float(e.weight))]
            if e.twist:
                parts.append(f"twist={e.twist}")
            lines.append(" ".join(parts))
        for b in sorted(self.boundary):
            lines.append(f"B {b}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "npcgraph v1":
            raise UsageError("missing 'npcgraph v1' header")
        mus, poss, edges, boundary = {}, {}, [], []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "V":
                vid = int(parts[1])
                mus[vid] = float(parts[2])
                if len(parts) >= 5:
                    poss[vid] = (float(parts[3]), float(parts[4]))
                elif len(parts) != 3:
                    raise UsageError(f"bad V line: {ln!r}")
            elif parts[0] == "E":
                twist = None
                rest = parts[1:]
                if rest and rest[-1].startswith("twist="):
                    twist = rest[-1][6:]
                    rest = rest[:-1]
                if len(rest) != 3:
                    raise UsageError(f"bad E line: {ln!r}")
                edges.append(Edge(int(rest[0]), int(rest[1]), float(rest[2]), twist))
            elif parts[0] == "B":
                boundary.append(int(parts[1]))
            else:
                raise UsageError(f"unknown line type: {ln!r}")
        n = len(mus)
        if sorted(mus) != list(range(n)):
            raise UsageError("vertex ids must be 0..n-1")
        mu = np.array([mus[v] for v in range(n)])
        positions = None
        if poss:
            if len(poss) != n:
                raise UsageError("positions must be given for all vertices or none")
            positions = np.array([poss[v] for v in range(n)])
        return cls(n, edges, boundary, mu, positions)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _edge_weight(metric_weights, pu, pv):
    if metric_weights is None:
        return 1.0
    if callable(metric_weights):
        return float(metric_weights(pu, pv))
    return float(metric_weights)


def build_grid_domain(shape, resolution, metric_weights=None):
    """Grid-based domains: interval | rectangle | disk | circle | torus.

    ``resolution`` is the number of vertices per side (>= 2); interval and
    circle use it directly, the 2-d shapes build resolution x resolution
    grids over the unit square (disk: inscribed in [-1, 1]^2).
    """
    if resolution < 2:
        raise UsageError("resolution must be >= 2")
    res = int(resolution)

    if shape == "interval":
        pos = np.stack([np.linspace(0, 1, res), np.zeros(res)], axis=1)
        edges = [Edge(i, i + 1, _edge_weight(metric_weights, pos[i], pos[i + 1]))
                 for i in range(res - 1)]
        return DomainGraph(res, edges, boundary=[0, res - 1], positions=pos)

    if shape == "circle":
        ang = 2 * np.pi * np.arange(res) / res
        pos = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        edges = [Edge(i, i + 1, _edge_weight(metric_weights, pos[i], pos[i + 1]))
                 for i in range(res - 1)]
        edges.append(Edge(res - 1, 0, _edge_weight(metric_weights, pos[-1], pos[0]),
                          wrap="x"))
        return DomainGraph(res, edges, positions=pos)

    if shape == "rectangle":
        xs = np.linspace(0, 1, res)
        pos = np.array([(xs[i], xs[j]) for i in range(res) for j in range(res)])
        vid = lambda i, j: i * res + j
        edges = []
        for i in range(res):
            for j in range(res):
                if i + 1 < res:
                    edges.append(Edge(vid(i, j), vid(i + 1, j),
                                      _edge_weight(metric_weights, pos[vid(i, j)], pos[vid(i + 1, j)])))
                if j + 1 < res:
                    edges.append(Edge(vid(i, j), vid(i, j + 1),
                                      _edge_weight(metric_weights, pos[vid(i, j)], pos[vid(i, j + 1)])))
        boundary = [vid(i, j) for i in range(res) for j in range(res)
                    if i in (0, res - 1) or j in (0, res - 1)]
        return DomainGraph(res * res, edges, boundary, positions=pos)

    if shape == "disk":
        xs = np.linspace(-1, 1, res)
        keep = {}
        pts = []
        for i in range(res):
            for j in range(res):
                if xs[i] ** 2 + xs[j] ** 2 <= 1.0 + 1e-12:
                    keep[(i, j)] = len(pts)
                    pts.append((xs[i], xs[j]))
        pos = np.array(pts)
        edges = []
        deg = {}
        for (i, j), a in keep.items():
            for (di, dj) in ((1, 0), (0, 1)):
                b = keep.get((i + di, j + dj))
                if b is not None:
                    edges.append(Edge(a, b, _edge_weight(metric_weights, pos[a], pos[b])))
            deg[a] = sum((i + di, j + dj) in keep
                         for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)))
        boundary = [a for a, d in deg.items() if d < 4]
        g = DomainGraph(len(pts), edges, boundary, positions=pos)
        if not g.is_connected():
            raise UsageError("disk grid is disconnected at this resolution")
        return g

    if shape == "torus":
        vid = lambda i, j: (i % res) * res + (j % res)
        xs = np.linspace(0, 1, res, endpoint=False)
        pos = np.array([(xs[i], xs[j]) for i in range(res) for j in range(res)])
        edges = []
        for i in range(res):
            for j in range(res):
                w = _edge_weight(metric_weights, pos[vid(i, j)], pos[vid(i + 1, j)])
                edges.append(Edge(vid(i, j), vid(i + 1, j), w,
                                  wrap="x" if i == res - 1 else None))
                w = _edge_weight(metric_weights, pos[vid(i, j)], pos[vid(i, j + 1)])
                edges.append(Edge(vid(i, j), vid(i, j + 1), w,
                                  wrap="y" if j == res - 1 else None))
        return DomainGraph(res * res, edges, positions=pos)

    raise UsageError(f"unknown shape {shape!r}")


def build_twisted_domain(base: DomainGraph, rep: Representation, gluing: dict):
    """Assign generator words to the wrap-around edges of a periodic base
    graph (circle or torus), producing the fundamental-domain
    discretization of the corresponding equivariant problem.

    ``gluing`` maps wrap tags ('x', 'y') to generator words.  For a torus
    glued along both axes the two words must commute in the
    representation (checked within the relation tolerance).
    """
    tags = {e.wrap for e in base.edges if e.wrap}
    if not tags:
        raise UsageError("base graph has no wrap-around edges to glue")
    for tag in gluing:
        if tag not in tags:
            raise UsageError(f"gluing tag {tag!r} not present in base graph")
    for tag, word in gluing.items():
        rep.isometry(word)  # raises on unknown generators
    if "x" in gluing and "y" in gluing:
        wx, wy = gluing["x"], gluing["y"]
        comm = f"{wx}.{wy}.{invert_word(wx)}.{invert_word(wy)}"
        if not rep.is_identity(rep.isometry(comm)):
            raise DomainError(
                "torus gluing words do not commute in the representation")
    edges = []
    for e in base.edges:
        twist = gluing.get(e.wrap) if e.wrap else None
        if e.twist:
            raise UsageError("base graph already has twisted edges")
        edges.append(Edge(e.u, e.v, e.weight, twist, e.wrap))
    return DomainGraph(base.n, edges, base.boundary, base.mu.copy(),
                       None if base.positions is None else base.positions.copy())


def validate_domain(d: DomainGraph):
    """Diagnostic report: connectivity, weight/measure positivity,
    twist-word syntax, boundary sanity.  Never raises."""
    problems = []
    if not d.is_connected():
        problems.append("graph is not connected")
    for e in d.edges:
        if not e.weight > 0:
            problems.append(f"edge ({e.u},{e.v}) has non-positive weight {e.weight}")
        if e.twist is not None:
            try:
                parse_word(e.twist)
            except UsageError as exc:
                problems.append(str(exc))
    if not (d.mu > 0).all():
        bad = np.nonzero(~(d.mu > 0))[0]
        problems.append(f"vertices with non-positive measure: {bad.tolist()}")
    isolated = [v for v in range(d.n) if d.degree(v) == 0]
    if isolated:
        problems.append(f"isolated vertices: {isolated}")
    return {"ok": not problems, "problems": problems,
            "n_vertices": d.n, "n_edges": len(d.edges),
            "n_boundary": len(d.boundary),
            "n_twisted": sum(1 for e in d.edges if e.twist)}


# ---------------------------------------------------------------------------
# discrete maps
# ---------------------------------------------------------------------------

class DiscreteMap:
    """Vertex -> target-point assignment over a fixed domain size."""

    def __init__(self, space: NpcSpace, values):
        self.space = space
        self.values = [space.validate_point(v) for v in values]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, v):
        return self.values[v]

    def __setitem__(self, v, p):
        self.values[v] = self.space.validate_point(p)

    def copy(self):
        m = DiscreteMap.__new__(DiscreteMap)
        m.space = self.space
        m.values = [np.copy(v) if isinstance(v, np.ndarray) else v for v in self.values]
        return m

    @classmethod
    def constant(cls, space, n, point):
        p = space.validate_point(point)
        return cls(space, [p] * n)

    def to_json(self):
        return {"space": self.space.spec_string(),
                "values": [self.space._payload(v) for v in self.values]}

    @classmethod
    def from_json(cls, space, obj):
        if obj.get("space") != space.spec_string():
            raise UsageError("map space tag does not match target space")
        return cls(space, [space._from_payload(p) for p in obj["values"]])

    def max_pairwise_distance(self):
        """Upper bound via distances from the first value (2x the radius)."""
        base = self.values[0]
        r = max(self.space.distance(base, v) for v in self.values)
        return 2 * r
