"""Metric-graph data model, vertex-condition subspaces and geometric invariants.

A graph is a set of vertices plus oriented edges of positive (possibly
infinite) length; each finite edge may carry a magnetic flux, the integral
of the vector potential along the edge, which is the only gauge-observable
magnetic datum.  Boundary values live in C^(|E| + |E_int|), ordered as all
(e, 0) endpoints in edge declaration order followed by the (e, len) endpoints
of the finite edges; vertex conditions are encoded by an orthonormal basis
of a subspace Y of that space.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .polytrig import GraphFunction, IntervalUnion, PolyTrigTerm

ORTHO_TOL = 1e-12        # orthonormality validation tolerance
RANK_TOL = 1e-10         # Gram-Schmidt rank tolerance for user bases

CONDITION_NAMES = ("standard", "dirichlet", "neumann", "anti-kirchhoff")


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str | None
    length: float
    flux: float = 0.0

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.length)


class MetricGraph:
    """Validated immutable metric graph."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        self.vertices: tuple[str, ...] = tuple(str(v) for v in vertices)
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        es: list[Edge] = []
        seen = set()
        for e in edges:
            if e.id in seen:
                raise ValueError(f"duplicate edge id {e.id!r}")
            seen.add(e.id)
            if not (e.length > 0.0):
                raise ValueError(f"edge {e.id!r} has nonpositive length")
            if e.source not in vset:
                raise ValueError(f"edge {e.id!r} references unknown vertex {e.source!r}")
            if math.isfinite(e.length):
                if e.target is None:
                    raise ValueError(f"finite edge {e.id!r} needs a terminal vertex")
                if e.target not in vset:
                    raise ValueError(f"edge {e.id!r} references unknown vertex {e.target!r}")
            else:
                if e.target is not None:
                    raise ValueError(f"infinite edge {e.id!r} cannot have a terminal vertex")
                if e.flux != 0.0:
                    raise ValueError(f"infinite edge {e.id!r} cannot carry flux")
            es.append(e)
        self.edges: tuple[Edge, ...] = tuple(es)
        self.edge_ids: tuple[str, ...] = tuple(e.id for e in self.edges)
        self.internal_ids: tuple[str, ...] = tuple(e.id for e in self.edges if e.is_finite)
        self.external_ids: tuple[str, ...] = tuple(e.id for e in self.edges if not e.is_finite)
        self.edge_lengths: dict[str, float] = {e.id: e.length for e in self.edges}
        self._by_id: dict[str, Edge] = {e.id: e for e in self.edges}
        # boundary coordinates: (e, 0) block for all edges, then (e, len) block
        coords: list[tuple[str, int]] = [(eid, 0) for eid in self.edge_ids]
        coords += [(eid, 1) for eid in self.internal_ids]
        self.boundary_coords: tuple[tuple[str, int], ...] = tuple(coords)

    def edge(self, eid: str) -> Edge:
        return self._by_id[eid]

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_coords)

    @property
    def is_compact(self) -> bool:
        return not self.external_ids

    def degree(self, v: str) -> int:
        d = 0
        for e in self.edges:
            if e.source == v:
                d += 1
            if e.target == v:
                d += 1
        return d

    def vertex_coords(self, v: str) -> list[int]:
        """Boundary coordinate indices whose endpoint is glued at vertex v."""
        idx = []
        for i, (eid, end) in enumerate(self.boundary_coords):
            e = self._by_id[eid]
            if end == 0 and e.source == v:
                idx.append(i)
            elif end == 1 and e.target == v:
                idx.append(i)
        return idx

    def components(self) -> list[set[str]]:
        parent = {v: v for v in self.vertices}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            if e.target is not None:
                ra, rb = find(e.source), find(e.target)
                if ra != rb:
                    parent[ra] = rb
        comps: dict[str, set[str]] = {}
        for v in self.vertices:
            comps.setdefault(find(v), set()).add(v)
        return list(comps.values())

    @property
    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def boundary_map(self, values_at_0: Mapping[str, complex],
                     values_at_len: Mapping[str, complex], sign: int) -> np.ndarray:
        """Assemble a boundary vector (sign*g(0)) ⊕ (g(len)); sign is ±1."""
        vec = np.zeros(self.n_boundary, dtype=complex)
        for i, (eid, end) in enumerate(self.boundary_coords):
            if end == 0:
                vec[i] = sign * values_at_0.get(eid, 0.0)
            else:
                vec[i] = values_at_len.get(eid, 0.0)
        return vec

    def trace_plus(self, f: GraphFunction) -> np.ndarray:
        at0 = {eid: f.evaluate(eid, 0.0) for eid in self.edge_ids}
        atl = {eid: f.evaluate(eid, self.edge_lengths[eid]) for eid in self.internal_ids}
        return self.boundary_map(at0, atl, +1)

    def trace_minus(self, f: GraphFunction) -> np.ndarray:
        at0 = {eid: f.evaluate(eid, 0.0) for eid in self.edge_ids}
        atl = {eid: f.evaluate(eid, self.edge_lengths[eid]) for eid in self.internal_ids}
        return self.boundary_map(at0, atl, -1)


def build_graph(vertices: Iterable[str], edges: Iterable[Edge | tuple]) -> MetricGraph:
    """Build and validate a graph; edges may be Edge objects or
    (id, source, target, length[, flux]) tuples with target None for rays."""
    es = []
    for e in edges:
        if isinstance(e, Edge):
            es.append(e)
        else:
            eid, src, tgt, ell, *rest = e
            es.append(Edge(str(eid), str(src), None if tgt is None else str(tgt),
                           float(ell), float(rest[0]) if rest else 0.0))
    return MetricGraph(vertices, es)


# ---------------------------------------------------------------------------
# geometric invariants


@dataclass(frozen=True)
class GraphMetrics:
    total_length: float
    betti: int
    diameter: float | None
    min_edge: float
    degree1_count: int
    connected: bool


def _vertex_distances(g: MetricGraph) -> dict[str, dict[str, float]]:
    adj: dict[str, list[tuple[str, float]]] = {v: [] for v in g.vertices}
    for e in g.edges:
        if e.target is None:
            continue
        adj[e.source].append((e.target, e.length))
        adj[e.target].append((e.source, e.length))
    dist: dict[str, dict[str, float]] = {}
    for src in g.vertices:
        d = {v: math.inf for v in g.vertices}
        d[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            du, u = heapq.heappop(heap)
            if du > d[u]:
                continue
            for w, ell in adj[u]:
                alt = du + ell
                if alt < d[w]:
                    d[w] = alt
                    heapq.heappush(heap, (alt, w))
        dist[src] = d
    return dist


def _edge_pair_max(e: Edge, f: Edge, dv: dict[str, dict[str, float]]) -> float:
    """Max over x in e, y in f of the point distance, via tiny max-min LPs."""
    le, lf = e.length, f.length
    routes = [
        (1.0, 1.0, dv[e.source][f.source]),
        (1.0, -1.0, dv[e.source][f.target] + lf),
        (-1.0, 1.0, dv[e.target][f.source] + le),
        (-1.0, -1.0, dv[e.target][f.target] + le + lf),
    ]
    same = e.id == f.id
    best = 0.0
    triangles = ((1.0, -1.0), (-1.0, 1.0)) if same else (None,)
    for tri in triangles:
        pieces = list(routes)
        if same:
            # direct route |s - t| restricted to the triangle where it is affine
            pieces.append((tri[0], tri[1], 0.0))
        # maximize z s.t. z <= a*s + b*t + c  ->  minimize -z
        a_ub = [[-a, -b, 1.0] for a, b, _ in pieces]
        b_ub = [c for _, _, c in pieces]
        if same:
            a_ub.append([-tri[0], -tri[1], 0.0])  # keep s-t (or t-s) nonnegative
            b_ub.append(0.0)
        res = linprog(c=[0.0, 0.0, -1.0], A_ub=a_ub, b_ub=b_ub,
                      bounds=[(0.0, le), (0.0, lf), (0.0, None)],
                      method="highs")
        if not res.success:
            raise RuntimeError(f"diameter LP failed on edges {e.id}, {f.id}: {res.message}")
        best = max(best, -res.fun)
    return best


def diameter(g: MetricGraph) -> float:
    if not g.is_compact:
        raise ValueError("diameter undefined on a non-compact graph")
    if not g.is_connected:
        raise ValueError("diameter undefined on a disconnected graph")
    dv = _vertex_distances(g)
    best = 0.0
    for i, e in enumerate(g.edges):
        for f in g.edges[i:]:
            best = max(best, _edge_pair_max(e, f, dv))
    return best


def metrics(g: MetricGraph) -> GraphMetrics:
    total = sum(e.length for e in g.edges)
    # rays are trees: count a virtual leaf per external edge in the Euler formula
    betti = len(g.edges) - (len(g.vertices) + len(g.external_ids)) + len(g.components())
    connected = g.is_connected
    diam = diameter(g) if (connected and g.is_compact and g.edges) else None
    return GraphMetrics(
        total_length=total,
        betti=betti,
        diameter=diam,
        min_edge=min((e.length for e in g.edges), default=math.inf),
        degree1_count=sum(1 for v in g.vertices if g.degree(v) == 1),
        connected=connected,
    )


# ---------------------------------------------------------------------------
# boundary subspaces


def _orthonormalize(rows: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, int]:
    """Modified Gram-Schmidt with one re-orthogonalisation pass; returns the
    orthonormal rows and the number of dropped (near-dependent) inputs."""
    out: list[np.ndarray] = []
    dropped = 0
    for v in rows:
        w = np.array(v, dtype=complex)
        scale = np.linalg.norm(w)
        if scale == 0.0:
            dropped += 1
            continue
        for _ in range(2):
            for u in out:
                w = w - np.vdot(u, w) * u
        nrm = np.linalg.norm(w)
        if nrm <= tol * scale:
            dropped += 1
            continue
        out.append(w / nrm)
    if not out:
        n = rows.shape[1] if rows.ndim == 2 else 0
        return np.zeros((0, n), dtype=complex), dropped
    return np.array(out), dropped


class BoundarySubspace:
    """Orthonormal basis (rows) of a closed subspace of the boundary space."""

    __slots__ = ("graph", "basis", "kind")

    def __init__(self, graph: MetricGraph, basis: np.ndarray, kind: str | None = None,
                 check: bool = True):
        basis = np.atleast_2d(np.asarray(basis, dtype=complex))
        if basis.size == 0:
            basis = basis.reshape(0, graph.n_boundary)
        if basis.shape[1] != graph.n_boundary:
            raise ValueError(f"basis vectors must have length {graph.n_boundary}")
        if basis.shape[0] > graph.n_boundary:
            raise ValueError("more basis vectors than boundary dimensions")
        if check and basis.shape[0]:
            gram = basis @ basis.conj().T
            if np.max(np.abs(gram - np.eye(basis.shape[0]))) > ORTHO_TOL:
                raise ValueError("basis is not orthonormal to 1e-12")
        self.graph = graph
        self.basis = basis
        self.kind = kind

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.graph.n_boundary

    def perp(self) -> "BoundarySubspace":
        n = self.ambient_dim
        if self.dim == 0:
            return BoundarySubspace(self.graph, np.eye(n, dtype=complex), check=False)
        if self.dim == n:
            return BoundarySubspace(self.graph, np.zeros((0, n), dtype=complex), check=False)
        # trailing right-singular rows are orthonormal to the row space
        _, _, vh = np.linalg.svd(self.basis)
        return BoundarySubspace(self.graph, vh[self.dim:], check=False)

    def project(self, vec: np.ndarray) -> np.ndarray:
        if self.dim == 0:
            return np.zeros_like(np.asarray(vec, dtype=complex))
        coeff = self.basis.conj() @ np.asarray(vec, dtype=complex)
        return self.basis.T @ coeff

    def residual(self, vec: np.ndarray) -> float:
        """Distance from vec to the subspace."""
        v = np.asarray(vec, dtype=complex)
        return float(np.linalg.norm(v - self.project(v)))

    def equals(self, other: "BoundarySubspace", tol: float = 1e-10) -> bool:
        """Span equality via mutual projection residuals."""
        if self.dim != other.dim:
            return False
        r = max((other.residual(v) for v in self.basis), default=0.0)
        s = max((self.residual(v) for v in other.basis), default=0.0)
        return max(r, s) < tol

    def to_json(self) -> dict:
        return {"basis": [[{"re": z.real, "im": z.imag} for z in row] for row in self.basis]}


def full_subspace(g: MetricGraph) -> BoundarySubspace:
    return BoundarySubspace(g, np.eye(g.n_boundary, dtype=complex), check=False)


def zero_subspace(g: MetricGraph) -> BoundarySubspace:
    return BoundarySubspace(g, np.zeros((0, g.n_boundary), dtype=complex), check=False)


def vertex_conditions_subspace(g: MetricGraph, default: str = "standard",
                               overrides: Mapping[str, str] | None = None) -> BoundarySubspace:
    """Compile per-vertex symbolic conditions into a boundary subspace.

    standard        span of the vertex indicator (continuity + zero flux balance);
    dirichlet       the vertex contributes nothing, its endpoint coordinates
                    drop out of the support of Y;
    neumann         the full coordinate block at the vertex (decoupled);
    anti-kirchhoff  the orthogonal complement, within the block, of the signed
                    indicator (-1 on outgoing (e,0) slots, +1 on incoming ones).
    """
    overrides = dict(overrides or {})
    for v, cond in overrides.items():
        if v not in g.vertices:
            raise ValueError(f"condition override for unknown vertex {v!r}")
        if cond not in CONDITION_NAMES:
            raise ValueError(f"unknown vertex condition {cond!r}")
    if default not in CONDITION_NAMES:
        raise ValueError(f"unknown vertex condition {default!r}")
    n = g.n_boundary
    rows: list[np.ndarray] = []
    for v in g.vertices:
        cond = overrides.get(v, default)
        idx = g.vertex_coords(v)
        if not idx:
            continue
        if cond == "dirichlet":
            continue
        if cond == "neumann":
            for i in idx:
                row = np.zeros(n, dtype=complex)
                row[i] = 1.0
                rows.append(row)
        elif cond == "standard":
            row = np.zeros(n, dtype=complex)
            row[idx] = 1.0
            rows.append(row / math.sqrt(len(idx)))
        else:  # anti-kirchhoff: block complement of the signed indicator
            signed = np.zeros(len(idx), dtype=complex)
            for j, i in enumerate(idx):
                signed[j] = -1.0 if g.boundary_coords[i][1] == 0 else 1.0
            signed /= np.linalg.norm(signed)
            block = np.eye(len(idx), dtype=complex) - np.outer(signed, signed.conj())
            blk_rows, _ = _orthonormalize(block)
            for brow in blk_rows:
                row = np.zeros(n, dtype=complex)
                row[idx] = brow
                rows.append(row)
    basis = np.array(rows) if rows else np.zeros((0, n), dtype=complex)
    kind = "standard" if (default == "standard" and not overrides) else None
    return BoundarySubspace(g, basis, kind=kind, check=False)


def standard_subspace(g: MetricGraph) -> BoundarySubspace:
    """Continuity plus zero net derivative flux at every vertex."""
    return vertex_conditions_subspace(g, "standard")


def subspace_from_basis(g: MetricGraph, raw_rows: Sequence[Sequence[complex]]) -> BoundarySubspace:
    """Orthonormalise a user-supplied spanning set (rank tolerance 1e-10)."""
    arr = np.array([[complex(z) for z in row] for row in raw_rows], dtype=complex)
    if arr.size == 0:
        return zero_subspace(g)
    basis, dropped = _orthonormalize(arr)
    if dropped:
        warnings.warn(f"user basis reduced: dropped {dropped} near-dependent vector(s)",
                      stacklevel=2)
    return BoundarySubspace(g, basis, check=False)


def _sign_flip(g: MetricGraph, basis: np.ndarray) -> np.ndarray:
    out = np.array(basis, dtype=complex)
    out[:, : len(g.edge_ids)] *= -1.0
    return out


def dual_subspace(y: BoundarySubspace) -> BoundarySubspace:
    """The subspace governing first derivatives of functions satisfying Y:
    negate the (e, 0) block of the orthogonal complement.  Involutive on
    subspaces (the basis may differ)."""
    perp = y.perp()
    return BoundarySubspace(y.graph, _sign_flip(y.graph, perp.basis), check=False)


def gauge_transform(y: BoundarySubspace, g: MetricGraph) -> BoundarySubspace:
    """Rotate the (e, len) coordinate of every basis vector by exp(-1j*flux_e);
    absorbs the per-edge fluxes into the vertex conditions."""
    if y.graph is not g and y.graph.boundary_coords != g.boundary_coords:
        raise ValueError("subspace does not match the graph's boundary layout")
    basis = np.array(y.basis, dtype=complex)
    offset = len(g.edge_ids)
    for j, eid in enumerate(g.internal_ids):
        theta = g.edge(eid).flux
        if theta != 0.0:
            basis[:, offset + j] *= complex(math.cos(theta), -math.sin(theta))
    return BoundarySubspace(g, basis, kind=y.kind if all(e.flux == 0.0 for e in g.edges) else None,
                            check=False)


def strip_fluxes(g: MetricGraph) -> MetricGraph:
    return MetricGraph(g.vertices, [Edge(e.id, e.source, e.target, e.length, 0.0)
                                    for e in g.edges])


# ---------------------------------------------------------------------------
# subdivision


@dataclass
class CoordinateMap:
    """Translates edge-local data from a graph to its subdivision."""

    source: MetricGraph
    target: MetricGraph
    pieces: dict[str, list[tuple[str, float, float]]] = field(default_factory=dict)

    def map_intervals(self, eid: str, iv: IntervalUnion) -> dict[str, IntervalUnion]:
        out: dict[str, IntervalUnion] = {}
        for nid, c0, c1 in self.pieces[eid]:
            parts = [(max(a, c0) - c0, min(b, c1) - c0) for a, b in iv.intervals
                     if min(b, c1) > max(a, c0)]
            if parts:
                out[nid] = IntervalUnion(parts, length=c1 - c0)
        return out

    def map_region(self, region: Mapping[str, IntervalUnion]) -> dict[str, IntervalUnion]:
        out: dict[str, IntervalUnion] = {}
        for eid, iv in region.items():
            out.update(self.map_intervals(eid, iv))
        return out

    def map_function(self, f: GraphFunction) -> GraphFunction:
        terms: dict[str, list[PolyTrigTerm]] = {}
        for eid, ts in f.terms.items():
            for nid, c0, c1 in self.pieces[eid]:
                acc = terms.setdefault(nid, [])
                for c, p, w in ts:
                    # substitute x = c0 + y and expand (c0 + y)**p
                    phase = c * complex(math.cos(w * c0), math.sin(w * c0))
                    for j in range(p + 1):
                        acc.append(PolyTrigTerm(phase * math.comb(p, j) * c0 ** (p - j), j, w))
        return GraphFunction(self.target, terms)


def subdivide(g: MetricGraph, max_len: float) -> tuple[MetricGraph, CoordinateMap]:
    """Split every finite edge into equal pieces of length <= max_len.

    Inserted vertices are degree-2, meant to carry standard conditions
    (transparent for the Laplacian); edges already short enough are kept as is.
    """
    if not (max_len > 0.0):
        raise ValueError("max_len must be positive")
    if not g.is_compact:
        raise ValueError("subdivision requires a compact graph")
    vertices = list(g.vertices)
    new_edges: list[Edge] = []
    cmap_pieces: dict[str, list[tuple[str, float, float]]] = {}
    for e in g.edges:
        n = max(1, math.ceil(e.length / max_len - 1e-12))
        if n == 1:
            new_edges.append(e)
            cmap_pieces[e.id] = [(e.id, 0.0, e.length)]
            continue
        cuts = [e.length * i / n for i in range(n + 1)]
        mids = [f"{e.id}.v{i}" for i in range(1, n)]
        vertices.extend(mids)
        chain = [e.source] + mids + [e.target]
        pieces = []
        for i in range(n):
            nid = f"{e.id}.{i}"
            new_edges.append(Edge(nid, chain[i], chain[i + 1],
                                  cuts[i + 1] - cuts[i], e.flux / n))
            pieces.append((nid, cuts[i], cuts[i + 1]))
        cmap_pieces[e.id] = pieces
    sub = MetricGraph(vertices, new_edges)
    return sub, CoordinateMap(source=g, target=sub, pieces=cmap_pieces)


# ---------------------------------------------------------------------------
# JSON ingestion


def graph_from_dict(data: Mapping) -> tuple[MetricGraph, BoundarySubspace]:
    """Parse the graph description format; returns the graph and the compiled
    vertex-condition subspace (standard by default)."""
    try:
        vertices = [str(v) for v in data["vertices"]]
        raw_edges = data["edges"]
    except KeyError as exc:
        raise ValueError(f"graph description missing field {exc}") from exc
    edges = []
    for i, ed in enumerate(raw_edges):
        try:
            length = ed["length"]
            if isinstance(length, str):
                if length.lower() not in ("inf", "infinity"):
                    raise ValueError(f"edge {i}: bad length {length!r}")
                length = math.inf
            target = ed.get("to")
            edges.append(Edge(
                id=str(ed.get("id", f"e{i}")),
                source=str(ed["from"]),
                target=None if target is None else str(target),
                length=float(length),
                flux=float(ed.get("flux", 0.0)),
            ))
        except KeyError as exc:
            raise ValueError(f"edge {i} missing field {exc}") from exc
    g = MetricGraph(vertices, edges)
    cond = data.get("conditions", {})
    if "subspace" in cond:
        rows = [[complex(z["re"], z.get("im", 0.0)) for z in row]
                for row in cond["subspace"]["basis"]]
        y = subspace_from_basis(g, rows)
    else:
        y = vertex_conditions_subspace(g, cond.get("default", "standard"),
                                       cond.get("overrides"))
    return g, y


def load_graph(path) -> tuple[MetricGraph, BoundarySubspace]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    return graph_from_dict(data)
