"""Majority vote and space-time minimum-weight perfect matching decoders.

Nodes of a :class:`DecodingGraph` are detection-event sites
``(round, ancilla)`` flattened to ``round * n_ancilla + ancilla``; a single
virtual node (index ``n_nodes``) stands for the code boundary.  The graph
holds both stabilizer sectors: Z-type checks flag X errors and X-type checks
flag Z errors.  They are never connected to each other, so decoding one
sector ignores the other.

Edges come from two sources:

* structure: spacelike edges between same-type checks sharing a data qubit,
  timelike edges between consecutive rounds of one check, and boundary
  edges for data qubits covered by a single check;
* single-fault enumeration: every fault location of the noisy circuit is
  propagated on its own and each one that lights up one or two nodes of a
  sector contributes that edge.  This adds the diagonal space-time edges
  that CNOT faults in the middle of a round produce.

Every edge carries the data-qubit flip that explains it.  Matching pairs are
joined along shortest paths (ties broken towards the lowest-index
predecessor), and the XOR of those path corrections is the decoder's guess.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .codes import CodeSpec
from .errors import CapacityError, ContractError, DomainError
from .noise_sim import Circuit, NoiseParams, ShotResult

BOUNDARY = -1
_TOL = 1e-9


def majority_decode(bits: Sequence[int]) -> int:
    bits = list(bits)
    if len(bits) % 2 == 0:
        raise DomainError("majority vote needs an odd number of bits")
    return int(sum(bits) * 2 > len(bits))


@dataclass
class Edge:
    u: int
    v: int
    weight: float
    probability: float
    correction: np.ndarray  # data-qubit flips (X flips for Z checks, Z flips for X checks)
    source: str


@dataclass(eq=False)
class DecodingGraph:
    code: CodeSpec
    rounds: int
    weighted: bool
    edges: dict[tuple[int, int], Edge]
    n_hyperedge_faults: int = 0
    n_conflicts: int = 0
    _dist: np.ndarray | None = field(default=None, repr=False)
    _adj: list | None = field(default=None, repr=False)
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def n_ancilla(self) -> int:
        return self.code.n_ancilla

    @property
    def n_nodes(self) -> int:
        return (self.rounds + 1) * self.n_ancilla

    @property
    def boundary(self) -> int:
        return self.n_nodes

    @property
    def nodes(self) -> list[tuple[int, int]]:
        return [divmod(i, self.n_ancilla) for i in range(self.n_nodes)]

    def node_id(self, round_: int, ancilla: int) -> int:
        return round_ * self.n_ancilla + ancilla

    def sector(self, node: int) -> str:
        return self.code.stabilizer_types[node % self.n_ancilla]

    def boundary_edges(self) -> dict[int, Edge]:
        """Cheapest boundary edge of every node that has one."""
        best: dict[int, Edge] = {}
        for (u, v), e in self.edges.items():
            if v == self.boundary and (u not in best or e.weight < best[u].weight):
                best[u] = e
        return best

    @property
    def distances(self) -> np.ndarray:
        if self._dist is None:
            n = self.n_nodes + 1
            rows, cols, w = [], [], []
            for (u, v), e in self.edges.items():
                rows += [u, v]
                cols += [v, u]
                # csgraph treats explicit zeros as missing edges.
                w += [max(e.weight, 1e-300)] * 2
            mat = csr_matrix((w, (rows, cols)), shape=(n, n))
            self._dist = dijkstra(mat, directed=False)
        return self._dist

    def adjacency(self) -> list[list[tuple[int, Edge]]]:
        if self._adj is None:
            adj: list[list[tuple[int, Edge]]] = [[] for _ in range(self.n_nodes + 1)]
            for (u, v), e in self.edges.items():
                adj[u].append((v, e))
                adj[v].append((u, e))
            for lst in adj:
                lst.sort(key=lambda item: item[0])
            self._adj = adj
        return self._adj

    def path_correction(self, u: int, v: int) -> np.ndarray:
        return self._path_correction(u, v).copy()

    def _path_correction(self, u: int, v: int) -> np.ndarray:
        cached = self._paths.get((u, v))
        if cached is not None:
            return cached
        dist = self.distances[u]
        adj = self.adjacency()
        corr = np.zeros(self.code.n_data, dtype=np.uint8)
        w = v
        while w != u:
            for p, e in adj[w]:
                if np.isfinite(dist[p]) and abs(dist[p] + e.weight - dist[w]) <= _TOL * max(1.0, dist[w]):
                    corr ^= e.correction
                    w = p
                    break
            else:
                raise ContractError(f"no path from node {u} to node {v}")
        corr.setflags(write=False)
        self._paths[(u, v)] = corr
        return corr


def _sector_events(det_flat: np.ndarray, types: np.ndarray, sector: str) -> list[int]:
    return [int(i) for i in np.flatnonzero(det_flat & (types == sector))]


def build_decoding_graph(code: CodeSpec, rounds: int, noise: NoiseParams | None = None,
                         weighted: bool = False) -> DecodingGraph:
    """Space-time decoding graph for ``rounds`` rounds plus the final readout.

    In uniform mode every edge weighs 1.  In weighted mode an edge's
    probability is the chance that an odd number of the single faults
    producing it occur, and its weight is ``-log(p)``; edges no fault can
    produce are dropped.
    """
    noise = noise if noise is not None else NoiseParams()
    n_anc = code.n_ancilla
    n_nodes = (rounds + 1) * n_anc
    B = n_nodes
    types = np.array(code.stabilizer_types)
    edges: dict[tuple[int, int], Edge] = {}
    conflicts = 0

    def logical_parity(corr: np.ndarray, sector: str) -> int:
        op = code.logical_z.z if sector == "Z" else code.logical_x.x
        return int(corr @ op) % 2

    def add(u: int, v: int, corr: np.ndarray, prob: float, source: str) -> None:
        nonlocal conflicts
        key = (min(u, v), max(u, v))
        sector = code.stabilizer_types[key[0] % n_anc]
        if key in edges:
            e = edges[key]
            if logical_parity(e.correction, sector) != logical_parity(corr, sector):
                conflicts += 1
            e.probability = e.probability * (1 - prob) + prob * (1 - e.probability)
            return
        corr = corr.astype(np.uint8)
        corr.setflags(write=False)
        edges[key] = Edge(key[0], key[1], 1.0, prob, corr, source)

    # Structural edges.
    n_data = code.n_data
    for sector in ("Z", "X"):
        checks = [a for a in range(n_anc) if types[a] == sector]
        if not checks:
            continue
        by_qubit: dict[int, list[int]] = {}
        for a in checks:
            for q in code.stabilizers[a].support():
                by_qubit.setdefault(q, []).append(a)
        for t in range(rounds + 1):
            for q, owners in sorted(by_qubit.items()):
                corr = np.zeros(n_data, dtype=np.uint8)
                corr[q] = 1
                if len(owners) == 1:
                    add(t * n_anc + owners[0], B, corr, 0.0, "boundary")
                else:
                    for a, b in itertools.combinations(owners, 2):
                        add(t * n_anc + a, t * n_anc + b, corr, 0.0, "space")
            if t < rounds:
                for a in checks:
                    add(t * n_anc + a, (t + 1) * n_anc + a, np.zeros(n_data, np.uint8), 0.0, "time")

    # Fault-derived edges.
    # A noiseless model still gets the circuit-level edge set, with zero probability.
    template = NoiseParams(uniform_eps=0.01) if noise.is_noiseless else noise
    circuit = Circuit(code, rounds, template)
    faults, batch = circuit.run_single_faults()
    data = list(code.data_qubits)
    hyper = 0
    node_types = np.tile(types, rounds + 1)
    for j, (loc, _) in enumerate(faults):
        det = batch.detection_events[j].reshape(-1)
        p_fault = 0.0 if noise.is_noiseless else float(circuit.rates[loc]) / int(circuit.choices[loc])
        for sector, flips in (("Z", batch.residual_x[j, data]), ("X", batch.residual_z[j, data])):
            ev = _sector_events(det, node_types, sector)
            if len(ev) == 1:
                add(ev[0], B, flips, p_fault, "fault")
            elif len(ev) == 2:
                add(ev[0], ev[1], flips, p_fault, "fault")
            elif len(ev) > 2:
                hyper += 1

    if weighted:
        for key in list(edges):
            e = edges[key]
            if e.probability <= 0.0:
                del edges[key]
            else:
                e.weight = float(-np.log(e.probability))

    return DecodingGraph(code, rounds, weighted, edges, hyper, conflicts)


@dataclass
class Matching:
    pairs: list[tuple[int, int]]
    total_weight: float
    correction: np.ndarray | None = None

    def matched_nodes(self) -> set[int]:
        out = set()
        for u, v in self.pairs:
            out.add(u)
            if v != BOUNDARY:
                out.add(v)
        return out


def _check_events(graph: DecodingGraph, events: Iterable[int]) -> list[int]:
    ev = sorted(set(int(e) for e in events))
    if ev and (ev[0] < 0 or ev[-1] >= graph.n_nodes):
        raise DomainError("event outside the decoding graph")
    return ev


def _solve(graph: DecodingGraph, ev: list[int]) -> list[tuple[int, int]]:
    """Pairs of a minimum-weight matching of ``ev`` (boundary allowed).

    Matching an event to the boundary costs its boundary distance ``b``.
    Pairing events ``i, j`` instead saves ``b_i + b_j - d_ij``, so the
    optimum is a maximum-weight (not necessarily perfect) matching on the
    positive savings; events left unmatched go to the boundary.
    """
    if not ev:
        return []
    dist = graph.distances
    B = graph.boundary
    b = dist[ev, B]
    if not np.all(np.isfinite(b)):
        raise ContractError("every event node must be able to reach the boundary")
    g = nx.Graph()
    for i, j in itertools.combinations(range(len(ev)), 2):
        gain = b[i] + b[j] - dist[ev[i], ev[j]]
        if gain > _TOL:
            g.add_edge(i, j, weight=float(gain))
    paired: set[int] = set()
    pairs = []
    for comp in sorted(nx.connected_components(g), key=min):
        if len(comp) == 2:
            i, j = sorted(comp)
            mate = {(i, j)}
        else:
            mate = nx.max_weight_matching(g.subgraph(comp))
        for i, j in mate:
            i, j = min(i, j), max(i, j)
            pairs.append((ev[i], ev[j]))
            paired.update((i, j))
    pairs.extend((ev[i], BOUNDARY) for i in range(len(ev)) if i not in paired)
    return sorted(pairs)


def _weight(graph: DecodingGraph, pairs: list[tuple[int, int]]) -> float:
    dist = graph.distances
    return float(sum(dist[u, graph.boundary if v == BOUNDARY else v] for u, v in pairs))


def _correction(graph: DecodingGraph, pairs: list[tuple[int, int]]) -> np.ndarray:
    corr = np.zeros(graph.code.n_data, dtype=np.uint8)
    for u, v in pairs:
        corr ^= graph._path_correction(u, graph.boundary if v == BOUNDARY else v)
    return corr


def mwpm(graph: DecodingGraph, events: Iterable[int]) -> Matching:
    """Exact minimum-weight matching of detection events to each other or the boundary."""
    ev = _check_events(graph, events)
    pairs = _solve(graph, ev)
    return Matching(pairs, _weight(graph, pairs), _correction(graph, pairs))


def brute_force_matching(graph: DecodingGraph, events: Iterable[int]) -> Matching:
    """Exhaustive minimum over all pairings and boundary assignments.

    Uses its own shortest-path lengths (networkx Dijkstra) so it shares no
    numerics with :func:`mwpm`.
    """
    ev = _check_events(graph, events)
    if len(ev) > 12:
        raise CapacityError(f"brute force matching handles at most 12 events, got {len(ev)}")
    if not ev:
        return Matching([], 0.0, np.zeros(graph.code.n_data, dtype=np.uint8))
    g = nx.Graph()
    for (u, v), e in graph.edges.items():
        g.add_edge(u, v, weight=e.weight)
    lengths = {u: nx.single_source_dijkstra_path_length(g, u) for u in ev}
    inf = float("inf")

    def d(u: int, v: int) -> float:
        return lengths[u].get(v, inf)

    best_w = inf
    best_pairs: list[tuple[int, int]] = []

    def rec(rest: tuple[int, ...], acc: float, chosen: list[tuple[int, int]]) -> None:
        nonlocal best_w, best_pairs
        if acc >= best_w - _TOL and best_pairs:
            return
        if not rest:
            if acc < best_w - _TOL or not best_pairs:
                best_w, best_pairs = acc, list(chosen)
            return
        head, tail = rest[0], rest[1:]
        chosen.append((head, BOUNDARY))
        rec(tail, acc + d(head, graph.boundary), chosen)
        chosen.pop()
        for k, other in enumerate(tail):
            chosen.append((head, other))
            rec(tail[:k] + tail[k + 1:], acc + d(head, other), chosen)
            chosen.pop()

    rec(tuple(ev), 0.0, [])
    pairs = sorted(best_pairs)
    return Matching(pairs, float(best_w), _correction(graph, pairs))


def shot_events(graph: DecodingGraph, shot: ShotResult, basis: str = "Z") -> list[int]:
    det = np.asarray(shot.syndrome.detection_events).reshape(-1)
    types = np.tile(np.array(graph.code.stabilizer_types), graph.rounds + 1)
    return _sector_events(det, types, basis)


def apply_correction(code: CodeSpec, matching: Matching, shot: ShotResult, basis: str = "Z") -> bool:
    """True when the corrected residual error is a logical failure.

    ``basis="Z"`` protects the logical Z observable against X errors;
    ``basis="X"`` protects logical X against Z errors.
    """
    if basis not in ("Z", "X"):
        raise DomainError(f"basis must be 'Z' or 'X', got {basis!r}")
    n_anc = code.n_ancilla
    det = np.asarray(shot.syndrome.detection_events).reshape(-1)
    types = np.tile(np.array(code.stabilizer_types), det.size // n_anc)
    events = set(_sector_events(det, types, basis))
    if events != matching.matched_nodes():
        raise ContractError("matching does not cover exactly the shot's detection events")
    data = list(code.data_qubits)
    frame = shot.true_residual_error
    if basis == "Z":
        residual, logical = frame.x_flips[data], code.logical_z.z
    else:
        residual, logical = frame.z_flips[data], code.logical_x.x
    corr = matching.correction if matching.correction is not None else np.zeros(len(data), np.uint8)
    return bool(((residual ^ corr) @ logical) % 2)


class Decoder:
    """Batch decoder with a cache keyed by the event set."""

    def __init__(self, graph: DecodingGraph, basis: str = "Z", cache_size: int = 200_000):
        self.graph = graph
        self.basis = basis
        code = graph.code
        self._types = np.tile(np.array(code.stabilizer_types), graph.rounds + 1)
        self._mask = self._types == basis
        self._logical = (code.logical_z.z if basis == "Z" else code.logical_x.x).astype(np.int64)
        self._data = list(code.data_qubits)
        self._cache: dict[tuple[int, ...], int] = {}
        self._cache_size = cache_size

    def events(self, det_flat: np.ndarray) -> tuple[int, ...]:
        """Indices of this decoder's sector among flattened detection events."""
        return tuple(int(k) for k in np.flatnonzero(np.asarray(det_flat) & self._mask))

    def correction_parity(self, events: tuple[int, ...]) -> int:
        hit = self._cache.get(events)
        if hit is not None:
            return hit
        pairs = _solve(self.graph, list(events))
        parity = int(_correction(self.graph, pairs) @ self._logical) % 2
        if len(self._cache) < self._cache_size:
            self._cache[events] = parity
        return parity

    def failures(self, detection_events: np.ndarray, residual_x: np.ndarray,
                 residual_z: np.ndarray) -> np.ndarray:
        shots = detection_events.shape[0]
        det = detection_events.reshape(shots, -1) & self._mask
        frame = residual_x if self.basis == "Z" else residual_z
        fail = (frame[:, self._data].astype(np.int64) @ self._logical) % 2
        for i in np.flatnonzero(det.any(axis=1)):
            ev = tuple(int(k) for k in np.flatnonzero(det[i]))
            fail[i] ^= self.correction_parity(ev)
        return fail.astype(bool)
