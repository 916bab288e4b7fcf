import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from data_models import BudgetError, EdgeList, GraphInputError, InputError

logger = logging.getLogger(__name__)


class DisjointSet:
    """Union-find over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True

    def labels(self) -> np.ndarray:
        """Supervertex label per vertex, numbered by smallest contained vertex."""
        out = np.empty(len(self.parent), dtype=np.int64)
        seen = {}
        for v in range(len(self.parent)):
            root = self.find(v)
            if root not in seen:
                seen[root] = len(seen)
            out[v] = seen[root]
        return out

    def copy(self) -> "DisjointSet":
        other = DisjointSet(0)
        other.parent = list(self.parent)
        other.size = list(self.size)
        other.count = self.count
        return other


class _EdgeArrays:
    """Array views shared by the undirected and directed graph types."""

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.int64)

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=np.float64)

    @cached_property
    def log_p(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.p)

    @cached_property
    def uniform_p(self) -> Optional[float]:
        if self.m == 0 or not np.all(self.p == self.p[0]):
            return None
        return float(self.p[0])

    def edge_list(self) -> EdgeList:
        return [tuple(e) for e in self.edges]


@dataclass(frozen=True)
class Multigraph(_EdgeArrays):
    n: int
    edges: Tuple[Tuple[int, int, float], ...]

    def with_probability(self, p: float) -> "Multigraph":
        return build(self.n, [(u, v, p) for u, v, _ in self.edges])

    def to_networkx(self) -> nx.MultiGraph:
        G = nx.MultiGraph()
        G.add_nodes_from(range(self.n))
        for i, (u, v, p) in enumerate(self.edges):
            G.add_edge(u, v, key=i, p_fail=p)
        return G


@dataclass(frozen=True)
class Digraph(_EdgeArrays):
    """Directed multigraph; arc i runs tails[i] -> heads[i]."""
    n: int
    edges: Tuple[Tuple[int, int, float], ...]

    def eulerian_mismatches(self) -> List[Tuple[int, int, int]]:
        """(vertex, in-degree, out-degree) for every vertex where they differ."""
        indeg = np.bincount(self.heads, minlength=self.n) if self.m else np.zeros(self.n, int)
        outdeg = np.bincount(self.tails, minlength=self.n) if self.m else np.zeros(self.n, int)
        return [(v, int(indeg[v]), int(outdeg[v])) for v in range(self.n) if indeg[v] != outdeg[v]]

    def is_strongly_connected(self) -> bool:
        alive = np.ones((1, self.m), dtype=bool)
        return bool(strongly_connected_rows(self.n, self.tails, self.heads, alive)[0])

    def underlying(self) -> Multigraph:
        return build(self.n, self.edge_list())


def _validated_edges(n, edge_list, kind: str) -> Tuple[Tuple[int, int, float], ...]:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise GraphInputError(f"vertex count must be a positive integer, got {n!r}")
    edges = []
    for i, edge in enumerate(edge_list):
        try:
            u, v, p = edge
            u, v, p = int(u), int(v), float(p)
        except (TypeError, ValueError):
            raise GraphInputError(f"{kind} {i} is not a (u, v, p_fail) triple: {edge!r}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphInputError(f"{kind} {i} endpoint out of range [0, {n}): ({u}, {v})")
        if u == v:
            raise GraphInputError(f"{kind} {i} is a self-loop at vertex {u}")
        if not 0.0 <= p <= 1.0:
            raise GraphInputError(f"{kind} {i} failure probability {p} outside [0, 1]")
        edges.append((u, v, p))
    return tuple(edges)


def build(n: int, edge_list: Iterable) -> Multigraph:
    return Multigraph(int(n), _validated_edges(n, edge_list, "edge"))


def build_directed(n: int, arc_list: Iterable) -> Digraph:
    return Digraph(int(n), _validated_edges(n, arc_list, "arc"))


@dataclass(frozen=True, eq=False)
class WeightedView:
    """Per-edge weights in nats; never-failing edges carry infinite weight."""
    weights: np.ndarray
    never_fail: np.ndarray

    @classmethod
    def from_probabilities(cls, g) -> "WeightedView":
        with np.errstate(divide="ignore"):
            weights = -np.log(g.p)
        never_fail = g.p == 0.0
        weights = np.where(never_fail, np.inf, weights)
        # p = 1 gives -0.0
        weights = np.abs(weights)
        return cls(weights, never_fail)

    @classmethod
    def unit(cls, g) -> "WeightedView":
        return cls(np.ones(g.m), np.zeros(g.m, dtype=bool))

    @cached_property
    def finite_weights(self) -> np.ndarray:
        return np.where(self.never_fail, 0.0, self.weights)

    def cut_value(self, edge_ids: Sequence[int]) -> float:
        return math.fsum(float(self.weights[e]) for e in edge_ids)


@dataclass(frozen=True, eq=False)
class CutValue:
    value: float
    disconnected: bool = False
    side: Optional[np.ndarray] = None  # True marks the side without vertex 0

    def __float__(self):
        return float(self.value)


@dataclass
class ContractionState:
    graph: Multigraph
    components: DisjointSet
    surviving: List[int]

    @classmethod
    def initial(cls, g: Multigraph) -> "ContractionState":
        return cls(g, DisjointSet(g.n), list(range(g.m)))

    @property
    def supervertices(self) -> int:
        return self.components.count

    def supervertex(self, v: int) -> int:
        return self.components.find(v)


def contract(state: ContractionState, e: int) -> ContractionState:
    g = state.graph
    u, v = g.edges[e][0], g.edges[e][1]
    components = state.components.copy()
    if components.find(u) == components.find(v):
        raise InputError(f"edge {e} is internal to a supervertex")
    components.union(u, v)
    surviving = [f for f in state.surviving
                 if components.find(g.edges[f][0]) != components.find(g.edges[f][1])]
    return ContractionState(g, components, surviving)


def is_connected(g, surviving) -> bool:
    """True iff the edges in `surviving` (ids or a boolean mask) span all vertices."""
    surviving = np.asarray(surviving)
    if surviving.dtype == bool:
        ids = np.flatnonzero(surviving)
    else:
        ids = surviving.astype(np.int64)
    ds = DisjointSet(g.n)
    for e in ids:
        ds.union(g.edges[e][0], g.edges[e][1])
    return ds.count == 1


def is_graph_connected(g) -> bool:
    return is_connected(g, np.ones(g.m, dtype=bool))


# Batch predicates over a (trials x edges) boolean matrix of surviving edges.

def component_labels(n: int, tails: np.ndarray, heads: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Label of every vertex = smallest vertex in its component, per row."""
    B = alive.shape[0]
    labels = np.broadcast_to(np.arange(n, dtype=np.int64), (B, n)).copy()
    m = len(tails)
    if m == 0 or B == 0:
        return labels
    rows = np.broadcast_to(np.arange(B)[:, None], (B, m))
    cols_u = np.broadcast_to(tails, (B, m))
    cols_v = np.broadcast_to(heads, (B, m))
    while True:
        low = np.minimum(labels[:, tails], labels[:, heads])
        low = np.where(alive, low, n)
        new = labels.copy()
        np.minimum.at(new, (rows, cols_u), low)
        np.minimum.at(new, (rows, cols_v), low)
        while True:
            jumped = np.take_along_axis(new, new, axis=1)
            if np.array_equal(jumped, new):
                break
            new = jumped
        if np.array_equal(new, labels):
            return labels
        labels = new


def component_counts(g, alive: np.ndarray) -> np.ndarray:
    labels = component_labels(g.n, g.tails, g.heads, alive)
    return (labels == np.arange(g.n)).sum(axis=1)


def connected_rows(g, alive: np.ndarray) -> np.ndarray:
    return component_counts(g, alive) == 1


def terminals_connected_rows(g, alive: np.ndarray, terminals: Sequence[int]) -> np.ndarray:
    labels = component_labels(g.n, g.tails, g.heads, alive)
    picked = labels[:, list(terminals)]
    return np.all(picked == picked[:, :1], axis=1)


def _reach(n: int, src: np.ndarray, dst: np.ndarray, alive: np.ndarray) -> np.ndarray:
    B, m = alive.shape
    reach = np.zeros((B, n), dtype=bool)
    reach[:, 0] = True
    if m == 0:
        return reach
    rows = np.broadcast_to(np.arange(B)[:, None], (B, m))
    cols = np.broadcast_to(dst, (B, m))
    while True:
        push = reach[:, src] & alive
        new = reach.copy()
        np.logical_or.at(new, (rows, cols), push)
        if np.array_equal(new, reach):
            return reach
        reach = new


def strongly_connected_rows(n: int, tails: np.ndarray, heads: np.ndarray, alive: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.ones(alive.shape[0], dtype=bool)
    forward = _reach(n, tails, heads, alive)
    backward = _reach(n, heads, tails, alive)
    return forward.all(axis=1) & backward.all(axis=1)


@lru_cache(maxsize=32)
def bipartition_sides(n: int) -> np.ndarray:
    """All 2^(n-1)-1 bipartitions of n vertices as rows; vertex 0 stays on side False."""
    if n < 2:
        return np.zeros((0, n), dtype=bool)
    masks = np.arange(1, 2 ** (n - 1), dtype=np.int64)
    sides = np.zeros((len(masks), n), dtype=bool)
    for j in range(1, n):
        sides[:, j] = (masks >> (j - 1)) & 1
    sides.setflags(write=False)
    return sides


@lru_cache(maxsize=64)
def set_partitions(k: int, r: int) -> np.ndarray:
    """All partitions of k items into exactly r blocks, as restricted growth strings."""
    out = []
    rgs = [0] * k

    def rec(i, blocks):
        if k - i < r - blocks:
            return
        if i == k:
            if blocks == r:
                out.append(list(rgs))
            return
        for b in range(min(blocks + 1, r)):
            rgs[i] = b
            rec(i + 1, max(blocks, b + 1))

    if k >= 1 and 1 <= r <= k:
        rec(1, 1)
    parts = np.array(out, dtype=np.int64).reshape(-1, k)
    parts.setflags(write=False)
    return parts


def k_edge_connected_rows(g, alive: np.ndarray, k: int, max_partition_vertices: int = 10) -> np.ndarray:
    B = alive.shape[0]
    if g.n == 1:
        return np.ones(B, dtype=bool)
    if g.n <= max_partition_vertices:
        sides = bipartition_sides(g.n)
        crossing = (sides[:, g.tails] != sides[:, g.heads]).astype(np.int32)
        out = np.empty(B, dtype=bool)
        step = max(1, (1 << 22) // max(1, len(crossing)))
        for start in range(0, B, step):
            block = alive[start:start + step].astype(np.int32)
            out[start:start + step] = (block @ crossing.T).min(axis=1) >= k
        return out
    out = np.empty(B, dtype=bool)
    for i in range(B):
        G = aggregate_graph(g, np.arange(g.n), np.where(alive[i], 1.0, 0.0), keep_zero=False)
        if not nx.is_connected(G):
            out[i] = False
        else:
            out[i] = nx.stoer_wagner(G, weight="weight")[0] >= k
    return out


def quotient_labels(g, never_fail: np.ndarray) -> Tuple[np.ndarray, int]:
    """Contract never-failing edges; returns (supervertex label per vertex, count)."""
    ds = DisjointSet(g.n)
    for e in np.flatnonzero(never_fail):
        ds.union(g.edges[e][0], g.edges[e][1])
    return ds.labels(), ds.count


def aggregate_graph(g, labels: np.ndarray, weights: np.ndarray, keep_zero: bool = True) -> nx.Graph:
    """Simple weighted graph on supervertices; parallel edge weights are summed."""
    G = nx.Graph()
    G.add_nodes_from(range(int(labels.max()) + 1 if len(labels) else 0))
    for e in range(g.m):
        a, b = int(labels[g.tails[e]]), int(labels[g.heads[e]])
        w = float(weights[e])
        if a == b or (w == 0.0 and not keep_zero):
            continue
        if G.has_edge(a, b):
            G[a][b]["weight"] += w
        else:
            G.add_edge(a, b, weight=w)
    return G


def min_cut_value(g: Multigraph, weights: Optional[WeightedView] = None) -> CutValue:
    """Exact global minimum cut (edge count, or total weight under a WeightedView).

    Cuts crossing a never-failing edge are infinite; if every cut does, the
    value is infinite. A disconnected graph reports value 0 with the flag set.
    """
    if g.n == 1:
        return CutValue(math.inf)
    if not is_graph_connected(g):
        labels = component_labels(g.n, g.tails, g.heads, np.ones((1, g.m), dtype=bool))[0]
        return CutValue(0.0, disconnected=True, side=labels != 0)
    view = weights or WeightedView.unit(g)
    labels, count = quotient_labels(g, view.never_fail)
    if count == 1:
        return CutValue(math.inf)
    G = aggregate_graph(g, labels, view.finite_weights)
    _, (part_a, _) = nx.stoer_wagner(G, weight="weight")
    in_a = np.zeros(count, dtype=bool)
    in_a[list(part_a)] = True
    side = in_a[labels]
    if side[0]:
        side = ~side
    crossing = np.flatnonzero(side[g.tails] != side[g.heads])
    return CutValue(view.cut_value(crossing), side=side)


def min_rway_cut_value(g: Multigraph, r: int, weights: Optional[WeightedView] = None,
                       max_vertices: int = 10) -> CutValue:
    """Exact minimum r-way cut by exhaustive set-partition search on the never-fail quotient."""
    if r < 2:
        raise InputError("r must be at least 2")
    if r > g.n:
        raise InputError(f"r = {r} exceeds vertex count {g.n}")
    view = weights or WeightedView.unit(g)
    labels, count = quotient_labels(g, view.never_fail)
    if count < r:
        return CutValue(math.inf)
    if count > max_vertices:
        raise BudgetError(f"exact {r}-way minimum cut needs set partitions of {count} > {max_vertices} vertices",
                          required=count)
    parts = set_partitions(count, r)
    su, sv = labels[g.tails], labels[g.heads]
    values = (parts[:, su] != parts[:, sv]) @ view.finite_weights
    best = parts[int(np.argmin(values))][labels]
    crossing = np.flatnonzero(best[g.tails] != best[g.heads])
    return CutValue(view.cut_value(crossing), side=best)


def min_terminal_cut_value(g: Multigraph, terminals: Sequence[int],
                           weights: Optional[WeightedView] = None) -> CutValue:
    """Cheapest cut separating some pair of terminals, by max-flow from the first terminal."""
    view = weights or WeightedView.unit(g)
    labels, _ = quotient_labels(g, view.never_fail)
    sources = sorted({int(labels[t]) for t in terminals})
    if len(sources) < 2:
        return CutValue(math.inf)
    G = aggregate_graph(g, labels, view.finite_weights)
    root = int(labels[terminals[0]])
    best, best_side = math.inf, None
    for t in terminals[1:]:
        target = int(labels[t])
        if target == root:
            continue
        value, (reach, _) = nx.minimum_cut(G, root, target, capacity="weight")
        if value < best:
            best, best_side = value, reach
    in_reach = np.zeros(int(labels.max()) + 1, dtype=bool)
    in_reach[list(best_side)] = True
    side = ~in_reach[labels] if in_reach[labels[0]] else in_reach[labels]
    crossing = np.flatnonzero(side[g.tails] != side[g.heads])
    return CutValue(view.cut_value(crossing), disconnected=best == 0, side=side)


def min_directed_cut_value(dg: Digraph, weights: Optional[WeightedView] = None) -> CutValue:
    """Minimum weight of the arcs leaving some proper vertex subset.

    Never-failing arcs carry no capacity attribute, which networkx treats as unbounded.
    """
    if dg.n == 1:
        return CutValue(math.inf)
    view = weights or WeightedView.unit(dg)
    G = nx.DiGraph()
    G.add_nodes_from(range(dg.n))
    for e in range(dg.m):
        u, v = int(dg.tails[e]), int(dg.heads[e])
        if view.never_fail[e]:
            if G.has_edge(u, v):
                G[u][v].pop("capacity", None)
            else:
                G.add_edge(u, v)
            continue
        if not G.has_edge(u, v):
            G.add_edge(u, v, capacity=float(view.weights[e]))
        elif "capacity" in G[u][v]:
            G[u][v]["capacity"] += float(view.weights[e])
    best = math.inf
    for v in range(1, dg.n):
        for s, t in ((0, v), (v, 0)):
            try:
                best = min(best, nx.minimum_cut_value(G, s, t, capacity="capacity"))
            except nx.NetworkXUnbounded:
                continue
    return CutValue(best, disconnected=best == 0)
