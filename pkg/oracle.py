"""Brute-force reference values by exhaustive enumeration.

Every function enumerates all 2^m edge-failure patterns (or all orientations,
or all vertex partitions) and sums exactly, so inputs must stay small; the
limits come from data_models.OracleBudget and are checked before any work.
"""
import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from cut_enum import CutRecord, records_from_partitions
from data_models import BudgetError, GraphInputError, InputError, OracleBudget
from detapprox import PartitionTail
from dnf import assignment_chunks
from multigraph import (
    Digraph, Multigraph, WeightedView, bipartition_sides, component_counts, connected_rows,
    is_graph_connected, k_edge_connected_rows, min_cut_value, min_rway_cut_value,
    set_partitions, strongly_connected_rows, terminals_connected_rows
)

logger = logging.getLogger(__name__)


def _budget(budget: Optional[OracleBudget]) -> OracleBudget:
    return budget or OracleBudget()


def _check_edges(g, limit: int, what: str = "edges"):
    if g.m > limit:
        raise BudgetError(f"exhaustive enumeration over {g.m} {what} exceeds the oracle budget of {limit}",
                          required=g.m)


def _failure_patterns(g):
    """(alive matrix, probability per pattern) chunks over all 2^m failure patterns."""
    p = g.p
    for alive in assignment_chunks(g.m):
        yield alive, np.prod(np.where(alive, 1.0 - p, p), axis=1)


def _exact_probability(g, fails: Callable[[np.ndarray], np.ndarray], limit: int) -> float:
    _check_edges(g, limit)
    parts = []
    for alive, weight in _failure_patterns(g):
        parts.append(math.fsum(weight[fails(alive)].tolist()))
    return min(1.0, math.fsum(parts))


def exact_fail(g: Multigraph, budget: Optional[OracleBudget] = None) -> float:
    return _exact_probability(g, lambda alive: ~connected_rows(g, alive), _budget(budget).max_edges)


def exact_kconn_fail(g: Multigraph, k: int, budget: Optional[OracleBudget] = None) -> float:
    if k < 1:
        raise InputError("k must be at least 1")
    b = _budget(budget)
    return _exact_probability(
        g, lambda alive: ~k_edge_connected_rows(g, alive, k, b.max_vertices_for_partitions), b.max_edges)


def exact_multiterminal_fail(g: Multigraph, terminals: Sequence[int],
                             budget: Optional[OracleBudget] = None) -> float:
    terminals = [int(t) for t in terminals]
    if len(set(terminals)) < 2 or any(not 0 <= t < g.n for t in terminals):
        raise InputError("terminal set needs at least 2 distinct vertices of the graph")
    return _exact_probability(g, lambda alive: ~terminals_connected_rows(g, alive, terminals),
                              _budget(budget).max_edges)


def exact_rway_fail(g: Multigraph, r: int, budget: Optional[OracleBudget] = None) -> float:
    """Pr[at least r components]."""
    if r < 1:
        raise InputError("r must be at least 1")
    return _exact_probability(g, lambda alive: component_counts(g, alive) >= r, _budget(budget).max_edges)


def exact_strong_fail(dg: Digraph, budget: Optional[OracleBudget] = None) -> float:
    return _exact_probability(dg, lambda alive: ~strongly_connected_rows(dg.n, dg.tails, dg.heads, alive),
                              _budget(budget).max_edges)


def exact_orientation_fail(g: Multigraph, budget: Optional[OracleBudget] = None) -> float:
    """Probability that a uniformly random orientation is not strongly connected."""
    _check_edges(g, _budget(budget).max_orientations, "orientable edges")
    tails = np.concatenate([g.tails, g.heads])
    heads = np.concatenate([g.heads, g.tails])
    failing = 0
    for forward in assignment_chunks(g.m):
        alive = np.concatenate([forward, ~forward], axis=1)
        failing += int(np.count_nonzero(~strongly_connected_rows(g.n, tails, heads, alive)))
    return failing / float(1 << g.m)


def exact_cut_list(g: Multigraph, alpha: float, weights: Optional[WeightedView] = None,
                   slack: float = 1.0, budget: Optional[OracleBudget] = None) -> List[CutRecord]:
    """Every cut of value <= alpha * c by trying all bipartitions; cuts in the slack band are flagged."""
    if alpha < 1:
        raise InputError(f"alpha must be at least 1, got {alpha}")
    limit = _budget(budget).max_vertices_for_partitions
    if g.n > limit:
        raise BudgetError(f"{g.n} vertices exceed the partition budget of {limit}", required=g.n)
    if not is_graph_connected(g):
        raise GraphInputError("cut listing needs a connected graph")
    view = weights or WeightedView.unit(g)
    minimum = min_cut_value(g, view).value
    if math.isinf(minimum):
        return []
    parts = bipartition_sides(g.n).astype(np.int64)
    records = records_from_partitions(g, view, parts, 2, alpha * minimum, alpha * minimum * slack)
    return sorted(records, key=lambda c: (c.value, c.signature))


def exact_rway_cut_list(g: Multigraph, r: int, alpha: float, weights: Optional[WeightedView] = None,
                        slack: float = 1.0, budget: Optional[OracleBudget] = None) -> List[CutRecord]:
    if r == 2:
        return exact_cut_list(g, alpha, weights, slack, budget)
    if alpha < 1:
        raise InputError(f"alpha must be at least 1, got {alpha}")
    limit = _budget(budget).max_rway_vertices
    if g.n > limit:
        raise BudgetError(f"{g.n} vertices exceed the r-way partition budget of {limit}", required=g.n)
    if not is_graph_connected(g):
        raise GraphInputError("cut listing needs a connected graph")
    view = weights or WeightedView.unit(g)
    minimum = min_rway_cut_value(g, r, view, max_vertices=g.n).value
    if math.isinf(minimum):
        return []
    records = records_from_partitions(g, view, set_partitions(g.n, r), r, alpha * minimum,
                                      alpha * minimum * slack)
    return sorted(records, key=lambda c: (c.value, c.signature))


def exact_partition_tail(g: Multigraph, p: Optional[float] = None, events: Optional[Sequence] = None,
                         budget: Optional[OracleBudget] = None) -> PartitionTail:
    """Exact component-count distribution, and optionally the count distribution of cut events.

    `events` holds CutRecords or edge-id collections; an event occurs when all its edges fail.
    """
    if p is not None:
        g = g.with_probability(p)
    _check_edges(g, _budget(budget).max_edges)
    event_sets = [tuple(e.edge_ids) if isinstance(e, CutRecord) else tuple(e) for e in (events or [])]
    mat = np.zeros((len(event_sets), g.m), dtype=np.int32)
    for i, ids in enumerate(event_sets):
        mat[i, list(ids)] = 1
    sizes = mat.sum(axis=1)

    exactly = [[] for _ in range(g.n + 1)]
    occurring = [[] for _ in range(len(event_sets) + 1)]
    for alive, weight in _failure_patterns(g):
        kappa = component_counts(g, alive)
        for r in np.unique(kappa):
            exactly[int(r)].append(math.fsum(weight[kappa == r].tolist()))
        if event_sets:
            counts = ((~alive).astype(np.int32) @ mat.T == sizes).sum(axis=1)
            for u in np.unique(counts):
                occurring[int(u)].append(math.fsum(weight[counts == u].tolist()))

    p_exact = {r: math.fsum(exactly[r]) for r in range(1, g.n + 1)}
    s = {r: math.fsum(p_exact[j] for j in range(r, g.n + 1)) for r in range(1, g.n + 1)}
    t, S = {}, {}
    if event_sets:
        t = {u: math.fsum(occurring[u]) for u in range(len(event_sets) + 1)}
        S = {u: math.fsum(t[j] for j in range(u, len(event_sets) + 1)) for u in range(len(event_sets) + 1)}
    return PartitionTail(s, p_exact, t, S)
