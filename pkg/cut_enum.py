import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from data_models import BudgetError, GraphInputError, InputError
from multigraph import (
    Digraph, DisjointSet, Multigraph, WeightedView,
    bipartition_sides, set_partitions, is_graph_connected,
    min_cut_value, min_rway_cut_value, quotient_labels
)

logger = logging.getLogger(__name__)

# Stream tags for np.random.SeedSequence spawn keys.
ENUMERATION_STREAM = 0

MAX_BASE_VERTICES = 20


@dataclass(frozen=True)
class CutRecord:
    """A canonical cut.

    signature: bitmask of the vertices on the side without vertex 0 (2-way),
    or block labels in order of smallest contained vertex (r-way).
    direction: for directed cuts, 0 means arcs leaving vertex 0's side and 1
    means arcs entering it; None for undirected cuts.
    """
    signature: Union[int, Tuple[int, ...]]
    edge_ids: Tuple[int, ...]
    value: float
    blocks: int = 2
    flagged: bool = False
    direction: Optional[int] = None

    def sides(self, n: int) -> np.ndarray:
        """Block label per vertex (0/1 for 2-way cuts)."""
        if isinstance(self.signature, tuple):
            return np.array(self.signature, dtype=np.int64)
        return np.array([(self.signature >> i) & 1 for i in range(n)], dtype=np.int64)

    def key(self):
        return (self.signature, self.direction)

    def to_dict(self, n: Optional[int] = None) -> Dict:
        row = {
            'signature': self.signature if isinstance(self.signature, int) else list(self.signature),
            'blocks': self.blocks,
            'value': self.value,
            'edges': list(self.edge_ids),
            'flagged': self.flagged,
        }
        if self.direction is not None:
            row['direction'] = self.direction
        if n is not None:
            labels = self.sides(n)
            row['partition'] = [[int(v) for v in np.flatnonzero(labels == b)] for b in range(self.blocks)]
        return row


@dataclass(frozen=True)
class EnumerationPlan:
    alpha: float
    r: int
    trials: int
    base_size: int
    coverage_failure_budget: float
    vertices: int
    log_cut_bound: float
    schedule: str = "cut_count"

    @property
    def exhaustive(self) -> bool:
        return self.base_size >= self.vertices


def log_cut_count_bound(vertices: int, alpha: float, r: int = 2) -> float:
    """ln of the bound on alpha-minimum cuts: n^(2 alpha), or (rn)^(2 alpha (r-1)) for r > 2."""
    if r == 2:
        return 2.0 * alpha * math.log(max(vertices, 2))
    return 2.0 * alpha * (r - 1) * math.log(r * vertices)


def base_size_for(alpha: float, r: int = 2) -> int:
    return max(r, math.ceil(2.0 * alpha * (r - 1) - 1e-12))


def make_plan(vertices: int, alpha: float, r: int = 2, eta: float = 0.01,
              schedule: str = "cut_count", max_trials: int = 2_000_000) -> EnumerationPlan:
    if alpha < 1:
        raise InputError(f"alpha must be at least 1, got {alpha}")
    if not 0 < eta < 1:
        raise InputError(f"eta must lie in (0, 1), got {eta}")
    base = base_size_for(alpha, r)
    log_n = log_cut_count_bound(vertices, alpha, r)
    if base >= vertices:
        return EnumerationPlan(alpha, r, 1, base, eta, vertices, log_n, schedule)

    log_budget = log_n - math.log(eta)
    if schedule == "cut_count":
        log_trials = log_n + math.log(log_budget)
    elif schedule == "survival":
        # Per-trial survival of a fixed alpha-minimum cut down to `base` supervertices.
        ratio = 2.0 * alpha * (r - 1)
        log_q = sum(math.log1p(-ratio / i) for i in range(base + 1, vertices + 1))
        log_q = max(log_q, -log_n)
        log_trials = math.log(log_budget) - log_q
    else:
        raise InputError(f"unknown trial schedule {schedule!r}")

    if log_trials > math.log(max_trials):
        raise BudgetError(
            f"enumeration at alpha={alpha:.4f} needs about {math.exp(min(log_trials, 700)):.3g} "
            f"contraction trials > budget {max_trials}",
            required=math.exp(min(log_trials, 700)))
    trials = max(1, math.ceil(math.exp(log_trials)))
    return EnumerationPlan(alpha, r, trials, base, eta, vertices, log_n, schedule)


def _signature_masks(sides: np.ndarray) -> List[int]:
    n = sides.shape[1]
    if n <= 62:
        powers = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
        return [int(x) for x in sides.astype(np.int64) @ powers]
    return [sum(1 << int(i) for i in np.flatnonzero(row)) for row in sides]


def _base_partitions(labels: np.ndarray, count: int, r: int) -> np.ndarray:
    """Every r-way partition of the supervertices, expressed over original vertices.

    `labels` numbers supervertices by smallest contained vertex, so the rows
    come out already canonical (vertex 0 on side 0, blocks in first-appearance order).
    """
    if count > MAX_BASE_VERTICES:
        raise BudgetError(f"base graph kept {count} supervertices; partition enumeration refused",
                          required=count)
    parts = bipartition_sides(count) if r == 2 else set_partitions(count, r)
    return parts[:, labels].astype(np.int64)


def records_from_partitions(g, view: WeightedView, parts: np.ndarray, r: int,
                             threshold: float, band: float) -> List[CutRecord]:
    if len(parts) == 0:
        return []
    crossing = parts[:, g.tails] != parts[:, g.heads]
    approx = crossing.astype(np.float64) @ view.finite_weights
    crossing_never_fail = (crossing & view.never_fail).any(axis=1)
    tol = 1e-9 * max(1.0, band)
    keep = np.flatnonzero((approx <= band + tol) & ~crossing_never_fail)
    if len(keep) == 0:
        return []
    signatures = _signature_masks(parts[keep].astype(bool)) if r == 2 else \
        [tuple(int(x) for x in row) for row in parts[keep]]
    records = []
    for idx, signature in zip(keep, signatures):
        edge_ids = tuple(int(e) for e in np.flatnonzero(crossing[idx]))
        value = view.cut_value(edge_ids)
        if value > band + tol:
            continue
        records.append(CutRecord(signature, edge_ids, value, r, value > threshold + tol))
    return records


def _contract_to_base(g, view: WeightedView, start: DisjointSet, base: int,
                      rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """Random contraction with edge choice proportional to weight.

    Exponential clocks with rate w_e, processed in arrival order, select the
    next uncontracted edge with probability proportional to its weight.
    """
    ds = start.copy()
    if ds.count > base and g.m:
        w = view.finite_weights
        clocks = rng.exponential(size=g.m)
        with np.errstate(divide="ignore"):
            keys = np.where(w > 0, clocks / np.where(w > 0, w, 1.0), np.inf)
        for e in np.argsort(keys, kind="stable"):
            if not np.isfinite(keys[e]):
                break
            if ds.union(int(g.tails[e]), int(g.heads[e])) and ds.count <= base:
                break
    return ds.labels(), ds.count


def _never_fail_start(g, view: WeightedView) -> DisjointSet:
    start = DisjointSet(g.n)
    for e in np.flatnonzero(view.never_fail):
        start.union(int(g.tails[e]), int(g.heads[e]))
    return start


def single_contraction_trial(g, weights: Optional[WeightedView], plan: EnumerationPlan,
                             rng_stream: np.random.Generator) -> List[CutRecord]:
    """One contraction down to plan.base_size, then every r-way partition of the base graph."""
    view = weights or WeightedView.unit(g)
    labels, count = _contract_to_base(g, view, _never_fail_start(g, view), plan.base_size, rng_stream)
    if count < plan.r:
        return []
    parts = _base_partitions(labels, count, plan.r)
    return records_from_partitions(g, view, parts, plan.r, math.inf, math.inf)


def _run_plan(g, view: WeightedView, plan: EnumerationPlan, minimum: float, seed: int,
              slack: float, threads: int) -> List[CutRecord]:
    threshold = plan.alpha * minimum
    band = threshold * slack
    start = _never_fail_start(g, view)

    def run_chunk(bounds):
        lo, hi = bounds
        found: Dict = {}
        seen = set()
        for t in range(lo, hi):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ENUMERATION_STREAM, t)))
            labels, count = _contract_to_base(g, view, start, plan.base_size, rng)
            key = labels.tobytes()
            if key in seen or count < plan.r:
                continue
            seen.add(key)
            for record in records_from_partitions(g, view, _base_partitions(labels, count, plan.r),
                                                   plan.r, threshold, band):
                found.setdefault(record.signature, record)
        return found

    chunk = max(256, math.ceil(plan.trials / max(1, 4 * threads)))
    bounds = [(lo, min(lo + chunk, plan.trials)) for lo in range(0, plan.trials, chunk)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, bounds))
    else:
        results = [run_chunk(b) for b in bounds]

    merged: Dict = {}
    for found in results:
        for signature, record in found.items():
            merged.setdefault(signature, record)
    records = sorted(merged.values(), key=lambda c: (c.value, c.signature))
    logger.debug("plan alpha=%.4f r=%d trials=%d base=%d -> %d cuts",
                 plan.alpha, plan.r, plan.trials, plan.base_size, len(records))
    return records


def enumerate_alpha_min_cuts(g: Multigraph, weights: Optional[WeightedView] = None,
                             alpha: float = 1.0, eta: float = 0.01, *, seed: int = 0,
                             slack: float = 1.05, schedule: str = "cut_count",
                             threads: int = 1, max_trials: int = 2_000_000) -> List[CutRecord]:
    """Every cut of value <= alpha * c with probability >= 1 - eta, sorted by value.

    Cuts in (alpha*c, alpha*c*slack] are returned too, flagged.
    """
    if alpha < 1:
        raise InputError(f"alpha must be at least 1, got {alpha}")
    if not is_graph_connected(g):
        raise GraphInputError("cut enumeration needs a connected graph")
    view = weights or WeightedView.unit(g)
    minimum = min_cut_value(g, view).value
    if math.isinf(minimum):
        return []
    _, count = quotient_labels(g, view.never_fail)
    plan = make_plan(count, alpha, 2, eta, schedule, max_trials)
    return _run_plan(g, view, plan, minimum, seed, slack, threads)


def enumerate_alpha_min_rway_cuts(g: Multigraph, r: int, alpha: float = 1.0, eta: float = 0.01, *,
                                  weights: Optional[WeightedView] = None, seed: int = 0,
                                  slack: float = 1.05, schedule: str = "cut_count",
                                  threads: int = 1, max_trials: int = 2_000_000,
                                  max_partition_vertices: int = 10) -> List[CutRecord]:
    if r < 2:
        raise InputError("r must be at least 2")
    if r > g.n:
        raise InputError(f"r = {r} exceeds vertex count {g.n}")
    if r == 2:
        return enumerate_alpha_min_cuts(g, weights, alpha, eta, seed=seed, slack=slack,
                                        schedule=schedule, threads=threads, max_trials=max_trials)
    if alpha < 1:
        raise InputError(f"alpha must be at least 1, got {alpha}")
    if not is_graph_connected(g):
        raise GraphInputError("cut enumeration needs a connected graph")
    view = weights or WeightedView.unit(g)
    minimum = min_rway_cut_value(g, r, view, max_partition_vertices).value
    if math.isinf(minimum):
        return []
    _, count = quotient_labels(g, view.never_fail)
    plan = make_plan(count, alpha, r, eta, schedule, max_trials)
    return _run_plan(g, view, plan, minimum, seed, slack, threads)


def check_eulerian(dg: Digraph):
    mismatches = dg.eulerian_mismatches()
    if mismatches:
        detail = ", ".join(f"vertex {v}: in={i} out={o}" for v, i, o in mismatches)
        raise InputError(f"directed graph is not Eulerian ({detail})")


def enumerate_directed_eulerian_cuts(dg: Digraph, alpha: float = 1.0, eta: float = 0.01, *,
                                     seed: int = 0, slack: float = 1.05, schedule: str = "cut_count",
                                     threads: int = 1, max_trials: int = 2_000_000) -> List[CutRecord]:
    """Directed alpha-minimum cuts of an Eulerian digraph via its underlying undirected graph.

    Each undirected cut yields its two directed cuts, each carrying half the edges.
    """
    check_eulerian(dg)
    if not dg.is_strongly_connected():
        raise InputError("directed graph is not strongly connected")
    undirected = enumerate_alpha_min_cuts(dg.underlying(), None, alpha, eta, seed=seed, slack=slack,
                                          schedule=schedule, threads=threads, max_trials=max_trials)
    out = []
    for cut in undirected:
        sides = cut.sides(dg.n)
        for direction in (0, 1):
            ids = tuple(e for e in cut.edge_ids if sides[dg.tails[e]] == direction)
            out.append(CutRecord(cut.signature, ids, float(len(ids)), 2, cut.flagged, direction))
    return out
