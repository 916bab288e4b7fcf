"""Deterministic approximations of FAIL(p) from the weak cuts.

heuristic_sum_fail adds up the weak cuts' failure probabilities; pas_fail
evaluates inclusion-exclusion over the weak-cut events up to the first depth
whose truncation certificate fits the error budget.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from cut_enum import CutRecord, enumerate_alpha_min_cuts
from data_models import BudgetError, EstimatorParameters, InputError, RegimeError
from dnf import assignment_chunks
from estimators import (
    HEURISTIC_SUM, PAS_INCL_EXCL, Estimate, ReliabilityEngine, decide_regime, delta_for,
    tail_constant, reported_cut
)
from multigraph import Multigraph, WeightedView, is_graph_connected, min_cut_value, quotient_labels

logger = logging.getLogger(__name__)

# Share of epsilon * p_c PAS leaves to the weak-cut tail; truncation gets the rest.
PAS_TAIL_SHARE = 0.1


@dataclass
class PartitionTail:
    """s[r] = Pr[>= r components], p_exact[r] = Pr[exactly r components];
    t[u] / S[u] = Pr[exactly / at least u tracked cut events occur]."""
    s: Dict[int, float]
    p_exact: Dict[int, float]
    t: Dict[int, float] = field(default_factory=dict)
    S: Dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TruncationCertificate:
    k: int
    bound: float
    formula_source: str  # "log_way" | "alpha_root_way" | "next_term" | "complete"


def event_bound_ways(u: int, alpha: float) -> Tuple[int, str]:
    """Number of components r forced when u distinct alpha-minimum cuts fail, and which bound gave it."""
    log_way = max(2, math.ceil(math.log2(u + 1)) + 1)
    root_way = math.ceil(u ** (1.0 / (2.0 * alpha)) - 1e-12)
    if root_way > log_way:
        return root_way, "alpha_root_way"
    return log_way, "log_way"


def truncation_certificate(n_events: int, k: int, n: int, delta: float, alpha: float,
                           next_term: Optional[float] = None) -> TruncationCertificate:
    """Bound on the error of truncating inclusion-exclusion at k.

    The tail form sums C(u-2, k-2) times the bound n^(-delta r_u / 2) on
    Pr[S_u] over u >= k. The error is also at most the k-th term itself
    (C(c-1, k-1) <= C(c, k) whenever c >= k), so that is used when smaller.
    """
    if k < 2:
        raise InputError("truncation depth k must be at least 2")
    if k > n_events:
        return TruncationCertificate(k, 0.0, "complete")
    terms = []
    source = "log_way"
    for u in range(k, n_events + 1):
        ways, which = event_bound_ways(u, alpha)
        if which == "alpha_root_way":
            source = which
        log_s = -delta * ways / 2.0 * math.log(n)
        terms.append(float(comb(u - 2, k - 2, exact=True)) * min(1.0, math.exp(log_s)))
    bound = math.fsum(terms)
    if next_term is not None and next_term < bound:
        return TruncationCertificate(k, next_term, "next_term")
    return TruncationCertificate(k, bound, source)


def _event_matrix(cuts: Sequence[CutRecord], m: int) -> np.ndarray:
    mat = np.zeros((len(cuts), m), dtype=bool)
    for i, cut in enumerate(cuts):
        mat[i, list(cut.edge_ids)] = True
    return mat


def _failure_logs(g) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(g.p)


def inclusion_exclusion_term(events: np.ndarray, log_p: np.ndarray, j: int, chunk: int = 4096) -> float:
    """Sum over j-subsets of events of the probability that every edge in their union fails."""
    total = []
    combos = combinations(range(len(events)), j)
    while True:
        block = np.array([c for _, c in zip(range(chunk), combos)], dtype=np.int64)
        if block.size == 0:
            break
        union = events[block].any(axis=1)
        with np.errstate(invalid="ignore"):
            logs = np.where(union, log_p, 0.0).sum(axis=1)
        total.append(math.fsum(np.exp(logs).tolist()))
    return math.fsum(total)


def pair_intersection_sum(events: np.ndarray, log_p: np.ndarray) -> float:
    parts = []
    for i in range(len(events) - 1):
        union = events[i] | events[i + 1:]
        parts.append(math.fsum(np.exp(np.where(union, log_p, 0.0).sum(axis=1)).tolist()))
    return math.fsum(parts)


class DeterministicApproximator:
    def __init__(self, params: EstimatorParameters = None):
        self.engine = ReliabilityEngine(params)
        self.params = self.engine.params

    def _weak_cuts(self, g: Multigraph, problem: str, cuts: Optional[List[CutRecord]],
                   alpha: Optional[float], tail_share: float = 0.5):
        if g.n < 2 or not is_graph_connected(g):
            raise InputError(f"{problem} needs a connected graph with at least 2 vertices")
        view = WeightedView.from_probabilities(g)
        minimum = min_cut_value(g, view).value
        if math.isinf(minimum):
            raise InputError(f"{problem}: every cut crosses a never-failing edge, FAIL = 0")
        decision = decide_regime(-minimum, g.n)
        delta = delta_for(-minimum, math.log(g.n))
        if delta <= 0:
            raise RegimeError(f"{problem} needs p_c < n^-2 (delta > 0), got delta = {delta:.4f}",
                              required=math.exp(-2 * math.log(g.n)))
        total_weight = float(view.finite_weights.sum())
        if alpha is None:
            _, vertices = quotient_labels(g, view.never_fail)
            plan = self.engine.weak_cut_plan(log_p_c=-minimum, log_p_target=-minimum,
                                              log_base=math.log(g.n), r=2, vertices=vertices,
                                              weight_ratio=total_weight / minimum,
                                              tail_share=tail_share)
            alpha = plan.alpha
        if cuts is None:
            cuts = enumerate_alpha_min_cuts(g, view, alpha, self.params.eta, **self.engine.enumeration_kwargs())
        complete = alpha * minimum >= total_weight
        tail = 0.0 if complete else tail_constant(delta) * math.exp(-alpha * delta * math.log(g.n))
        return cuts, minimum, decision, delta, alpha, tail

    def heuristic_sum_fail(self, g: Multigraph, cuts: Optional[List[CutRecord]] = None,
                           alpha: Optional[float] = None) -> Estimate:
        """Sum of the weak cuts' failure probabilities.

        The certificate max(sum of pairwise intersections, weak-cut tail) bounds
        the absolute error: the sum overshoots the union by at most the pair
        term and the union misses at most the tail.
        """
        started = time.perf_counter()
        cuts, minimum, decision, delta, alpha, tail = self._weak_cuts(g, "heuristic", cuts, alpha)
        if decision.branch == "mc":
            raise RegimeError(f"heuristic needs p_c < n^-4, got p_c = {decision.p_c:.6g} >= "
                              f"{decision.threshold:.6g}", required=decision.threshold)
        if not cuts:
            raise InputError("no weak cuts to sum")
        log_p = _failure_logs(g)
        events = _event_matrix(cuts, g.m)
        value = math.fsum(math.exp(float(np.where(row, log_p, 0.0).sum())) for row in events)
        pairs = pair_intersection_sum(events, log_p)
        bound = max(pairs, tail)
        asymptotic = 2.0 * math.exp(-1.5 * delta * math.log(g.n))
        if delta <= 4:
            logger.warning("heuristic: delta = %.4f <= 4, the (1 + o(1)) guarantee is not established; "
                           "rely on the certified bound", delta)
        details = {'pair_intersections': pairs, 'tail_bound': tail,
                   'asymptotic_relative_error': asymptotic, 'delta_gt_4': delta > 4}
        return Estimate(value=min(1.0, value), epsilon=self.params.epsilon, method=HEURISTIC_SUM,
                        seed=self.params.seed, eta=self.params.eta, n=g.n, m=g.m,
                        min_cut=reported_cut(g, minimum), p_c=decision.p_c, delta=delta, alpha=alpha,
                        cuts_enumerated=len(cuts), certified_error_bound=bound,
                        wall_ms=(time.perf_counter() - started) * 1000.0, problem="heuristic",
                        details=details)

    def pas_fail(self, g: Multigraph, cuts: Optional[List[CutRecord]] = None,
                 alpha: Optional[float] = None) -> Estimate:
        """Truncated inclusion-exclusion over the weak-cut events.

        Truncating at k keeps terms j = 1..k-1. The truncation certificate and
        the enumeration tail share the budget epsilon * p_c: k grows until the
        certificate fits epsilon * p_c - tail, so the certified bound never
        exceeds epsilon * p_c. The default alpha holds the tail to
        PAS_TAIL_SHARE * epsilon * p_c.
        """
        started = time.perf_counter()
        eps = self.params.epsilon
        cuts, minimum, decision, delta, alpha, tail = self._weak_cuts(g, "pas", cuts, alpha,
                                                                      tail_share=PAS_TAIL_SHARE)
        if not cuts:
            raise InputError("no weak cuts to evaluate")
        budget = eps * decision.p_c - tail
        if budget <= 0:
            raise RegimeError(f"weak-cut tail {tail:.3g} at alpha = {alpha:.4f} already exceeds "
                              f"epsilon * p_c = {eps * decision.p_c:.3g}", required=tail / decision.p_c)
        log_p = _failure_logs(g)
        events = _event_matrix(cuts, g.m)
        terms: List[float] = []
        evaluated = 0
        certificate = None
        for k in range(2, self.params.pas_max_k + 1):
            # The certificate at depth k needs terms 1..k (term k bounds the truncation error).
            while len(terms) < min(k, len(cuts)):
                j = len(terms) + 1
                evaluated += comb(len(cuts), j, exact=True)
                if evaluated > self.params.pas_max_terms:
                    raise BudgetError(f"inclusion-exclusion term {j} over {len(cuts)} cuts exceeds "
                                      f"the budget of {self.params.pas_max_terms} intersections",
                                      required=evaluated)
                terms.append(inclusion_exclusion_term(events, log_p, j))
            next_term = terms[k - 1] if k <= len(cuts) else 0.0
            certificate = truncation_certificate(len(cuts), k, g.n, delta, alpha, next_term)
            if certificate.bound <= budget:
                break
        else:
            raise BudgetError(f"truncation certificate {certificate.bound:.3g} still exceeds "
                              f"epsilon * p_c - tail = {budget:.3g} at k = {self.params.pas_max_k}",
                              required=self.params.pas_max_k + 1)
        terms = terms[:certificate.k - 1]
        value = math.fsum(t if j % 2 == 0 else -t for j, t in enumerate(terms))
        logger.info("pas: %d cuts, k=%d, certificate=%.3g, tail=%.3g", len(cuts), certificate.k,
                    certificate.bound, tail)
        details = {'k': certificate.k, 'truncation_bound': certificate.bound,
                   'formula_source': certificate.formula_source, 'tail_bound': tail,
                   'terms': terms}
        return Estimate(value=min(1.0, max(0.0, value)), epsilon=eps, method=PAS_INCL_EXCL,
                        seed=self.params.seed, eta=self.params.eta, n=g.n, m=g.m,
                        min_cut=reported_cut(g, minimum), p_c=decision.p_c, delta=delta, alpha=alpha,
                        cuts_enumerated=len(cuts), certified_error_bound=certificate.bound + tail,
                        wall_ms=(time.perf_counter() - started) * 1000.0, problem="pas",
                        details=details)


def truncation_error_exact(events: Sequence[Sequence[int]], probabilities: Sequence[float],
                           k: int, max_variables: int = 20) -> Tuple[float, float]:
    """Both sides of the truncation identity, by enumerating every variable assignment.

    Event i occurs when every variable in events[i] is true; variable v is true
    with probability probabilities[v]. Returns (|truncated sum - exact union|,
    sum over u >= k of C(u-2, k-2) Pr[at least u events occur]).
    """
    if k < 2:
        raise InputError("truncation depth k must be at least 2")
    used = sorted({int(v) for event in events for v in event})
    if len(used) > max_variables:
        raise BudgetError(f"{len(used)} variables exceed the enumeration budget {max_variables}",
                          required=len(used))
    position = {v: i for i, v in enumerate(used)}
    q = np.array([float(probabilities[v]) for v in used])
    mat = np.zeros((len(events), len(used)), dtype=np.int32)
    for i, event in enumerate(events):
        mat[i, [position[int(v)] for v in event]] = 1
    sizes = mat.sum(axis=1)

    weight_parts, count_parts = [], []
    for bits in assignment_chunks(len(used)):
        weight_parts.append(np.prod(np.where(bits, q, 1.0 - q), axis=1))
        count_parts.append(((bits.astype(np.int32) @ mat.T) == sizes).sum(axis=1))
    weights = np.concatenate(weight_parts)
    counts = np.concatenate(count_parts)

    exact = math.fsum(weights[counts >= 1].tolist())
    truncated = math.fsum(
        (-1) ** (j + 1) * math.fsum((weights * comb(counts, j)).tolist()) for j in range(1, k)
    )
    lemma = math.fsum(
        float(comb(u - 2, k - 2, exact=True)) * math.fsum(weights[counts >= u].tolist())
        for u in range(k, len(events) + 1)
    )
    return abs(truncated - exact), lemma


def truncated_sum(events, probabilities, k: int) -> float:
    """Inclusion-exclusion over explicit events, keeping terms j = 1..k-1."""
    p = np.asarray(probabilities, dtype=np.float64)
    mat = np.zeros((len(events), len(p)), dtype=bool)
    for i, event in enumerate(events):
        mat[i, list(event)] = True
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    terms = [inclusion_exclusion_term(mat, log_p, j) for j in range(1, min(k, len(events) + 1))]
    return math.fsum(t if j % 2 == 0 else -t for j, t in enumerate(terms))


def heuristic_sum_fail(g, seed=0, cuts=None, alpha=None, **kwargs) -> Estimate:
    return DeterministicApproximator(EstimatorParameters(seed=seed, **kwargs)).heuristic_sum_fail(g, cuts, alpha)


def pas_fail(g, epsilon=0.05, cuts=None, alpha=None, **kwargs) -> Estimate:
    return DeterministicApproximator(EstimatorParameters(epsilon=epsilon, **kwargs)).pas_fail(g, cuts, alpha)
