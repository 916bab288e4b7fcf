import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from cut_enum import (
    CutRecord, base_size_for, enumerate_alpha_min_cuts, enumerate_alpha_min_rway_cuts,
    enumerate_directed_eulerian_cuts, check_eulerian, make_plan
)
from data_models import BudgetError, EstimatorParameters, InputError, RegimeError
from dnf import (
    build_cut_failure_formula, build_k_failure_formula, build_orientation_formula,
    estimate_union_probability
)
from multigraph import (
    Digraph, Multigraph, WeightedView, build, component_counts, component_labels,
    connected_rows, is_graph_connected, k_edge_connected_rows, min_cut_value,
    min_directed_cut_value, min_rway_cut_value, min_terminal_cut_value, quotient_labels,
    strongly_connected_rows, terminals_connected_rows
)

logger = logging.getLogger(__name__)

MONTE_CARLO = "monte_carlo"
CUT_ENUM_DNF = "cut_enum_dnf"
EXACT_ORACLE = "exact_oracle"
HEURISTIC_SUM = "heuristic_sum"
PAS_INCL_EXCL = "pas_incl_excl"

MC_STREAM = 2

# Problems whose estimate is a failure probability; `reliability` is reported for these.
FAILURE_PROBLEMS = ("rel", "kconn", "multiterm", "rway", "eulerian", "orient", "heuristic", "pas")


@dataclass
class Estimate:
    value: float
    epsilon: float
    method: str
    seed: Optional[int] = None
    eta: Optional[float] = None
    n: int = 0
    m: int = 0
    min_cut: Optional[float] = None
    p_c: Optional[float] = None
    delta: Optional[float] = None
    alpha: Optional[float] = None
    cuts_enumerated: Optional[int] = None
    trials: Optional[int] = None
    certified_error_bound: Optional[float] = None
    wall_ms: Optional[float] = None
    problem: str = "rel"
    details: Dict = field(default_factory=dict)

    @property
    def reliability(self) -> Optional[float]:
        if self.problem not in FAILURE_PROBLEMS:
            return None
        return 1.0 - self.value

    def to_report(self, timing: bool = False) -> Dict:
        return {
            'estimate': self.value,
            'method': self.method,
            'epsilon': self.epsilon,
            'eta': self.eta,
            'seed': self.seed,
            'n': self.n,
            'm': self.m,
            'min_cut': self.min_cut,
            'p_c': self.p_c,
            'delta': self.delta,
            'alpha': self.alpha,
            'cuts_enumerated': self.cuts_enumerated,
            'trials': self.trials,
            'certified_error_bound': self.certified_error_bound,
            'wall_ms': self.wall_ms if timing else None,
            'problem': self.problem,
            'reliability': self.reliability,
            'details': dict(self.details),
        }


@dataclass(frozen=True)
class RegimeDecision:
    """Log-space comparison of the lower bound p_c against the Monte Carlo threshold."""
    log_p_c: float
    log_threshold: float
    branch: str  # "mc" | "small"

    @property
    def p_c(self) -> float:
        return math.exp(self.log_p_c)

    @property
    def threshold(self) -> float:
        return math.exp(self.log_threshold)


@dataclass(frozen=True)
class WeakCutPlan:
    alpha: float
    delta: float
    epsilon_tail: float
    epsilon_dnf: float
    complete: bool
    exhaustive: bool
    trials: int


def log_base_size(n: int, r: int = 2) -> float:
    """ln N_base: n for 2-way cuts, (rn)^(r-1) for r-way cuts."""
    if r == 2:
        return math.log(n)
    return (r - 1) * math.log(r * n)


def decide_regime(log_p_c: float, n: int, r: int = 2) -> RegimeDecision:
    log_threshold = -4.0 * log_base_size(n, r)
    branch = "mc" if log_p_c >= log_threshold else "small"
    return RegimeDecision(log_p_c, log_threshold, branch)


def delta_for(log_p_c: float, log_base: float) -> float:
    """delta with p_c = N_base^-(2 + delta)."""
    return -log_p_c / log_base - 2.0


def tail_constant(delta: float, directed: bool = False) -> float:
    constant = max(2.0, 1.0 + 2.0 / delta)
    return 2.0 * constant if directed else constant


def weak_cut_alpha(delta: float, log_p_target: float, log_base: float, epsilon_tail: float,
                   directed: bool = False) -> float:
    """Smallest alpha whose weak-cut tail B * N_base^(-alpha delta) stays below epsilon_tail * p_target."""
    if delta <= 0:
        return math.inf
    B = tail_constant(delta, directed)
    return (math.log(B / epsilon_tail) - log_p_target) / (delta * log_base)


def poisson_binomial_below(probabilities: Sequence[float], k: int) -> float:
    """Pr[fewer than k successes] for independent trials with the given success probabilities."""
    dist = np.array([1.0])
    for q in probabilities:
        dist = np.convolve(dist, [1.0 - q, q])
    return float(min(1.0, dist[:k].sum()))


def reported_cut(g, weighted_value: float) -> Optional[float]:
    if math.isinf(weighted_value):
        return None
    p = g.uniform_p
    if p is not None and 0.0 < p < 1.0:
        return float(round(weighted_value / -math.log(p)))
    return weighted_value


def _component_subgraph(g: Multigraph, vertex: int) -> Tuple[Multigraph, np.ndarray]:
    """The connected component holding `vertex`, relabelled; returns (subgraph, old -> new map)."""
    labels = component_labels(g.n, g.tails, g.heads, np.ones((1, g.m), dtype=bool))[0]
    keep = labels == labels[vertex]
    mapping = np.full(g.n, -1, dtype=np.int64)
    mapping[keep] = np.arange(int(keep.sum()))
    edges = [(int(mapping[u]), int(mapping[v]), p) for u, v, p in g.edges if keep[u]]
    return build(int(keep.sum()), edges), mapping


class ReliabilityEngine:
    def __init__(self, params: EstimatorParameters = None):
        self.params = (params or EstimatorParameters()).validate()

    def _estimate(self, value: float, method: str, g, started: float, **kwargs) -> Estimate:
        return Estimate(
            value=float(min(1.0, max(0.0, value))),
            epsilon=self.params.epsilon,
            method=method,
            seed=self.params.seed,
            eta=self.params.eta,
            n=g.n,
            m=g.m,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            **kwargs
        )

    def _exact(self, value: float, g, started: float, problem: str, reason: str, **kwargs) -> Estimate:
        logger.info("%s: %s, returning %s exactly", problem, reason, value)
        details = dict(kwargs.pop('details', {}))
        details['reason'] = reason
        return self._estimate(value, EXACT_ORACLE, g, started, problem=problem, details=details, **kwargs)

    # Monte Carlo

    def _run_monte_carlo(self, m: int, fails: Callable[[np.ndarray], np.ndarray],
                         log_p_c: float) -> Tuple[float, int]:
        """Failure frequency over independent trials.

        `fails` maps a (trials x m) matrix of uniforms to a per-trial failure flag.
        The trial count comes from the lower bound p_c; sampling stops early
        once the observed failure count reaches 3 ln(2/eta)/epsilon^2.
        """
        eps, eta = self.params.epsilon, self.params.eta
        stop_at = math.ceil(3.0 * math.log(2.0 / eta) / eps ** 2)
        log_trials = math.log(stop_at) - log_p_c
        if log_trials > math.log(self.params.max_mc_trials):
            required = math.exp(min(log_trials, 700.0))
            raise BudgetError(f"Monte Carlo needs about {required:.3g} trials "
                              f"(3 ln(2/eta) / (epsilon^2 p_c) with p_c = {math.exp(log_p_c):.3g}) "
                              f"> budget {self.params.max_mc_trials}", required=required)
        n_trials = math.ceil(math.exp(log_trials))
        batch = self.params.mc_batch_size
        chunks = [(j, min(batch, n_trials - j * batch)) for j in range((n_trials + batch - 1) // batch)]
        seed = self.params.seed

        def run_chunk(item):
            j, size = item
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(MC_STREAM, j)))
            return fails(rng.random((size, m)))

        threads = max(1, self.params.threads)
        failures = trials = 0
        stopped = False
        pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        try:
            for start in range(0, len(chunks), threads):
                wave = chunks[start:start + threads]
                outcomes = list(pool.map(run_chunk, wave)) if pool else [run_chunk(c) for c in wave]
                for outcome in outcomes:
                    hits = np.flatnonzero(outcome)
                    needed = stop_at - failures
                    if len(hits) >= needed:
                        trials += int(hits[needed - 1]) + 1
                        failures = stop_at
                        stopped = True
                        break
                    failures += len(hits)
                    trials += len(outcome)
                if stopped:
                    break
        finally:
            if pool:
                pool.shutdown()
        logger.info("monte carlo: %d failures in %d trials (planned %d%s)",
                    failures, trials, n_trials, ", stopped early" if stopped else "")
        return failures / trials, trials

    # Weak-cut pipeline

    def weak_cut_plan(self, *, log_p_c: float, log_p_target: float, log_base: float, r: int,
                       vertices: int, weight_ratio: float, directed: bool = False,
                       tail_share: float = 0.5) -> WeakCutPlan:
        """Alpha whose enumeration tail is at most tail_share * epsilon * p_target."""
        eps = self.params.epsilon
        eps_tail = eps * tail_share
        delta = delta_for(log_p_c, log_base)
        alpha = weak_cut_alpha(delta, log_p_target, log_base, eps_tail, directed)
        complete = alpha >= weight_ratio
        alpha = max(1.0, min(alpha, weight_ratio))
        exhaustive = base_size_for(alpha, r) >= vertices
        if alpha > self.params.alpha_cap and not exhaustive:
            raise RegimeError(
                f"weak-cut enumeration needs alpha = {alpha:.4f} > alpha cap {self.params.alpha_cap} "
                f"(B * N^(-alpha delta) <= {eps_tail:.3g} p_c with delta = {delta:.4f})", required=alpha)
        plan = make_plan(vertices, alpha, r, self.params.eta / 2.0, self.params.trial_schedule,
                         self.params.max_contraction_trials)
        logger.info("weak cuts: delta=%.4f alpha=%.4f r=%d trials=%d%s%s", delta, alpha, r, plan.trials,
                    " exhaustive" if exhaustive else "", " complete" if complete else "")
        return WeakCutPlan(alpha, delta, eps_tail, eps if complete else eps / 2.0,
                           complete, exhaustive, plan.trials)

    def enumeration_kwargs(self) -> Dict:
        return dict(seed=self.params.seed, slack=self.params.slack, schedule=self.params.trial_schedule,
                    threads=self.params.threads, max_trials=self.params.max_contraction_trials)

    def _union_estimate(self, formula, plan: WeakCutPlan):
        return estimate_union_probability(formula, plan.epsilon_dnf, self.params.eta / 2.0, self.params.seed,
                                          threads=self.params.threads, batch_size=self.params.dnf_batch_size)

    def _small_estimate(self, g, started: float, problem: str, cuts: List[CutRecord], formula,
                        plan: WeakCutPlan, decision: RegimeDecision, min_cut, details: Dict) -> Estimate:
        coverage = self._union_estimate(formula, plan)
        details = dict(details)
        details.update({'dnf_clauses': coverage.clauses, 'dnf_samples': coverage.samples,
                        'exhaustive_enumeration': plan.exhaustive, 'all_cuts': plan.complete,
                        'log_p_c': decision.log_p_c})
        return self._estimate(coverage.value, CUT_ENUM_DNF, g, started, problem=problem,
                              min_cut=min_cut, p_c=decision.p_c, delta=plan.delta, alpha=plan.alpha,
                              cuts_enumerated=len(cuts), trials=plan.trials, details=details)

    def _mc_estimate(self, g, started: float, problem: str, fails, decision: RegimeDecision,
                     log_base: float, min_cut, details: Dict) -> Estimate:
        value, trials = self._run_monte_carlo(g.m, fails, decision.log_p_c)
        details = dict(details)
        details['log_p_c'] = decision.log_p_c
        return self._estimate(value, MONTE_CARLO, g, started, problem=problem, min_cut=min_cut,
                              p_c=decision.p_c, delta=delta_for(decision.log_p_c, log_base),
                              trials=trials, details=details)

    def _use_monte_carlo(self, decision: RegimeDecision) -> bool:
        if self.params.method == "mc":
            return True
        if self.params.method == "cutenum":
            return False
        return decision.branch == "mc"

    # All-terminal

    def _trivial_fail(self, g: Multigraph, started: float, problem: str = "rel") -> Optional[Estimate]:
        if g.n == 1:
            return self._exact(0.0, g, started, problem, "single vertex")
        if not is_graph_connected(g):
            return self._exact(1.0, g, started, problem, "graph is disconnected")
        return None

    def _all_terminal_setup(self, g: Multigraph):
        view = WeightedView.from_probabilities(g)
        minimum = min_cut_value(g, view).value
        return view, minimum

    def estimate_fail(self, g: Multigraph) -> Estimate:
        started = time.perf_counter()
        trivial = self._trivial_fail(g, started)
        if trivial:
            return trivial
        view, minimum = self._all_terminal_setup(g)
        if math.isinf(minimum):
            return self._exact(0.0, g, started, "rel", "every cut crosses a never-failing edge")
        decision = decide_regime(-minimum, g.n)
        logger.info("rel: n=%d m=%d c_hat=%.6g p_c=%.6g threshold=%.6g -> %s",
                    g.n, g.m, minimum, decision.p_c, decision.threshold, decision.branch)
        if self._use_monte_carlo(decision):
            return self._fail_monte_carlo(g, view, minimum, decision, started)
        return self._fail_small(g, view, minimum, decision, started)

    def estimate_fail_monte_carlo(self, g: Multigraph) -> Estimate:
        started = time.perf_counter()
        trivial = self._trivial_fail(g, started)
        if trivial:
            return trivial
        view, minimum = self._all_terminal_setup(g)
        if math.isinf(minimum):
            return self._exact(0.0, g, started, "rel", "every cut crosses a never-failing edge")
        return self._fail_monte_carlo(g, view, minimum, decide_regime(-minimum, g.n), started)

    def estimate_fail_small(self, g: Multigraph) -> Estimate:
        started = time.perf_counter()
        trivial = self._trivial_fail(g, started)
        if trivial:
            return trivial
        view, minimum = self._all_terminal_setup(g)
        if math.isinf(minimum):
            return self._exact(0.0, g, started, "rel", "every cut crosses a never-failing edge")
        decision = decide_regime(-minimum, g.n)
        if decision.branch == "mc" and self.params.method != "cutenum":
            raise RegimeError(f"p_c = {decision.p_c:.6g} >= n^-4 = {decision.threshold:.6g}; "
                              f"the cut-enumeration branch needs p_c < n^-4", required=decision.threshold)
        return self._fail_small(g, view, minimum, decision, started)

    def _fail_monte_carlo(self, g, view, minimum, decision, started) -> Estimate:
        p = g.p

        def fails(u):
            return ~connected_rows(g, u >= p)

        return self._mc_estimate(g, started, "rel", fails, decision, math.log(g.n),
                                 reported_cut(g, minimum), {})

    def _fail_small(self, g, view, minimum, decision, started) -> Estimate:
        _, vertices = quotient_labels(g, view.never_fail)
        ratio = float(view.finite_weights.sum()) / minimum if minimum > 0 else math.inf
        plan = self.weak_cut_plan(log_p_c=-minimum, log_p_target=-minimum, log_base=math.log(g.n), r=2,
                                   vertices=vertices, weight_ratio=ratio)
        cuts = enumerate_alpha_min_cuts(g, view, plan.alpha, self.params.eta / 2.0,
                                        **self.enumeration_kwargs())
        formula = build_cut_failure_formula(cuts, g)
        return self._small_estimate(g, started, "rel", cuts, formula, plan, decision,
                                    reported_cut(g, minimum), {})

    # Multiterminal

    def estimate_multiterminal(self, g: Multigraph, terminals: Sequence[int]) -> Estimate:
        started = time.perf_counter()
        terminals = [int(t) for t in terminals]
        if len(set(terminals)) != len(terminals) or len(terminals) < 2:
            raise InputError("terminal set needs at least 2 distinct vertices")
        if any(not 0 <= t < g.n for t in terminals):
            raise InputError(f"terminals must be vertices in [0, {g.n})")
        details = {'terminals': terminals}
        if not is_graph_connected(g):
            sub, mapping = _component_subgraph(g, terminals[0])
            if np.any(mapping[terminals] < 0):
                return self._exact(1.0, g, started, "multiterm", "terminals lie in different components",
                                   details=details)
            estimate = ReliabilityEngine(self.params).estimate_multiterminal(sub, mapping[terminals].tolist())
            estimate.n, estimate.m = g.n, g.m
            estimate.details.update(details)
            return estimate
        view = WeightedView.from_probabilities(g)
        terminal_cut = min_terminal_cut_value(g, terminals, view).value
        if math.isinf(terminal_cut):
            return self._exact(0.0, g, started, "multiterm", "terminals joined by never-failing edges",
                               details=details)
        minimum = min_cut_value(g, view).value
        beta = terminal_cut / minimum if minimum > 0 else 1.0
        details['beta'] = beta
        decision = decide_regime(-terminal_cut, g.n)
        logger.info("multiterm: |K|=%d c_K=%.6g beta=%.4f -> %s", len(terminals), terminal_cut, beta,
                    decision.branch)
        if self._use_monte_carlo(decision):
            p = g.p

            def fails(u):
                return ~terminals_connected_rows(g, u >= p, terminals)

            return self._mc_estimate(g, started, "multiterm", fails, decision, math.log(g.n),
                                     reported_cut(g, terminal_cut), details)

        _, vertices = quotient_labels(g, view.never_fail)
        ratio = float(view.finite_weights.sum()) / minimum if minimum > 0 else math.inf
        plan = self.weak_cut_plan(log_p_c=-minimum, log_p_target=-terminal_cut, log_base=math.log(g.n),
                                   r=2, vertices=vertices, weight_ratio=ratio)
        cuts = enumerate_alpha_min_cuts(g, view, plan.alpha, self.params.eta / 2.0,
                                        **self.enumeration_kwargs())
        separating = [c for c in cuts if len(set(c.sides(g.n)[terminals].tolist())) > 1]
        if not separating:
            raise RegimeError(f"no enumerated cut separates the terminals at alpha = {plan.alpha:.4f} "
                              f"(beta = {beta:.4f})", required=beta)
        formula = build_cut_failure_formula(separating, g)
        return self._small_estimate(g, started, "multiterm", separating, formula, plan, decision,
                                    reported_cut(g, terminal_cut), details)

    # k-edge-connectivity

    def estimate_kconn_failure(self, g: Multigraph, k: int) -> Estimate:
        started = time.perf_counter()
        if k < 1:
            raise InputError("k must be at least 1")
        if k == 1:
            estimate = self.estimate_fail(g)
            estimate.problem = "kconn"
            estimate.details['k'] = 1
            return estimate
        details = {'k': k}
        trivial = self._trivial_fail(g, started, "kconn")
        if trivial:
            trivial.details.update(details)
            return trivial
        unit = WeightedView.unit(g)
        cut = min_cut_value(g, unit)
        c = int(round(cut.value))
        if c < k:
            return self._exact(1.0, g, started, "kconn", f"minimum cut {c} < k = {k}",
                               min_cut=float(c), details=details)
        crossing = np.flatnonzero(cut.side[g.tails] != cut.side[g.heads])
        p_c = poisson_binomial_below(1.0 - g.p[crossing], k)
        if p_c <= 0.0:
            raise RegimeError(f"the minimum cut keeps at least k = {k} never-failing edges; "
                              f"no positive failure lower bound", required=k)
        decision = decide_regime(math.log(p_c), g.n)
        logger.info("kconn: k=%d c=%d p_c=%.6g -> %s", k, c, p_c, decision.branch)
        if self._use_monte_carlo(decision):
            p = g.p
            limit = self.params.max_partition_vertices

            def fails(u):
                return ~k_edge_connected_rows(g, u >= p, k, limit)

            return self._mc_estimate(g, started, "kconn", fails, decision, math.log(g.n), float(c), details)

        plan = self.weak_cut_plan(log_p_c=decision.log_p_c, log_p_target=decision.log_p_c,
                                   log_base=math.log(g.n), r=2, vertices=g.n, weight_ratio=g.m / c)
        cuts = enumerate_alpha_min_cuts(g, unit, plan.alpha, self.params.eta / 2.0,
                                        **self.enumeration_kwargs())
        formula = build_k_failure_formula(cuts, g, k)
        return self._small_estimate(g, started, "kconn", cuts, formula, plan, decision, float(c), details)

    # Eulerian strong connectivity

    def estimate_eulerian_strong_failure(self, dg: Digraph) -> Estimate:
        started = time.perf_counter()
        check_eulerian(dg)
        if dg.n == 1:
            return self._exact(0.0, dg, started, "eulerian", "single vertex")
        if not dg.is_strongly_connected():
            return self._exact(1.0, dg, started, "eulerian", "digraph is not strongly connected")
        view = WeightedView.from_probabilities(dg)
        directed_cut = min_directed_cut_value(dg, view).value
        if math.isinf(directed_cut):
            return self._exact(0.0, dg, started, "eulerian", "every directed cut holds a never-failing arc")
        decision = decide_regime(-directed_cut, dg.n)
        uniform = dg.uniform_p
        underlying = dg.underlying()
        c_h = int(round(min_cut_value(underlying).value))
        details = {'underlying_min_cut': c_h}
        logger.info("eulerian: c_H=%d directed c_hat=%.6g -> %s", c_h, directed_cut, decision.branch)
        use_mc = self._use_monte_carlo(decision)
        if not use_mc and uniform is None:
            if self.params.method == "cutenum":
                raise RegimeError("directed weak-cut enumeration needs a uniform arc failure probability")
            use_mc = True
        if use_mc:
            p = dg.p

            def fails(u):
                return ~strongly_connected_rows(dg.n, dg.tails, dg.heads, u >= p)

            return self._mc_estimate(dg, started, "eulerian", fails, decision, math.log(dg.n),
                                     reported_cut(dg, directed_cut), details)

        plan = self.weak_cut_plan(log_p_c=decision.log_p_c, log_p_target=decision.log_p_c,
                                   log_base=math.log(dg.n), r=2, vertices=dg.n,
                                   weight_ratio=dg.m / c_h, directed=True)
        cuts = enumerate_directed_eulerian_cuts(dg, plan.alpha, self.params.eta / 2.0,
                                                **self.enumeration_kwargs())
        formula = build_cut_failure_formula(cuts, dg)
        return self._small_estimate(dg, started, "eulerian", cuts, formula, plan, decision,
                                    reported_cut(dg, directed_cut), details)

    # Random orientations

    def estimate_orientation_failure(self, g: Multigraph) -> Estimate:
        started = time.perf_counter()
        if g.n == 1:
            return self._exact(0.0, g, started, "orient", "single vertex")
        if not is_graph_connected(g):
            return self._exact(1.0, g, started, "orient", "graph is disconnected")
        unit = WeightedView.unit(g)
        c = int(round(min_cut_value(g, unit).value))
        # A fixed minimum cut is one-directional with probability 2^(1-c).
        decision = decide_regime((1 - c) * math.log(2.0), g.n)
        logger.info("orient: c=%d p_c=%.6g -> %s", c, decision.p_c, decision.branch)
        if self._use_monte_carlo(decision):
            both_tails = np.concatenate([g.tails, g.heads])
            both_heads = np.concatenate([g.heads, g.tails])

            def fails(u):
                forward = u < 0.5
                alive = np.concatenate([forward, ~forward], axis=1)
                return ~strongly_connected_rows(g.n, both_tails, both_heads, alive)

            estimate = self._mc_estimate(g, started, "orient", fails, decision, math.log(g.n), float(c), {})
            estimate.delta = delta_for(-c * math.log(2.0), math.log(g.n))
            return estimate

        plan = self.weak_cut_plan(log_p_c=-c * math.log(2.0), log_p_target=decision.log_p_c,
                                   log_base=math.log(g.n), r=2, vertices=g.n, weight_ratio=g.m / c,
                                   directed=True)
        cuts = enumerate_alpha_min_cuts(g, unit, plan.alpha, self.params.eta / 2.0,
                                        **self.enumeration_kwargs())
        formula = build_orientation_formula(cuts, g)
        return self._small_estimate(g, started, "orient", cuts, formula, plan, decision, float(c), {})

    # r-way partitions

    def estimate_rway_failure(self, g: Multigraph, r: int) -> Estimate:
        started = time.perf_counter()
        if r < 2:
            raise InputError("r must be at least 2")
        if r > g.n:
            raise InputError(f"r = {r} exceeds vertex count {g.n}")
        if r == 2:
            estimate = self.estimate_fail(g)
            estimate.problem = "rway"
            estimate.details['r'] = 2
            return estimate
        details = {'r': r}
        components = int(component_counts(g, np.ones((1, g.m), dtype=bool))[0])
        if components >= r:
            return self._exact(1.0, g, started, "rway", f"graph already has {components} components",
                               details=details)
        if components > 1:
            raise InputError(f"r-way estimation needs a connected graph or at least r = {r} components")
        view = WeightedView.from_probabilities(g)
        minimum = min_rway_cut_value(g, r, view, self.params.max_partition_vertices).value
        if math.isinf(minimum):
            return self._exact(0.0, g, started, "rway",
                               f"never-failing edges leave fewer than {r} supervertices", details=details)
        log_base = log_base_size(g.n, r)
        decision = decide_regime(-minimum, g.n, r)
        logger.info("rway: r=%d c_r_hat=%.6g p_c=%.6g threshold=%.6g -> %s",
                    r, minimum, decision.p_c, decision.threshold, decision.branch)
        if self._use_monte_carlo(decision):
            p = g.p

            def fails(u):
                return component_counts(g, u >= p) >= r

            return self._mc_estimate(g, started, "rway", fails, decision, log_base,
                                     reported_cut(g, minimum), details)

        _, vertices = quotient_labels(g, view.never_fail)
        ratio = float(view.finite_weights.sum()) / minimum if minimum > 0 else math.inf
        plan = self.weak_cut_plan(log_p_c=-minimum, log_p_target=-minimum, log_base=log_base, r=r,
                                   vertices=vertices, weight_ratio=ratio)
        cuts = enumerate_alpha_min_rway_cuts(g, r, plan.alpha, self.params.eta / 2.0, weights=view,
                                             max_partition_vertices=self.params.max_partition_vertices,
                                             **self.enumeration_kwargs())
        formula = build_cut_failure_formula(cuts, g)
        return self._small_estimate(g, started, "rway", cuts, formula, plan, decision,
                                    reported_cut(g, minimum), details)

    def reliability_curve(self, g: Multigraph, probabilities: Sequence[float]) -> pd.DataFrame:
        """FAIL/REL estimates for a sweep of uniform edge failure probabilities."""
        rows = []
        for p in probabilities:
            estimate = self.estimate_fail(g.with_probability(float(p)))
            rows.append({
                'p': float(p),
                'fail': estimate.value,
                'rel': 1.0 - estimate.value,
                'method': estimate.method,
                'p_c': estimate.p_c,
                'delta': estimate.delta,
                'trials': estimate.trials,
            })
        return pd.DataFrame(rows) if rows else pd.DataFrame()


def _engine(epsilon: float, eta: float, seed: int, **kwargs) -> ReliabilityEngine:
    return ReliabilityEngine(EstimatorParameters(epsilon=epsilon, eta=eta, seed=seed, **kwargs))


def estimate_fail(g, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_fail(g)


def estimate_fail_monte_carlo(g, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_fail_monte_carlo(g)


def estimate_fail_small(g, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_fail_small(g)


def estimate_multiterminal(g, terminals, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_multiterminal(g, terminals)


def estimate_kconn_failure(g, k, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_kconn_failure(g, k)


def estimate_eulerian_strong_failure(dg, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_eulerian_strong_failure(dg)


def estimate_orientation_failure(g, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_orientation_failure(g)


def estimate_rway_failure(g, r, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> Estimate:
    return _engine(epsilon, eta, seed, **kwargs).estimate_rway_failure(g, r)


def reliability_curve(g, probabilities, epsilon=0.05, eta=0.01, seed=0, **kwargs) -> pd.DataFrame:
    return _engine(epsilon, eta, seed, **kwargs).reliability_curve(g, probabilities)
