import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from data_models import BudgetError, EstimatorParameters, InputError, RegimeError
from dnf import assignment_chunks
from estimators import ReliabilityEngine
from multigraph import DisjointSet, Multigraph, component_counts, is_graph_connected, min_cut_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuttePoint:
    """Evaluation point; in the failure model every edge fails with probability 1/y."""
    x: float
    y: float

    @property
    def Q(self) -> float:
        return (self.x - 1.0) * (self.y - 1.0)

    @property
    def p_fail(self) -> float:
        return 1.0 / self.y

    def validate(self) -> "TuttePoint":
        if not self.y > 1.0:
            raise InputError(f"the failure model needs y > 1, got y = {self.y}")
        return self

    def log_normalization(self, n: int, m: int) -> float:
        """ln(y^m / (y-1)^(n-1))."""
        return m * math.log(self.y) - (n - 1) * math.log(self.y - 1.0)


@dataclass
class TutteEstimate:
    x: float
    y: float
    t_prime: float
    log_abs_t: float
    sign_t: int
    certified_error_bound: Optional[float] = None
    delta_t_prime: Optional[float] = None
    log_abs_delta_t: Optional[float] = None
    sign_delta_t: Optional[int] = None
    regime: Dict = field(default_factory=dict)

    @property
    def t(self) -> float:
        return _from_log(self.sign_t, self.log_abs_t)

    @property
    def delta_t(self) -> Optional[float]:
        if self.delta_t_prime is None:
            return None
        return _from_log(self.sign_delta_t, self.log_abs_delta_t)

    def to_details(self) -> Dict:
        return {
            'x': self.x,
            'y': self.y,
            'Q': (self.x - 1.0) * (self.y - 1.0),
            't_prime': self.t_prime,
            'log_abs_t': self.log_abs_t,
            'sign_t': self.sign_t,
            'delta_t_prime': self.delta_t_prime,
            'log_abs_delta_t': self.log_abs_delta_t,
            'sign_delta_t': self.sign_delta_t,
            'regime': dict(self.regime),
        }


def _from_log(sign: int, log_abs: float) -> float:
    if sign == 0:
        return 0.0
    try:
        return sign * math.exp(log_abs)
    except OverflowError:
        return sign * math.inf


def _signed_log(value: float) -> Tuple[int, float]:
    if value == 0:
        return 0, -math.inf
    return (1 if value > 0 else -1), math.log(abs(value))


def _check_size(g, max_edges: int):
    if g.m > max_edges:
        raise BudgetError(f"{g.m} edges exceed the exact Tutte budget of {max_edges}", required=g.m)


def exact_tutte(g: Multigraph, x: float, y: float, max_edges: int = 16) -> float:
    """T(G; x, y) by deletion-contraction; bridges contribute x and loops y."""
    _check_size(g, max_edges)
    memo: Dict = {}

    def is_bridge(edges, i):
        ds = DisjointSet(g.n)
        for j, (u, v) in enumerate(edges):
            if j != i:
                ds.union(u, v)
        u, v = edges[i]
        return ds.find(u) != ds.find(v)

    def rec(edges) -> float:
        if not edges:
            return 1.0
        key = edges
        if key in memo:
            return memo[key]
        loops = sum(1 for u, v in edges if u == v)
        rest = tuple(e for e in edges if e[0] != e[1])
        if loops:
            value = y ** loops * rec(rest)
        else:
            u, v = rest[0]
            contracted = tuple(sorted(tuple(sorted((u if a == v else a, u if b == v else b)))
                                      for a, b in rest[1:]))
            if is_bridge(rest, 0):
                value = x * rec(contracted)
            else:
                value = rec(rest[1:]) + rec(contracted)
        memo[key] = value
        return value

    start = tuple(sorted((min(u, v), max(u, v)) for u, v, _ in g.edges))
    return rec(start)


def exact_expectation_identity(g: Multigraph, x: float, y: float, max_edges: int = 16) -> float:
    """y^m / (y-1)^(n-1) * E[Q^(kappa-1)] with every edge failing independently with probability 1/y."""
    point = TuttePoint(x, y).validate()
    _check_size(g, max_edges)
    q_surv = 1.0 - point.p_fail
    parts = []
    for alive in assignment_chunks(g.m):
        weight = np.prod(np.where(alive, q_surv, point.p_fail), axis=1)
        kappa = component_counts(g, alive)
        parts.append(math.fsum((weight * np.power(point.Q, kappa - 1)).tolist()))
    expectation = math.fsum(parts)
    return math.exp(point.log_normalization(g.n, g.m)) * expectation


def series_expectation(s: Dict[int, float], Q: float) -> float:
    """1 + (Q - 1) * sum_{r >= 2} s_r Q^(r-2), which equals E[Q^(kappa-1)] for exact s_r."""
    return 1.0 + (Q - 1.0) * math.fsum(s_r * Q ** (r - 2) for r, s_r in s.items() if r >= 2)


def _regime(g: Multigraph, point: TuttePoint) -> Dict:
    if g.n < 2 or not is_graph_connected(g):
        raise RegimeError("the Tutte approximations need a connected graph with at least 2 vertices")
    c = int(round(min_cut_value(g).value))
    log_n, log_y = math.log(g.n), math.log(point.y)
    first = 3.0 * log_n / log_y
    Q = point.Q
    second = (math.log(256.0) + 4.0 * math.log(abs(Q)) + 2.0 * log_n) / log_y if Q != 0 else -math.inf
    required = max(first, second)
    delta = c * log_y / log_n - 2.0
    regime = {'min_cut': c, 'required_min_cut': required, 'delta': delta,
              'connectivity_bound': first, 'q_bound': second}
    if not c > required:
        raise RegimeError(f"minimum cut {c} must exceed max(3 ln n / ln y, ln(256 Q^4 n^2) / ln y) = "
                          f"{required:.4f}", required=math.floor(required) + 1)
    return regime


def approx_tutte_leading(g: Multigraph, x: float, y: float) -> TutteEstimate:
    """T' ~ 1, certified to |Q-1| n^-delta / (1 - |Q| n^(-delta/2))."""
    point = TuttePoint(x, y).validate()
    regime = _regime(g, point)
    delta, n, Q = regime['delta'], g.n, point.Q
    ratio = abs(Q) * n ** (-delta / 2.0)
    bound = abs(Q - 1.0) * n ** (-delta) / (1.0 - ratio)
    return TutteEstimate(x, y, 1.0, point.log_normalization(g.n, g.m), 1, bound, regime=regime)


def tail_after(r0: int, Q: float, n: int, delta: float) -> float:
    """Geometric bound on sum_{r > r0} |Q|^(r-2) n^(-delta r / 2)."""
    if Q == 0:
        return 0.0
    ratio = abs(Q) * n ** (-delta / 2.0)
    return abs(Q) ** (r0 - 1) * n ** (-delta * (r0 + 1) / 2.0) / (1.0 - ratio)


def choose_r0(Q: float, n: int, delta: float, epsilon_tail: float) -> int:
    if Q == 0:
        return 2
    target = epsilon_tail * n ** (-(2.0 + delta))
    r0 = 2
    while r0 < n and tail_after(r0, Q, n, delta) > target:
        r0 += 1
    return r0


def estimate_delta_t(g: Multigraph, x: float, y: float, epsilon: float = 0.05, eta: float = 0.01,
                     seed: int = 0, params: Optional[EstimatorParameters] = None) -> TutteEstimate:
    """Estimate of Delta T = y^m/(y-1)^(n-1) - T through the partition tail s_r at p = 1/y."""
    point = TuttePoint(x, y).validate()
    regime = _regime(g, point)
    Q, n, delta = point.Q, g.n, regime['delta']
    log_norm = point.log_normalization(g.n, g.m)
    if Q == 1.0:
        return TutteEstimate(x, y, 1.0, log_norm, 1, 0.0, 0.0, -math.inf, 0, regime)

    if Q >= 0:
        eps_s, eps_tail = epsilon / 2.0, epsilon / 2.0
    else:
        eps_s, eps_tail = epsilon / 4.0, epsilon / 4.0
    r0 = choose_r0(Q, n, delta, eps_tail)
    base = replace(params or EstimatorParameters(), epsilon=eps_s, eta=eta / (r0 - 1), seed=seed)
    engine = ReliabilityEngine(base)
    failing = g.with_probability(point.p_fail)

    first = engine.estimate_fail(failing)
    s = {2: first.value}
    methods = {2: first.method}
    for r in range(3, r0 + 1):
        partial = engine.estimate_rway_failure(failing, r)
        s[r] = partial.value
        methods[r] = partial.method
    logger.info("delta T: Q=%.4f delta=%.4f r0=%d s=%s", Q, delta, r0, s)

    if Q < 0:
        higher = math.fsum(abs(Q) ** (r - 2) * n ** (-delta * r / 2.0) for r in range(3, n + 1))
        regime['higher_order_bound'] = higher
        if not higher < 0.25 * s[2]:
            raise RegimeError(f"terms r >= 3 may cancel s_2: bound {higher:.3g} >= s_2 / 4 = {s[2] / 4:.3g}",
                              required=4.0 * higher)

    series = math.fsum(s_r * Q ** (r - 2) for r, s_r in s.items())
    normalized = (1.0 - Q) * series
    # Each s_r is within (1 +- eps_s) of its true value; terms past r0 are bounded by the tail.
    magnitude = math.fsum(s_r * abs(Q) ** (r - 2) for r, s_r in s.items())
    tail = tail_after(r0, Q, n, delta)
    bound = abs(1.0 - Q) * (eps_s / (1.0 - eps_s) * magnitude + tail)
    sign, log_abs = _signed_log(normalized)
    t_prime = 1.0 - normalized
    sign_t, log_abs_t_prime = _signed_log(t_prime)
    regime.update({'r0': r0, 's': s, 'methods': methods, 'tail_bound': tail, 'epsilon': epsilon,
                   'epsilon_s': eps_s})
    return TutteEstimate(x, y, t_prime, log_norm + log_abs_t_prime, sign_t,
                         bound, normalized, log_norm + log_abs, sign, regime)
