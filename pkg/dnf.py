import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb, logsumexp

from data_models import BudgetError, InputError, RegimeError

logger = logging.getLogger(__name__)

DNF_STREAM = 1
MAX_CLAUSES = 200_000


@dataclass(frozen=True, eq=False)
class DnfFormula:
    """Disjunction of conjunctions over independent variables.

    Variable i is true with probability probabilities[i]. Clause j requires
    every variable in clauses[j] true and every variable in negated[j] false
    (negated is empty for purely positive formulas).
    """
    probabilities: np.ndarray
    clauses: Tuple[Tuple[int, ...], ...]
    negated: Tuple[Tuple[int, ...], ...] = ()
    variable_ids: Optional[Tuple[int, ...]] = None

    @property
    def n_variables(self) -> int:
        return len(self.probabilities)

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    def negative(self, j: int) -> Tuple[int, ...]:
        return self.negated[j] if self.negated else ()

    @cached_property
    def clause_log_weights(self) -> np.ndarray:
        q = self.probabilities
        with np.errstate(divide="ignore"):
            log_q = np.log(q)
            log_not_q = np.log1p(-q)
        out = np.empty(self.n_clauses)
        for j, clause in enumerate(self.clauses):
            out[j] = log_q[list(clause)].sum() + log_not_q[list(self.negative(j))].sum()
        return out

    @cached_property
    def positive_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n_clauses, self.n_variables), dtype=bool)
        for j, clause in enumerate(self.clauses):
            mat[j, list(clause)] = True
        return mat

    @cached_property
    def negative_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n_clauses, self.n_variables), dtype=bool)
        for j in range(self.n_clauses):
            mat[j, list(self.negative(j))] = True
        return mat

    def size(self) -> int:
        return int(self.positive_matrix.sum() + self.negative_matrix.sum())


@dataclass(frozen=True)
class CoverageEstimate:
    value: float
    samples: int
    epsilon: float
    eta: float
    clauses: int = 0
    total_weight: float = 0.0


def make_formula(probabilities: Sequence[float], clauses: Iterable[Iterable[int]],
                 negated: Optional[Iterable[Iterable[int]]] = None,
                 variable_ids: Optional[Sequence[int]] = None) -> DnfFormula:
    """Validated formula; repeated clauses keep their first occurrence."""
    q = np.asarray(probabilities, dtype=np.float64)
    if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
        raise InputError("variable probabilities must lie in [0, 1]")
    pos_list = [tuple(sorted(int(v) for v in c)) for c in clauses]
    neg_list = [tuple(sorted(int(v) for v in c)) for c in negated] if negated is not None else None
    if neg_list is not None and len(neg_list) != len(pos_list):
        raise InputError("negated literals must be given per clause")
    seen = set()
    kept_pos, kept_neg = [], []
    for j, pos in enumerate(pos_list):
        neg = neg_list[j] if neg_list is not None else ()
        literals = pos + neg
        if not literals:
            raise InputError(f"clause {j} is empty")
        if len(set(literals)) != len(literals):
            raise InputError(f"clause {j} repeats a variable")
        if min(literals) < 0 or max(literals) >= len(q):
            raise InputError(f"clause {j} references an undefined variable")
        if (pos, neg) in seen:
            continue
        seen.add((pos, neg))
        kept_pos.append(pos)
        kept_neg.append(neg)
    ids = tuple(int(v) for v in variable_ids) if variable_ids is not None else None
    return DnfFormula(q, tuple(kept_pos), tuple(kept_neg) if neg_list is not None else (), ids)


def assignment_chunks(k: int, chunk_bits: int = 16):
    total = 1 << k
    step = 1 << min(k, chunk_bits)
    shifts = np.arange(k, dtype=np.int64)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        yield ((idx[:, None] >> shifts) & 1).astype(bool)


def exact_union_probability(f: DnfFormula, max_variables: int = 25) -> float:
    """Pr[F] by enumerating every assignment of the variables the clauses mention."""
    if f.n_clauses == 0:
        return 0.0
    used = np.flatnonzero(f.positive_matrix.any(axis=0) | f.negative_matrix.any(axis=0))
    if len(used) > max_variables:
        raise BudgetError(f"exact union over {len(used)} variables exceeds budget {max_variables}",
                          required=len(used))
    q = f.probabilities[used]
    pos = f.positive_matrix[:, used].astype(np.int32)
    neg = f.negative_matrix[:, used].astype(np.int32)
    pos_size = pos.sum(axis=1)
    total = 0.0
    for bits in assignment_chunks(len(used)):
        weight = np.prod(np.where(bits, q, 1.0 - q), axis=1)
        b = bits.astype(np.int32)
        satisfied = ((b @ pos.T) == pos_size) & ((b @ neg.T) == 0)
        total += float(weight[satisfied.any(axis=1)].sum())
    return min(1.0, total)


def sample_count(n_clauses: int, epsilon: float, eta: float) -> int:
    return math.ceil(3.0 * n_clauses * math.log(2.0 / eta) / epsilon ** 2)


def estimate_union_probability(f: DnfFormula, epsilon: float, eta: float, seed: int = 0, *,
                               threads: int = 1, batch_size: int = 8192) -> CoverageEstimate:
    """Coverage estimator for Pr[F].

    A sample picks clause i with probability w_i / W, draws an assignment
    conditioned on clause i, and scores 1 when i is the lowest-indexed clause
    it satisfies. W times the mean score is unbiased for Pr[F].
    """
    if not 0 < epsilon < 1 or not 0 < eta < 1:
        raise InputError("epsilon and eta must lie in (0, 1)")
    log_w = f.clause_log_weights
    active = np.flatnonzero(np.isfinite(log_w))
    if len(active) == 0:
        raise InputError("every clause has probability zero")
    log_w = log_w[active]
    log_total = float(logsumexp(log_w))
    total = math.exp(log_total)
    w_max = math.exp(float(log_w.max()))
    clauses = len(active)
    n_samples = sample_count(clauses, epsilon, eta)

    if clauses == 1:
        return CoverageEstimate(total, 0, epsilon, eta, 1, total)

    select = np.exp(log_w - log_total)
    select /= select.sum()
    q = f.probabilities
    pos = f.positive_matrix[active]
    neg = f.negative_matrix[active]
    pos_t = pos.T.astype(np.int32)
    neg_t = neg.T.astype(np.int32)
    pos_size = pos.sum(axis=1)
    has_negated = bool(neg.any())

    chunk = max(64, min(batch_size, 4_000_000 // max(clauses, f.n_variables, 1)))
    bounds = [(j, min(chunk, n_samples - j * chunk)) for j in range((n_samples + chunk - 1) // chunk)]

    def run_chunk(item):
        j, size = item
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(DNF_STREAM, j)))
        idx = rng.choice(clauses, size=size, p=select)
        assign = rng.random((size, f.n_variables)) < q
        assign |= pos[idx]
        if has_negated:
            assign &= ~neg[idx]
        a = assign.astype(np.int32)
        satisfied = (a @ pos_t) == pos_size
        if has_negated:
            satisfied &= (a @ neg_t) == 0
        return int(np.count_nonzero(satisfied.argmax(axis=1) == idx))

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run_chunk, bounds))
    else:
        hits = sum(run_chunk(b) for b in bounds)

    value = total * hits / n_samples
    value = min(max(value, w_max), min(1.0, total))
    logger.debug("dnf: %d clauses, %d samples, W=%.6g, estimate=%.6g", clauses, n_samples, total, value)
    return CoverageEstimate(value, n_samples, epsilon, eta, clauses, total)


def build_cut_failure_formula(cuts, g) -> DnfFormula:
    """One variable per edge (true = edge fails); one clause per cut's crossing edges."""
    if not cuts:
        raise InputError("no cuts to build a formula from")
    never_fail = g.p == 0.0
    clauses = [cut.edge_ids for cut in cuts if not never_fail[list(cut.edge_ids)].any()]
    return make_formula(g.p, clauses, variable_ids=range(g.m))


def k_failure_clause_count(cuts, k: int) -> int:
    return int(sum(comb(len(c.edge_ids), len(c.edge_ids) - k + 1, exact=True) for c in cuts))


def build_k_failure_formula(cuts, g, k: int) -> DnfFormula:
    """True iff some cut keeps fewer than k surviving edges: one clause per (C-k+1)-subset."""
    if k < 1:
        raise InputError("k must be at least 1")
    if not cuts:
        raise InputError("no cuts to build a formula from")
    for cut in cuts:
        if len(cut.edge_ids) < k:
            raise RegimeError(f"a cut with {len(cut.edge_ids)} < k = {k} edges fails k-connectivity "
                              f"with certainty", required=k)
    total = k_failure_clause_count(cuts, k)
    if total > MAX_CLAUSES:
        raise BudgetError(f"k-failure formula would have {total} clauses > {MAX_CLAUSES}", required=total)
    never_fail = g.p == 0.0
    clauses = []
    for cut in cuts:
        for subset in combinations(cut.edge_ids, len(cut.edge_ids) - k + 1):
            if not never_fail[list(subset)].any():
                clauses.append(subset)
    return make_formula(g.p, clauses, variable_ids=range(g.m))


def build_orientation_formula(cuts, g) -> DnfFormula:
    """Variable e is true when edge e points tail -> head; two clauses per cut,
    one for every crossing edge pointing away from vertex 0's side and one for
    every crossing edge pointing towards it.
    """
    if not cuts:
        raise InputError("no cuts to build a formula from")
    pos_list, neg_list = [], []
    for cut in cuts:
        sides = cut.sides(g.n)
        leaving = tuple(e for e in cut.edge_ids if sides[g.tails[e]] == 0)
        entering = tuple(e for e in cut.edge_ids if sides[g.tails[e]] != 0)
        pos_list.append(leaving)
        neg_list.append(entering)
        pos_list.append(entering)
        neg_list.append(leaving)
    return make_formula(np.full(g.m, 0.5), pos_list, neg_list, variable_ids=range(g.m))
