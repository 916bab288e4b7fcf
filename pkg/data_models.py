import pandas as pd
import numpy as np
from dataclasses import dataclass, field
from typing import List, Dict, Optional, Tuple
import json
import os

EdgeList = List[Tuple[int, int, float]]


class ReliabilityError(Exception):
    """Base class for every error raised by the reliability library."""


class InputError(ReliabilityError, ValueError):
    pass


class GraphInputError(InputError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RegimeError(ReliabilityError):
    """A regime inequality or a configured cap refuses the request.

    `required` carries the quantity the caller would need (an alpha, a cut
    value, a truncation depth) when one can be named.
    """

    def __init__(self, message: str, required: Optional[float] = None):
        self.required = required
        super().__init__(message)


class BudgetError(ReliabilityError):
    def __init__(self, message: str, required: Optional[float] = None):
        self.required = required
        super().__init__(message)


def default_thread_count() -> int:
    value = os.environ.get("RELICUT_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class EstimatorParameters:
    epsilon: float = 0.05
    eta: float = 0.01
    seed: int = 0
    method: str = "auto"  # auto | mc | cutenum
    alpha_cap: float = 3.0
    slack: float = 1.05
    trial_schedule: str = "cut_count"  # cut_count | survival
    threads: int = field(default_factory=default_thread_count)
    mc_batch_size: int = 16384
    max_mc_trials: int = 100_000_000
    max_contraction_trials: int = 2_000_000
    dnf_batch_size: int = 8192
    pas_max_k: int = 8
    pas_max_terms: int = 2_000_000
    max_partition_vertices: int = 10

    def validate(self):
        if not 0 < self.epsilon < 1:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.eta < 1:
            raise InputError(f"eta must lie in (0, 1), got {self.eta}")
        if self.method not in ("auto", "mc", "cutenum"):
            raise InputError(f"unknown method {self.method!r}")
        if self.trial_schedule not in ("cut_count", "survival"):
            raise InputError(f"unknown trial schedule {self.trial_schedule!r}")
        if self.alpha_cap < 1:
            raise InputError("alpha cap must be at least 1")
        if self.slack < 1:
            raise InputError("slack must be at least 1")
        if self.threads < 1:
            raise InputError(f"threads must be at least 1, got {self.threads}")
        return self

    def to_dict(self) -> Dict:
        return {
            'epsilon': self.epsilon,
            'eta': self.eta,
            'seed': self.seed,
            'method': self.method,
            'alpha_cap': self.alpha_cap,
            'slack': self.slack,
            'trial_schedule': self.trial_schedule,
            'threads': self.threads,
        }


@dataclass
class OracleBudget:
    max_edges: int = 20
    max_vertices_for_partitions: int = 10
    max_rway_vertices: int = 8
    max_orientations: int = 16
    max_tutte_edges: int = 16
    max_formula_variables: int = 25


# Graph generators. All return 0-indexed edge lists of (u, v, p_fail).

def path_edges(n: int, p: float) -> EdgeList:
    return [(i, i + 1, p) for i in range(n - 1)]


def cycle_edges(n: int, p: float) -> EdgeList:
    if n < 3:
        raise InputError("a cycle needs at least 3 vertices")
    return [(i, (i + 1) % n, p) for i in range(n)]


def clique_edges(n: int, p: float) -> EdgeList:
    return [(i, j, p) for i in range(n) for j in range(i + 1, n)]


def star_edges(leaves: int, p: float) -> EdgeList:
    return [(0, i, p) for i in range(1, leaves + 1)]


def bundled_cycle_edges(n: int, bundle: int, p: float) -> EdgeList:
    """Cycle C_n where every cycle edge is replaced by `bundle` parallel edges."""
    return [edge for edge in cycle_edges(n, p) for _ in range(bundle)]


def bidirected_cycle_arcs(n: int, p: float) -> EdgeList:
    arcs = []
    for i in range(n):
        j = (i + 1) % n
        arcs.append((i, j, p))
        arcs.append((j, i, p))
    return arcs


def directed_cycle_arcs(n: int, p: float) -> EdgeList:
    return [(i, (i + 1) % n, p) for i in range(n)]


def random_connected_edges(n: int, m: int, p: float, seed: int = 0) -> EdgeList:
    """Random spanning tree plus uniformly drawn extra (possibly parallel) edges."""
    if m < n - 1:
        raise InputError(f"{m} edges cannot connect {n} vertices")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        u, v = int(order[i]), int(order[j])
        edges.append((min(u, v), max(u, v), p))
    while len(edges) < m:
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        edges.append((min(u, v), max(u, v), p))
    return edges


def with_probability(edges: EdgeList, p: float) -> EdgeList:
    return [(u, v, p) for u, v, _ in edges]


def get_sample_graphs() -> pd.DataFrame:
    """Fixed oracle corpus: every graph is connected and small enough for 2^m enumeration.

    `p_high` puts all-terminal estimation in the Monte Carlo branch and
    `p_low` (where given) in the cut-enumeration branch.
    """
    graphs_data = [
        {"name": "path-3", "family": "path", "n": 3, "p_high": 0.1, "p_low": 0.001,
         "edges": path_edges(3, 0.1)},
        {"name": "path-5", "family": "path", "n": 5, "p_high": 0.2, "p_low": 0.0005,
         "edges": path_edges(5, 0.2)},
        {"name": "triangle", "family": "cycle", "n": 3, "p_high": 0.5, "p_low": 0.01,
         "edges": cycle_edges(3, 0.5)},
        {"name": "cycle-4", "family": "cycle", "n": 4, "p_high": 0.1, "p_low": 0.01,
         "edges": cycle_edges(4, 0.1)},
        {"name": "cycle-5", "family": "cycle", "n": 5, "p_high": 0.1, "p_low": 0.01,
         "edges": cycle_edges(5, 0.1)},
        {"name": "cycle-6", "family": "cycle", "n": 6, "p_high": 0.1, "p_low": 0.005,
         "edges": cycle_edges(6, 0.1)},
        {"name": "k4", "family": "clique", "n": 4, "p_high": 0.2, "p_low": 0.01,
         "edges": clique_edges(4, 0.2)},
        {"name": "star-3", "family": "star", "n": 4, "p_high": 0.1, "p_low": 0.001,
         "edges": star_edges(3, 0.1)},
        {"name": "bundled-cycle-4x2", "family": "bundled-cycle", "n": 4, "p_high": 0.3, "p_low": 0.1,
         "edges": bundled_cycle_edges(4, 2, 0.3)},
        {"name": "bundled-cycle-5x3", "family": "bundled-cycle", "n": 5, "p_high": 0.5, "p_low": 0.3,
         "edges": bundled_cycle_edges(5, 3, 0.3)},
        {"name": "two-triangles", "family": "dumbbell", "n": 6, "p_high": 0.2, "p_low": 0.01,
         "edges": cycle_edges(3, 0.2) + [(u + 3, v + 3, p) for u, v, p in cycle_edges(3, 0.2)]
                  + [(0, 3, 0.2), (0, 3, 0.2)]},
        {"name": "random-6-10", "family": "random", "n": 6, "p_high": 0.2, "p_low": 0.0005,
         "edges": random_connected_edges(6, 10, 0.2, seed=11)},
    ]
    df = pd.DataFrame(graphs_data)
    df['m'] = df['edges'].apply(len)
    df['edges'] = df['edges'].apply(lambda x: json.dumps(x) if isinstance(x, list) else x)
    return df[['name', 'family', 'n', 'm', 'p_high', 'p_low', 'edges']]


def parse_edge_list(edges_str) -> EdgeList:
    if isinstance(edges_str, list):
        return [tuple(e) for e in edges_str]
    try:
        return [(int(u), int(v), float(p)) for u, v, p in json.loads(edges_str)]
    except (TypeError, ValueError) as e:
        raise InputError(f"cannot parse edge list: {e}")


def generate_edges(family: str, n: int, p: float, bundle: int = 1,
                   m: Optional[int] = None, seed: int = 0) -> Tuple[EdgeList, bool]:
    """Dispatch for the `gen` helper; returns (edges, directed)."""
    if family == "path":
        return path_edges(n, p), False
    if family == "cycle":
        return cycle_edges(n, p), False
    if family == "clique":
        return clique_edges(n, p), False
    if family == "star":
        return star_edges(n - 1, p), False
    if family == "bundled-cycle":
        return bundled_cycle_edges(n, bundle, p), False
    if family == "bidirected-cycle":
        return bidirected_cycle_arcs(n, p), True
    if family == "directed-cycle":
        return directed_cycle_arcs(n, p), True
    if family == "random":
        return random_connected_edges(n, m if m is not None else 2 * n, p, seed), False
    raise InputError(f"unknown graph family {family!r}")


GRAPH_FAMILIES = ["path", "cycle", "clique", "star", "bundled-cycle",
                  "bidirected-cycle", "directed-cycle", "random"]
