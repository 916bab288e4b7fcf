import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from data_models import (
    GRAPH_FAMILIES, BudgetError, EstimatorParameters, GraphInputError, InputError, RegimeError,
    generate_edges
)
from multigraph import Digraph, Multigraph, build, build_directed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_REFUSED = 3

ESTIMATE_COMMANDS = ["rel", "kconn", "multiterm", "rway", "eulerian", "orient", "tutte", "cuts",
                     "heuristic", "pas"]
EXACT_PROBLEMS = ["rel", "kconn", "multiterm", "rway", "eulerian", "orient", "tutte", "cuts", "tail"]

_RUN = {"epsilon", "eta", "seed", "method", "alpha_cap", "schedule", "threads", "json", "timing", "verbose",
        "record"}
ALLOWED_FLAGS = {
    "rel": _RUN | {"p"},
    "kconn": _RUN | {"p", "k"},
    "multiterm": _RUN | {"p", "terminals"},
    "rway": _RUN | {"p", "r"},
    "eulerian": _RUN | {"p"},
    "orient": _RUN,
    "tutte": _RUN | {"x", "y"},
    "cuts": {"alpha", "r", "p", "eta", "seed", "schedule", "threads", "json", "timing", "verbose"},
    "heuristic": _RUN | {"p", "alpha"},
    "pas": _RUN | {"p", "alpha"},
    "exact": {"p", "k", "r", "terminals", "x", "y", "alpha", "json", "timing", "verbose"},
}
FLAG_NAMES = {
    "epsilon": "--epsilon", "eta": "--eta", "p": "--p", "seed": "--seed", "k": "--k", "r": "--r",
    "terminals": "--terminals", "x": "--x", "y": "--y", "alpha_cap": "--alpha-cap",
    "method": "--method", "json": "--json", "alpha": "--alpha", "record": "--record",
    "timing": "--timing", "verbose": "--verbose", "schedule": "--schedule", "threads": "--threads",
}
# Problems whose files may omit per-edge probabilities without --p.
PROBABILITY_FREE = {"tutte", "orient", "cuts"}


class GraphFile:
    """Reader for the `p reliability <n> <m>` edge-list format (1-indexed vertices)."""

    def __init__(self, default_p: Optional[float] = None, allow_missing_p: bool = False):
        self.default_p = default_p
        self.allow_missing_p = allow_missing_p

    def _probability(self, token: Optional[str], line_no: int) -> float:
        if token is None:
            if self.default_p is not None:
                return self.default_p
            if self.allow_missing_p:
                return 0.5
            raise GraphInputError("no failure probability on the line and no --p given", line_no)
        try:
            p = float(token)
        except ValueError:
            raise GraphInputError(f"failure probability {token!r} is not a number", line_no)
        if not 0.0 <= p <= 1.0:
            raise GraphInputError(f"failure probability {p} outside [0, 1]", line_no)
        return p

    def parse_lines(self, lines: Sequence[str]) -> Union[Multigraph, Digraph]:
        header = None
        kind = None
        edges = []
        for line_no, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] == "p":
                if header is not None:
                    raise GraphInputError("duplicate header", line_no)
                if len(tokens) != 4 or tokens[1] != "reliability":
                    raise GraphInputError("header must read 'p reliability <n> <m>'", line_no)
                try:
                    n, m = int(tokens[2]), int(tokens[3])
                except ValueError:
                    raise GraphInputError("header counts must be integers", line_no)
                if n < 1 or m < 0:
                    raise GraphInputError("header needs n >= 1 and m >= 0", line_no)
                header = (n, m)
                continue
            if tokens[0] not in ("e", "a"):
                raise GraphInputError(f"unknown line type {tokens[0]!r}", line_no)
            if header is None:
                raise GraphInputError("edge line before the 'p reliability' header", line_no)
            if kind is not None and tokens[0] != kind:
                raise GraphInputError("'e' and 'a' lines cannot be mixed", line_no)
            kind = tokens[0]
            if len(tokens) not in (3, 4):
                raise GraphInputError(f"expected '{kind} <u> <v> [p_fail]'", line_no)
            try:
                u, v = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise GraphInputError("endpoints must be integers", line_no)
            n = header[0]
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphInputError(f"endpoint out of range 1..{n}: ({u}, {v})", line_no)
            if u == v:
                raise GraphInputError(f"self-loop at vertex {u}", line_no)
            p = self._probability(tokens[3] if len(tokens) == 4 else None, line_no)
            edges.append((u - 1, v - 1, p))
        if header is None:
            raise GraphInputError("missing 'p reliability <n> <m>' header")
        n, m = header
        if len(edges) != m:
            raise GraphInputError(f"header declares {m} edges but the file has {len(edges)}")
        if kind == "a":
            return build_directed(n, edges)
        return build(n, edges)

    def parse(self, source) -> Union[Multigraph, Digraph]:
        if hasattr(source, "read"):
            return self.parse_lines(source.read().splitlines())
        try:
            text = Path(source).read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as e:
            raise InputError(f"cannot read graph file {source}: {e}")
        return self.parse_lines(text.splitlines())


def parse_graph(source, default_p: Optional[float] = None,
                allow_missing_p: bool = False) -> Union[Multigraph, Digraph]:
    return GraphFile(default_p, allow_missing_p).parse(source)


def format_graph(n: int, edges, directed: bool = False, comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"p reliability {n} {len(edges)}")
    tag = "a" if directed else "e"
    lines.extend(f"{tag} {u + 1} {v + 1} {p!r}" for u, v, p in edges)
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _flatten(report: Dict, prefix: str = "") -> List:
    rows = []
    for key, value in report.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            rows.extend(_flatten(value, name + "."))
        else:
            rows.append((name, value))
    return rows


def render_text(report: Dict) -> str:
    rows = _flatten(report)
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {json.dumps(value)}" for name, value in rows)


def emit(report: Dict, as_json: bool, table: Optional[pd.DataFrame] = None):
    report = _jsonable(report)
    if as_json:
        print(json.dumps(report, indent=2))
        return
    print(render_text(report))
    if table is not None and not table.empty:
        print()
        print(table.to_string(index=False, float_format=repr))


def build_parser() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--epsilon", type=float, default=None, help="target relative error (default 0.05)")
    flags.add_argument("--eta", type=float, default=None, help="failure probability (default 0.01)")
    flags.add_argument("--p", type=float, default=None, help="default edge failure probability")
    flags.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    flags.add_argument("--k", type=int, default=None, help="required edge connectivity")
    flags.add_argument("--r", type=int, default=None, help="number of components")
    flags.add_argument("--terminals", type=str, default=None, help="comma-separated 1-indexed vertices")
    flags.add_argument("--x", type=float, default=None, help="Tutte x")
    flags.add_argument("--y", type=float, default=None, help="Tutte y")
    flags.add_argument("--alpha-cap", dest="alpha_cap", type=float, default=None, help="largest alpha enumerated (default 3)")
    flags.add_argument("--method", choices=["auto", "mc", "cutenum"], default=None)
    flags.add_argument("--alpha", type=float, default=None, help="cut threshold multiple of the minimum cut")
    flags.add_argument("--schedule", choices=["cut_count", "survival"], default=None,
                       help="contraction trial schedule")
    flags.add_argument("--threads", type=int, default=None, help="worker threads (default RELICUT_THREADS)")
    flags.add_argument("--json", action="store_true", default=None, help="print the report as JSON")
    flags.add_argument("--timing", action="store_true", default=None, help="report wall time")
    flags.add_argument("--record", action="store_true", default=None, help="store the run in the history database")
    flags.add_argument("--verbose", action="store_true", default=None, help="debug logging on stderr")

    parser = argparse.ArgumentParser(prog="relicut", description="Network reliability estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ESTIMATE_COMMANDS:
        cmd = sub.add_parser(name, parents=[flags])
        cmd.add_argument("graph", help="graph file")
    exact = sub.add_parser("exact", parents=[flags], help="brute-force reference values")
    exact.add_argument("problem", choices=EXACT_PROBLEMS)
    exact.add_argument("graph", help="graph file")

    gen = sub.add_parser("gen", help="write a generated graph file")
    gen.add_argument("family", choices=GRAPH_FAMILIES)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float, default=0.1)
    gen.add_argument("--bundle", type=int, default=1)
    gen.add_argument("--m", type=int, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", type=str, default=None)

    history = sub.add_parser("history", help="list recorded runs")
    history.add_argument("--limit", type=int, default=20)
    history.add_argument("--json", action="store_true")
    return parser


def check_flags(args) -> None:
    allowed = ALLOWED_FLAGS[args.command]
    for dest, flag in FLAG_NAMES.items():
        if getattr(args, dest, None) is not None and dest not in allowed:
            raise InputError(f"{flag} is not valid with '{args.command}'")


def configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else os.environ.get("RELICUT_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def estimator_parameters(args) -> EstimatorParameters:
    params = EstimatorParameters()
    for dest, attr in (("epsilon", "epsilon"), ("eta", "eta"), ("seed", "seed"), ("method", "method"),
                       ("alpha_cap", "alpha_cap"), ("schedule", "trial_schedule"),
                       ("threads", "threads")):
        value = getattr(args, dest, None)
        if value is not None:
            setattr(params, attr, value)
    return params.validate()


def _terminals(args, n: int) -> List[int]:
    if args.terminals is None:
        raise InputError("--terminals is required")
    try:
        terminals = [int(t) - 1 for t in args.terminals.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"cannot parse --terminals {args.terminals!r}")
    if any(not 0 <= t < n for t in terminals):
        raise InputError(f"terminals must lie in 1..{n}")
    return terminals


def _require(args, dest: str):
    value = getattr(args, dest)
    if value is None:
        raise InputError(f"{FLAG_NAMES[dest]} is required for '{args.command}'")
    return value


def _load(args, problem: str):
    g = parse_graph(args.graph, args.p, allow_missing_p=problem in PROBABILITY_FREE)
    directed = isinstance(g, Digraph)
    if problem == "eulerian" and not directed:
        raise InputError("'eulerian' needs a graph of 'a' (arc) lines")
    if problem != "eulerian" and directed:
        raise InputError(f"'{problem}' needs a graph of 'e' (edge) lines")
    return g


def cuts_table(cuts, n: int) -> pd.DataFrame:
    rows = []
    for cut in cuts:
        labels = cut.sides(n)
        rows.append({
            'value': cut.value,
            'partition': " | ".join(" ".join(str(v + 1) for v in np.flatnonzero(labels == b))
                                    for b in range(cut.blocks)),
            'edges': " ".join(str(e + 1) for e in cut.edge_ids),
            'flagged': cut.flagged,
        })
    return pd.DataFrame(rows) if rows else pd.DataFrame()


def _cuts_report(cuts, g, alpha: float, r: int, method: str, started: float, timing: bool):
    minimum = min((c.value for c in cuts if not c.flagged), default=None)
    report = {
        'problem': 'cuts',
        'method': method,
        'alpha': alpha,
        'r': r,
        'n': g.n,
        'm': g.m,
        'min_cut': minimum,
        'cuts_enumerated': len(cuts),
        'wall_ms': (time.perf_counter() - started) * 1000.0 if timing else None,
        'cuts': [{'value': c.value,
                  'partition': [[int(v) + 1 for v in np.flatnonzero(c.sides(g.n) == b)] for b in range(c.blocks)],
                  'edges': [e + 1 for e in c.edge_ids],
                  'flagged': c.flagged} for c in cuts],
    }
    return report, cuts_table(cuts, g.n)


def run_estimate(args):
    from estimators import ReliabilityEngine
    from tutte import estimate_delta_t
    from detapprox import DeterministicApproximator

    command = args.command
    started = time.perf_counter()
    g = _load(args, command)
    table = None
    if command == "cuts":
        from cut_enum import enumerate_alpha_min_cuts, enumerate_alpha_min_rway_cuts
        alpha = args.alpha if args.alpha is not None else 1.0
        r = args.r if args.r is not None else 2
        params = estimator_parameters(args)
        kwargs = ReliabilityEngine(params).enumeration_kwargs()
        if r == 2:
            cuts = enumerate_alpha_min_cuts(g, None, alpha, params.eta, **kwargs)
        else:
            cuts = enumerate_alpha_min_rway_cuts(g, r, alpha, params.eta, **kwargs)
        return _cuts_report(cuts, g, alpha, r, "contraction", started, bool(args.timing))

    params = estimator_parameters(args)
    engine = ReliabilityEngine(params)
    if command == "rel":
        estimate = engine.estimate_fail(g)
    elif command == "kconn":
        estimate = engine.estimate_kconn_failure(g, _require(args, "k"))
    elif command == "multiterm":
        estimate = engine.estimate_multiterminal(g, _terminals(args, g.n))
    elif command == "rway":
        estimate = engine.estimate_rway_failure(g, _require(args, "r"))
    elif command == "eulerian":
        estimate = engine.estimate_eulerian_strong_failure(g)
    elif command == "orient":
        estimate = engine.estimate_orientation_failure(g)
    elif command == "heuristic":
        estimate = DeterministicApproximator(params).heuristic_sum_fail(g, alpha=args.alpha)
    elif command == "pas":
        estimate = DeterministicApproximator(params).pas_fail(g, alpha=args.alpha)
    else:
        result = estimate_delta_t(g, _require(args, "x"), _require(args, "y"), params.epsilon, params.eta,
                                  params.seed, params)
        estimate = tutte_as_estimate(result, g, params, started)
    return estimate.to_report(bool(args.timing)), table


def tutte_as_estimate(result, g, params: EstimatorParameters, started: float):
    from estimators import Estimate
    return Estimate(value=result.t_prime, epsilon=params.epsilon,
                    method=result.regime.get('methods', {}).get(2, "exact_oracle"), seed=params.seed,
                    eta=params.eta, n=g.n, m=g.m, min_cut=float(result.regime['min_cut']),
                    p_c=(1.0 / result.y) ** result.regime['min_cut'], delta=result.regime['delta'],
                    certified_error_bound=result.certified_error_bound,
                    wall_ms=(time.perf_counter() - started) * 1000.0, problem="tutte",
                    details=result.to_details())


def run_exact(args):
    import oracle
    from estimators import EXACT_ORACLE, Estimate
    from tutte import exact_expectation_identity, exact_tutte

    problem = args.problem
    started = time.perf_counter()
    g = _load(args, problem)
    details = {}
    if problem == "cuts":
        alpha = args.alpha if args.alpha is not None else 1.0
        r = args.r if args.r is not None else 2
        cuts = oracle.exact_rway_cut_list(g, r, alpha)
        return _cuts_report(cuts, g, alpha, r, EXACT_ORACLE, started, bool(args.timing))
    if problem == "rel":
        value = oracle.exact_fail(g)
    elif problem == "kconn":
        value = oracle.exact_kconn_fail(g, _require(args, "k"))
    elif problem == "multiterm":
        value = oracle.exact_multiterminal_fail(g, _terminals(args, g.n))
    elif problem == "rway":
        value = oracle.exact_rway_fail(g, _require(args, "r"))
    elif problem == "eulerian":
        value = oracle.exact_strong_fail(g)
    elif problem == "orient":
        value = oracle.exact_orientation_fail(g)
    elif problem == "tail":
        tail = oracle.exact_partition_tail(g)
        value = tail.s.get(2, 0.0)
        details = {'s': tail.s, 'p_exact': tail.p_exact}
    else:
        x, y = _require(args, "x"), _require(args, "y")
        value = exact_tutte(g, x, y)
        details = {'x': x, 'y': y}
        if y > 1:
            details['expectation_identity'] = exact_expectation_identity(g, x, y)
    estimate = Estimate(value=value, epsilon=0.0, method=EXACT_ORACLE, n=g.n, m=g.m, problem=problem,
                        wall_ms=(time.perf_counter() - started) * 1000.0, details=details)
    report = estimate.to_report(bool(args.timing))
    if problem == "tutte":
        report['estimate'] = value
    return report, None


def run_gen(args) -> int:
    edges, directed = generate_edges(args.family, args.n, args.p, args.bundle, args.m, args.seed)
    text = format_graph(args.n, edges, directed, comment=f"{args.family} n={args.n}")
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_history(args) -> int:
    from db_operations import get_estimation_history
    df = get_estimation_history(limit=args.limit)
    if args.json:
        print(df.to_json(orient="records", indent=2) if not df.empty else "[]")
    elif df.empty:
        print("no recorded runs")
    else:
        print(df.to_string(index=False, float_format=repr))
    return EXIT_OK


def record_run(args, report: Dict):
    from db_operations import save_estimation_run
    run_id = save_estimation_run(graph_label=str(args.graph), report=_jsonable(report),
                                 parameters=estimator_parameters(args).to_dict())
    if run_id is None:
        logger.warning("could not record the run in the history database")
    else:
        logger.info("recorded run %s", run_id)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_INPUT
    configure_logging(bool(getattr(args, "verbose", False)))
    try:
        if args.command == "gen":
            return run_gen(args)
        if args.command == "history":
            return run_history(args)
        check_flags(args)
        if args.command == "exact":
            report, table = run_exact(args)
        else:
            report, table = run_estimate(args)
        if getattr(args, "record", None):
            record_run(args, report)
        emit(report, bool(args.json), table)
        return EXIT_OK
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (RegimeError, BudgetError) as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
