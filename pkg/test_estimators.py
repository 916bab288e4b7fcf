import json
import math
import os

import pandas as pd

from data_models import (
    EstimatorParameters, InputError, RegimeError, bidirected_cycle_arcs, bundled_cycle_edges,
    clique_edges, cycle_edges, get_sample_graphs, parse_edge_list
)
from estimators import (
    CUT_ENUM_DNF, EXACT_ORACLE, MONTE_CARLO, ReliabilityEngine, decide_regime, delta_for,
    estimate_eulerian_strong_failure, estimate_fail, estimate_fail_monte_carlo, estimate_fail_small,
    estimate_kconn_failure, estimate_multiterminal, estimate_orientation_failure,
    estimate_rway_failure, log_base_size, poisson_binomial_below, reliability_curve, tail_constant,
    weak_cut_alpha
)
from multigraph import build, build_directed
from oracle import (
    exact_fail, exact_kconn_fail, exact_multiterminal_fail, exact_orientation_fail, exact_rway_fail,
    exact_strong_fail
)

EPSILON = 0.1


def _close(estimate, exact, epsilon=EPSILON):
    print(f"  {estimate.problem}: estimate={estimate.value:.6g} exact={exact:.6g} method={estimate.method}")
    assert abs(estimate.value - exact) <= 2 * epsilon * exact


def test_regime_helpers():
    assert math.isclose(log_base_size(10), math.log(10))
    assert math.isclose(log_base_size(4, r=3), 2 * math.log(12))

    n = 4
    threshold = -4 * math.log(n)
    assert decide_regime(threshold, n).branch == "mc"
    assert decide_regime(threshold - 1e-9, n).branch == "small"

    assert math.isclose(delta_for(-6 * math.log(n), math.log(n)), 4.0)
    assert tail_constant(4.0) == 2.0
    assert tail_constant(0.5) == 5.0
    assert tail_constant(4.0, directed=True) == 4.0
    assert math.isinf(weak_cut_alpha(0.0, -1.0, 1.0, 0.1))

    alpha = weak_cut_alpha(2.0, -4 * math.log(n), math.log(n), 0.05)
    assert alpha > 1.0
    # At that alpha the tail bound is exactly epsilon_tail * p_target.
    tail = tail_constant(2.0) * n ** (-alpha * 2.0)
    assert math.isclose(tail, 0.05 * n ** -4)

    assert math.isclose(poisson_binomial_below([0.5, 0.5], 1), 0.25)
    assert math.isclose(poisson_binomial_below([0.5, 0.5], 2), 0.75)


def test_trivial_graphs():
    single = estimate_fail(build(1, []))
    assert single.value == 0.0 and single.method == EXACT_ORACLE

    split = estimate_fail(build(4, [(0, 1, 0.1), (2, 3, 0.1)]))
    assert split.value == 1.0
    assert split.reliability == 0.0

    solid = estimate_fail(build(3, [(0, 1, 0.0), (1, 2, 0.0), (0, 2, 0.5)]))
    assert solid.value == 0.0
    assert "never-failing" in solid.details['reason']


def test_monte_carlo_branch():
    g = build(4, cycle_edges(4, 0.3))
    estimate = estimate_fail(g, epsilon=EPSILON, seed=1)
    assert estimate.method == MONTE_CARLO
    assert estimate.min_cut == 2
    assert math.isclose(estimate.p_c, 0.09)
    _close(estimate, exact_fail(g))

    forced = estimate_fail_monte_carlo(build(4, cycle_edges(4, 0.01)), epsilon=EPSILON, seed=1)
    assert forced.method == MONTE_CARLO


def test_small_branch():
    g = build(4, cycle_edges(4, 0.01))
    estimate = estimate_fail(g, epsilon=EPSILON, seed=2)
    assert estimate.method == CUT_ENUM_DNF
    assert estimate.cuts_enumerated == 7
    assert estimate.details['all_cuts']
    assert estimate.details['exhaustive_enumeration']
    assert estimate.delta > 0
    _close(estimate, exact_fail(g))

    try:
        estimate_fail_small(build(4, cycle_edges(4, 0.3)))
    except RegimeError as e:
        print(f"  refused: {e}")
    else:
        raise AssertionError("the cut branch needs p_c < n^-4")

    forced = estimate_fail_small(build(4, cycle_edges(4, 0.3)), epsilon=EPSILON, method="cutenum")
    _close(forced, exact_fail(build(4, cycle_edges(4, 0.3))))


def test_alpha_cap_refusal():
    # The weak-cut alpha here is about 1.34 and the base graph is not exhaustive.
    g = build(8, clique_edges(8, 0.02))
    try:
        estimate_fail(g, epsilon=EPSILON, alpha_cap=1.0, method="cutenum")
    except RegimeError as e:
        print(f"  refused: {e}")
        assert e.required > 1.0
    else:
        raise AssertionError("alpha above the cap should be refused")


def test_seed_reproducibility():
    g = build(5, cycle_edges(5, 0.2))
    first = estimate_fail(g, epsilon=EPSILON, seed=42)
    again = estimate_fail(g, epsilon=EPSILON, seed=42, threads=3)
    assert first.value == again.value
    assert first.trials == again.trials


def test_kconn():
    g = build(4, bundled_cycle_edges(4, 2, 0.01))
    estimate = estimate_kconn_failure(g, 2, epsilon=EPSILON, seed=3)
    assert estimate.problem == "kconn"
    assert estimate.method == CUT_ENUM_DNF
    assert estimate.details['dnf_clauses'] == 24
    _close(estimate, exact_kconn_fail(g, 2))

    assert estimate_kconn_failure(build(4, cycle_edges(4, 0.1)), 3).value == 1.0
    assert estimate_kconn_failure(g, 1, epsilon=EPSILON).details['k'] == 1


def test_multiterminal():
    g = build(5, cycle_edges(5, 0.01))
    estimate = estimate_multiterminal(g, [0, 2], epsilon=EPSILON, seed=4)
    assert estimate.details['terminals'] == [0, 2]
    assert estimate.details['exhaustive_enumeration']
    _close(estimate, exact_multiterminal_fail(g, [0, 2]))

    split = build(4, [(0, 1, 0.1), (2, 3, 0.1)])
    assert estimate_multiterminal(split, [0, 2]).value == 1.0

    mc = build(5, cycle_edges(5, 0.3))
    _close(estimate_multiterminal(mc, [1, 3], epsilon=EPSILON, seed=4), exact_multiterminal_fail(mc, [1, 3]))

    try:
        estimate_multiterminal(g, [1, 1])
    except InputError:
        pass
    else:
        raise AssertionError("terminals must be distinct")


def test_rway():
    triangle = build(3, cycle_edges(3, 0.5))
    estimate = estimate_rway_failure(triangle, 3, epsilon=EPSILON, seed=5)
    assert estimate.method == MONTE_CARLO
    _close(estimate, 0.125)

    g = build(4, cycle_edges(4, 0.01))
    cut_branch = estimate_rway_failure(g, 3, epsilon=EPSILON, seed=5, method="cutenum")
    assert cut_branch.method == CUT_ENUM_DNF
    assert cut_branch.cuts_enumerated == 6
    _close(cut_branch, exact_rway_fail(g, 3))

    two_way = estimate_rway_failure(g, 2, epsilon=EPSILON)
    assert two_way.problem == "rway" and two_way.details['r'] == 2

    three_parts = build(3, [])
    assert estimate_rway_failure(three_parts, 3).value == 1.0
    try:
        estimate_rway_failure(build(5, [(0, 1, 0.1), (1, 2, 0.1), (3, 4, 0.1)]), 3)
    except InputError:
        pass
    else:
        raise AssertionError("two components and r = 3 is rejected")


def test_eulerian():
    high = build_directed(4, bidirected_cycle_arcs(4, 0.5))
    mc = estimate_eulerian_strong_failure(high, epsilon=EPSILON, seed=6)
    assert mc.method == MONTE_CARLO
    _close(mc, exact_strong_fail(high))

    low = build_directed(4, bidirected_cycle_arcs(4, 0.01))
    small = estimate_eulerian_strong_failure(low, epsilon=EPSILON, seed=6)
    assert small.method == CUT_ENUM_DNF
    assert small.cuts_enumerated == 14
    _close(small, exact_strong_fail(low))

    try:
        estimate_eulerian_strong_failure(build_directed(3, [(0, 1, 0.1), (1, 2, 0.1)]))
    except InputError:
        pass
    else:
        raise AssertionError("non-Eulerian digraphs are rejected")


def test_orientation():
    square = build(4, cycle_edges(4, 0.5))
    estimate = estimate_orientation_failure(square, epsilon=EPSILON, seed=7)
    assert estimate.method == MONTE_CARLO
    _close(estimate, 0.875)
    assert math.isclose(exact_orientation_fail(square), 0.875)

    _close(estimate_orientation_failure(build(3, cycle_edges(3, 0.5)), epsilon=EPSILON, seed=7), 0.75)

    bundled = build(3, bundled_cycle_edges(3, 4, 0.5))
    small = estimate_orientation_failure(bundled, epsilon=EPSILON, seed=7)
    assert small.method == CUT_ENUM_DNF
    _close(small, exact_orientation_fail(bundled))


def test_engine_report_and_curve():
    engine = ReliabilityEngine(EstimatorParameters(epsilon=EPSILON, seed=8))
    estimate = engine.estimate_fail(build(4, cycle_edges(4, 0.3)))
    report = estimate.to_report()
    assert report['wall_ms'] is None
    assert estimate.to_report(timing=True)['wall_ms'] >= 0
    assert math.isclose(report['reliability'], 1 - report['estimate'])

    curve = reliability_curve(build(4, cycle_edges(4, 0.1)), [0.3, 0.01], epsilon=EPSILON)
    print(curve)
    assert list(curve['method']) == [MONTE_CARLO, CUT_ENUM_DNF]
    assert (curve['fail'] + curve['rel'] - 1.0).abs().max() < 1e-12

    try:
        ReliabilityEngine(EstimatorParameters(epsilon=1.5))
    except InputError:
        pass
    else:
        raise AssertionError("epsilon outside (0, 1) is rejected")


SEEDS = 40
REQUIRED_HITS = 38


def _hits(run, exact, epsilon=0.05):
    values = [run(seed).value for seed in range(SEEDS)]
    return sum(abs(v - exact) <= epsilon * exact for v in values)


def test_fail_within_epsilon_over_seeds():
    rows = []
    for _, row in get_sample_graphs().iterrows():
        base = build(int(row['n']), parse_edge_list(row['edges']))
        for p in (row['p_high'], row['p_low']):
            if pd.isna(p):
                continue
            g = base.with_probability(float(p))
            exact = exact_fail(g)
            method = estimate_fail(g, epsilon=0.05, seed=0).method
            hits = _hits(lambda seed: estimate_fail(g, epsilon=0.05, seed=seed), exact)
            rows.append({'graph': row['name'], 'p': p, 'method': method, 'hits': hits})
    df = pd.DataFrame(rows)
    print(df.to_string(index=False))
    assert (df['hits'] >= REQUIRED_HITS).all()
    assert {MONTE_CARLO, CUT_ENUM_DNF} <= set(df['method'])


def test_problem_variants_within_epsilon_over_seeds():
    bundled = build(4, bundled_cycle_edges(4, 2, 0.01))
    c4, c5 = build(4, cycle_edges(4, 0.01)), build(5, cycle_edges(5, 0.01))
    c4_high, c5_high = build(4, cycle_edges(4, 0.5)), build(5, cycle_edges(5, 0.3))
    triangle = build(3, cycle_edges(3, 0.5))
    arcs_high = build_directed(4, bidirected_cycle_arcs(4, 0.5))
    arcs_low = build_directed(4, bidirected_cycle_arcs(4, 0.01))
    bundled_triangle = build(3, bundled_cycle_edges(3, 4, 0.5))
    cases = [
        ("kconn p=.01", lambda s: estimate_kconn_failure(bundled, 2, epsilon=0.05, seed=s),
         exact_kconn_fail(bundled, 2)),
        ("kconn p=.3", lambda s: estimate_kconn_failure(bundled.with_probability(0.3), 2, epsilon=0.05, seed=s),
         exact_kconn_fail(bundled.with_probability(0.3), 2)),
        ("multiterm p=.01", lambda s: estimate_multiterminal(c5, [0, 2], epsilon=0.05, seed=s),
         exact_multiterminal_fail(c5, [0, 2])),
        ("multiterm p=.3", lambda s: estimate_multiterminal(c5_high, [1, 3], epsilon=0.05, seed=s),
         exact_multiterminal_fail(c5_high, [1, 3])),
        ("rway triangle", lambda s: estimate_rway_failure(triangle, 3, epsilon=0.05, seed=s), 0.125),
        ("rway cutenum", lambda s: estimate_rway_failure(c4, 3, epsilon=0.05, seed=s, method="cutenum"),
         exact_rway_fail(c4, 3)),
        ("eulerian p=.5", lambda s: estimate_eulerian_strong_failure(arcs_high, epsilon=0.05, seed=s),
         exact_strong_fail(arcs_high)),
        ("eulerian p=.01", lambda s: estimate_eulerian_strong_failure(arcs_low, epsilon=0.05, seed=s),
         exact_strong_fail(arcs_low)),
        ("orientation square", lambda s: estimate_orientation_failure(c4_high, epsilon=0.05, seed=s), 0.875),
        ("orientation bundled", lambda s: estimate_orientation_failure(bundled_triangle, epsilon=0.05, seed=s),
         exact_orientation_fail(bundled_triangle)),
    ]
    for label, run, exact in cases:
        hits = _hits(run, exact)
        print(f"  {label}: {hits}/{SEEDS} within 5%")
        assert hits >= REQUIRED_HITS, label


def test_bundled_cycle_dispatch():
    """Bundling b parallel edges per link lowers p_c = .3^(2b) below 5^-4 from b = 3 on."""
    for b in range(1, 7):
        g = build(5, bundled_cycle_edges(5, b, 0.3))
        q = 0.3 ** b
        exact = 1 - (1 - q) ** 5 - 5 * q * (1 - q) ** 4
        estimate = estimate_fail(g, epsilon=0.05, seed=b)
        print(f"  b={b}: method={estimate.method} estimate={estimate.value:.6g} exact={exact:.6g}")
        assert estimate.method == (MONTE_CARLO if b <= 2 else CUT_ENUM_DNF)
        assert estimate.min_cut == 2 * b
        _close(estimate, exact, epsilon=0.05)


def _reports_with_threads(threads: int):
    previous = os.environ.get("RELICUT_THREADS")
    os.environ["RELICUT_THREADS"] = str(threads)
    try:
        c4_high, c4_low = build(4, cycle_edges(4, 0.3)), build(4, cycle_edges(4, 0.01))
        estimates = [
            estimate_fail(c4_high, seed=9),
            estimate_fail(c4_low, seed=9),
            estimate_fail(build(5, bundled_cycle_edges(5, 6, 0.3)), seed=9),
            estimate_kconn_failure(build(4, bundled_cycle_edges(4, 2, 0.01)), 2, seed=9),
            estimate_multiterminal(build(5, cycle_edges(5, 0.3)), [1, 3], seed=9),
            estimate_rway_failure(c4_low, 3, seed=9, method="cutenum"),
            estimate_eulerian_strong_failure(build_directed(4, bidirected_cycle_arcs(4, 0.01)), seed=9),
            estimate_orientation_failure(build(3, bundled_cycle_edges(3, 4, 0.5)), seed=9),
        ]
    finally:
        if previous is None:
            del os.environ["RELICUT_THREADS"]
        else:
            os.environ["RELICUT_THREADS"] = previous
    return [json.dumps(e.to_report(), sort_keys=True, default=str) for e in estimates]


def test_thread_count_does_not_change_results():
    single, pooled = _reports_with_threads(1), _reports_with_threads(4)
    for a, b in zip(single, pooled):
        assert a == b, (a, b)


if __name__ == "__main__":
    test_regime_helpers()
    test_trivial_graphs()
    test_monte_carlo_branch()
    test_small_branch()
    test_alpha_cap_refusal()
    test_seed_reproducibility()
    test_kconn()
    test_multiterminal()
    test_rway()
    test_eulerian()
    test_orientation()
    test_engine_report_and_curve()
    test_fail_within_epsilon_over_seeds()
    test_problem_variants_within_epsilon_over_seeds()
    test_bundled_cycle_dispatch()
    test_thread_count_does_not_change_results()
    print("estimator tests passed")
