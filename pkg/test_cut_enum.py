from math import comb

import numpy as np
import pandas as pd

from cut_enum import (
    CutRecord, EnumerationPlan, base_size_for, check_eulerian, enumerate_alpha_min_cuts,
    enumerate_alpha_min_rway_cuts, enumerate_directed_eulerian_cuts, log_cut_count_bound,
    make_plan, single_contraction_trial
)
from data_models import (
    BudgetError, GraphInputError, InputError, bidirected_cycle_arcs, cycle_edges, get_sample_graphs,
    parse_edge_list, with_probability
)
from multigraph import WeightedView, build, build_directed
from oracle import exact_cut_list, exact_rway_cut_list


def _keys(cuts):
    return {c.key() for c in cuts}


def test_plan_sizes():
    assert base_size_for(1.0) == 2
    assert base_size_for(1.5) == 3
    assert base_size_for(2.0) == 4
    assert base_size_for(1.0, r=3) == 4

    exhaustive = make_plan(4, 2.0)
    assert exhaustive.exhaustive
    assert exhaustive.trials == 1

    plan = make_plan(6, 1.0, eta=0.01)
    assert not plan.exhaustive
    assert plan.trials > 36
    assert abs(plan.log_cut_bound - log_cut_count_bound(6, 1.0)) < 1e-12

    survival = make_plan(6, 1.0, eta=0.01, schedule="survival")
    print(f"cut_count trials: {plan.trials}, survival trials: {survival.trials}")
    assert survival.trials >= 1


def test_plan_rejections():
    try:
        make_plan(30, 3.0, max_trials=1000)
    except BudgetError as e:
        print(f"refused: {e}")
        assert e.required > 1000
    else:
        raise AssertionError("plan above the trial budget should be refused")

    for bad in (dict(alpha=0.5), dict(alpha=1.0, eta=0.0), dict(alpha=1.0, schedule="random")):
        try:
            make_plan(8, **bad)
        except InputError:
            pass
        else:
            raise AssertionError(f"{bad} should be rejected")


def test_minimum_cuts_of_cycle():
    g = build(6, cycle_edges(6, 0.1))
    cuts = enumerate_alpha_min_cuts(g, alpha=1.0, seed=7)
    print(f"C_6 minimum cuts: {len(cuts)}")
    assert len(cuts) == 15
    assert all(c.value == 2 and not c.flagged for c in cuts)
    assert _keys(cuts) == _keys(exact_cut_list(g, 1.0))


def test_alpha_cuts_match_oracle():
    g = build(5, cycle_edges(5, 0.1))
    cuts = enumerate_alpha_min_cuts(g, alpha=2.0, seed=3)
    oracle = exact_cut_list(g, 2.0)
    assert len(oracle) == 15
    assert _keys(cuts) == _keys(oracle)
    values = [c.value for c in cuts]
    assert values == sorted(values)


def test_corpus_cuts_over_seeds():
    """Seeded runs recover the full alpha-minimum cut list at least 99 times in 100."""
    rows = []
    for _, row in get_sample_graphs().iterrows():
        g = build(int(row['n']), parse_edge_list(row['edges']))
        if g.n > 8:
            continue
        for alpha in (1.0, 1.5, 2.0):
            oracle = _keys(exact_cut_list(g, alpha))
            assert len(oracle) < g.n ** (2 * alpha)
            if row['family'] == "cycle" and alpha == 1.0:
                assert len(oracle) == comb(g.n, 2)
            plan = make_plan(g.n, alpha, eta=0.01)
            seeds = range(1) if plan.exhaustive else range(100)
            complete = 0
            for seed in seeds:
                found = _keys(enumerate_alpha_min_cuts(g, alpha=alpha, eta=0.01, seed=seed, slack=1.0))
                assert found <= oracle
                complete += found == oracle
            rows.append({'graph': row['name'], 'alpha': alpha, 'cuts': len(oracle),
                         'runs': len(seeds), 'complete': complete})
    df = pd.DataFrame(rows)
    print(df.to_string(index=False))
    assert (df['complete'] >= 0.99 * df['runs']).all()
    assert (df['runs'] == 100).any()


def test_slack_band_is_flagged():
    # Path weights 1 and 1.5: the cut of value 1.5 sits inside the 5% band above alpha * c = 1.45.
    g = build(3, [(0, 1, 0.1), (1, 2, 0.1)])
    view = WeightedView(np.array([1.0, 1.5]), np.zeros(2, dtype=bool))
    cuts = enumerate_alpha_min_cuts(g, view, alpha=1.45, slack=1.05)
    flagged = [c for c in cuts if c.flagged]
    assert len(cuts) == 2
    assert len(flagged) == 1 and flagged[0].value == 1.5


def test_same_seed_same_cuts():
    g = build(7, cycle_edges(7, 0.1))
    first = enumerate_alpha_min_cuts(g, alpha=1.0, seed=11)
    again = enumerate_alpha_min_cuts(g, alpha=1.0, seed=11, threads=4)
    assert [c.key() for c in first] == [c.key() for c in again]


def test_rway_cuts():
    g = build(4, cycle_edges(4, 0.1))
    cuts = enumerate_alpha_min_rway_cuts(g, 3, alpha=1.0)
    assert len(cuts) == 4
    assert all(c.blocks == 3 and c.value == 3 for c in cuts)
    assert _keys(cuts) == _keys(exact_rway_cut_list(g, 3, 1.0))
    for cut in cuts:
        labels = cut.sides(4)
        assert labels[0] == 0
        assert sorted(set(labels.tolist())) == [0, 1, 2]

    assert len(enumerate_alpha_min_rway_cuts(g, 2, alpha=1.0)) == 6


def test_directed_eulerian_cuts():
    dg = build_directed(4, bidirected_cycle_arcs(4, 0.1))
    cuts = enumerate_directed_eulerian_cuts(dg, alpha=1.0)
    assert len(cuts) == 12
    assert all(c.value == 2 and c.direction in (0, 1) for c in cuts)
    for cut in cuts:
        sides = cut.sides(4)
        leaving = [sides[dg.tails[e]] == 0 for e in cut.edge_ids]
        assert all(leaving) if cut.direction == 0 else not any(leaving)

    try:
        check_eulerian(build_directed(3, [(0, 1, 0.1), (1, 2, 0.1)]))
    except InputError as e:
        assert "not Eulerian" in str(e)
    else:
        raise AssertionError("a directed path is not Eulerian")


def test_disconnected_graph_rejected():
    g = build(4, [(0, 1, 0.1), (2, 3, 0.1)])
    try:
        enumerate_alpha_min_cuts(g)
    except GraphInputError:
        pass
    else:
        raise AssertionError("enumeration needs a connected graph")


def test_single_trial_and_record_dict():
    g = build(5, cycle_edges(5, 0.1))
    plan = make_plan(5, 1.0)
    rng = np.random.default_rng(0)
    records = single_contraction_trial(g, None, plan, rng)
    # Two supervertices: exactly one bipartition.
    assert len(records) == 1
    assert records[0].value == 2

    record = CutRecord(0b0110, (0, 2), 2.0)
    row = record.to_dict(4)
    assert row['partition'] == [[0, 3], [1, 2]]
    assert row['edges'] == [0, 2]
    assert 'direction' not in row


def test_probability_weights():
    g = build(4, with_probability(cycle_edges(4, 0.1), 0.01))
    cuts = enumerate_alpha_min_cuts(g, WeightedView.from_probabilities(g), alpha=2.0)
    assert len(cuts) == 7
    assert isinstance(make_plan(4, 2.0), EnumerationPlan)


if __name__ == "__main__":
    test_plan_sizes()
    test_plan_rejections()
    test_minimum_cuts_of_cycle()
    test_alpha_cuts_match_oracle()
    test_corpus_cuts_over_seeds()
    test_slack_band_is_flagged()
    test_same_seed_same_cuts()
    test_rway_cuts()
    test_directed_eulerian_cuts()
    test_disconnected_graph_rejected()
    test_single_trial_and_record_dict()
    test_probability_weights()
    print("cut enumeration tests passed")
