import math

import numpy as np

from data_models import (
    GraphInputError, InputError, bundled_cycle_edges, clique_edges, cycle_edges, path_edges, random_connected_edges
)
from multigraph import (
    DisjointSet, WeightedView, bipartition_sides, build, build_directed, connected_rows,
    contract, ContractionState, is_graph_connected, k_edge_connected_rows, min_cut_value,
    min_directed_cut_value, min_rway_cut_value, min_terminal_cut_value, quotient_labels,
    set_partitions, strongly_connected_rows, terminals_connected_rows
)


def test_disjoint_set():
    ds = DisjointSet(5)
    assert ds.union(0, 1)
    assert ds.union(3, 4)
    assert not ds.union(1, 0)
    assert ds.count == 3
    assert ds.find(0) == ds.find(1)
    assert list(ds.labels()) == [0, 0, 1, 2, 2]

    copy = ds.copy()
    copy.union(1, 2)
    assert copy.count == 2
    assert ds.count == 3


def test_build_rejects_bad_edges():
    for edges in ([(0, 0, 0.1)], [(0, 3, 0.1)], [(0, 1, 1.5)], [(0, 1)]):
        try:
            build(3, edges)
        except GraphInputError as e:
            print(f"rejected {edges}: {e}")
        else:
            raise AssertionError(f"{edges} should be rejected")
    try:
        build(0, [])
    except InputError:
        pass
    else:
        raise AssertionError("an empty vertex set should be rejected")


def test_graph_arrays():
    g = build(3, [(0, 1, 0.1), (1, 2, 0.2), (0, 1, 0.1)])
    assert g.m == 3
    assert list(g.tails) == [0, 1, 0]
    assert g.uniform_p is None
    assert g.with_probability(0.3).uniform_p == 0.3
    assert g.to_networkx().number_of_edges() == 3


def test_min_cut_values():
    assert min_cut_value(build(4, cycle_edges(4, 0.1))).value == 2
    assert min_cut_value(build(4, clique_edges(4, 0.1))).value == 3
    assert min_cut_value(build(4, bundled_cycle_edges(4, 3, 0.1))).value == 6

    g = build(4, cycle_edges(4, 0.01))
    weighted = min_cut_value(g, WeightedView.from_probabilities(g))
    assert math.isclose(weighted.value, -2 * math.log(0.01))
    crossing = np.flatnonzero(weighted.side[g.tails] != weighted.side[g.heads])
    assert len(crossing) == 2
    assert not weighted.side[0]

    split = min_cut_value(build(4, [(0, 1, 0.1), (2, 3, 0.1)]))
    assert split.value == 0 and split.disconnected

    solid = build(3, [(0, 1, 0.0), (1, 2, 0.0)])
    assert math.isinf(min_cut_value(solid, WeightedView.from_probabilities(solid)).value)


def _random_multigraph(rng, n):
    m = int(rng.integers(n - 1, 2 * n + 4))
    base = random_connected_edges(n, m, 0.1, seed=int(rng.integers(1 << 30)))
    return build(n, [(u, v, float(rng.uniform(0.01, 0.5))) for u, v, _ in base])


def _crossing(g, sides):
    return sides[:, g.tails] != sides[:, g.heads]


def test_min_cut_matches_all_bipartitions():
    rng = np.random.default_rng(17)
    for _ in range(60):
        g = _random_multigraph(rng, int(rng.integers(2, 9)))
        crossing = _crossing(g, bipartition_sides(g.n))
        view = WeightedView.from_probabilities(g)

        unit = min_cut_value(g)
        assert unit.value == crossing.sum(axis=1).min()
        weighted = min_cut_value(g, view)
        assert math.isclose(weighted.value, float((crossing @ view.weights).min()), rel_tol=1e-12)
        achieved = weighted.side[g.tails] != weighted.side[g.heads]
        assert math.isclose(float(view.weights[achieved].sum()), weighted.value, rel_tol=1e-12)


def test_cut_survives_contraction_iff_untouched():
    rng = np.random.default_rng(23)
    for _ in range(40):
        g = _random_multigraph(rng, int(rng.integers(3, 9)))
        sides = bipartition_sides(g.n)
        crossing = _crossing(g, sides)
        state = ContractionState.initial(g)
        contracted = []
        for _ in range(int(rng.integers(1, g.n - 1))):
            e = int(rng.choice(state.surviving))
            contracted.append(e)
            state = contract(state, e)
        roots = np.array([state.supervertex(v) for v in range(g.n)])
        assert state.supervertices == len(set(roots.tolist()))
        assert state.surviving == [e for e in range(g.m) if roots[g.tails[e]] != roots[g.heads[e]]]
        for row, side in enumerate(sides):
            survives = bool((side == side[roots]).all())
            assert survives == (not crossing[row, contracted].any()), (row, contracted)


def test_rway_and_terminal_cuts():
    g = build(4, cycle_edges(4, 0.1))
    assert min_rway_cut_value(g, 3).value == 3
    assert min_rway_cut_value(g, 4).value == 4
    try:
        min_rway_cut_value(g, 5)
    except InputError:
        pass
    else:
        raise AssertionError("r above n should be rejected")

    path = build(3, path_edges(3, 0.1))
    assert min_terminal_cut_value(path, [0, 2]).value == 1
    assert min_terminal_cut_value(build(5, cycle_edges(5, 0.1)), [0, 2]).value == 2


def test_directed_cut_values():
    directed_cycle = build_directed(4, [(i, (i + 1) % 4, 0.1) for i in range(4)])
    assert min_directed_cut_value(directed_cycle).value == 1
    bidirected = build_directed(4, [(i, (i + 1) % 4, 0.1) for i in range(4)] +
                                [((i + 1) % 4, i, 0.1) for i in range(4)])
    assert min_directed_cut_value(bidirected).value == 2
    assert bidirected.is_strongly_connected()
    assert bidirected.eulerian_mismatches() == []

    directed_path = build_directed(3, [(0, 1, 0.1), (1, 2, 0.1)])
    assert not directed_path.is_strongly_connected()
    assert directed_path.eulerian_mismatches() == [(0, 0, 1), (2, 1, 0)]
    assert min_directed_cut_value(directed_path).value == 0


def test_batch_predicates():
    g = build(4, cycle_edges(4, 0.1))
    alive = np.array([[True, True, True, True],
                      [False, True, True, True],
                      [False, True, False, True],
                      [False, False, False, False]])
    assert list(connected_rows(g, alive)) == [True, True, False, False]
    assert list(k_edge_connected_rows(g, alive, 2)) == [True, False, False, False]
    # Edge 0 joins 0-1, edge 2 joins 2-3: losing both leaves {1, 2} and {3, 0}.
    assert list(terminals_connected_rows(g, alive, [1, 2])) == [True, True, True, False]
    assert list(terminals_connected_rows(g, alive, [0, 2])) == [True, True, False, False]

    tails = np.array([0, 1, 2, 3])
    heads = np.array([1, 2, 3, 0])
    arcs = np.array([[True] * 4, [True, True, False, True]])
    assert list(strongly_connected_rows(4, tails, heads, arcs)) == [True, False]


def test_partitions():
    assert bipartition_sides(4).shape == (7, 4)
    assert not bipartition_sides(4)[:, 0].any()
    assert len(set_partitions(4, 2)) == 7
    assert len(set_partitions(4, 3)) == 6
    assert len(set_partitions(5, 5)) == 1
    assert len(set_partitions(3, 4)) == 0


def test_contraction_and_quotient():
    g = build(4, cycle_edges(4, 0.1))
    state = ContractionState.initial(g)
    state = contract(state, 0)
    assert state.supervertices == 3
    assert 0 not in state.surviving
    try:
        contract(state, 0)
    except InputError:
        pass
    else:
        raise AssertionError("contracting an internal edge should fail")

    labels, count = quotient_labels(g, np.array([True, False, True, False]))
    assert count == 2
    assert labels[0] == labels[1] and labels[2] == labels[3]
    assert is_graph_connected(g)


if __name__ == "__main__":
    test_disjoint_set()
    test_build_rejects_bad_edges()
    test_graph_arrays()
    test_min_cut_values()
    test_min_cut_matches_all_bipartitions()
    test_cut_survives_contraction_iff_untouched()
    test_rway_and_terminal_cuts()
    test_directed_cut_values()
    test_batch_predicates()
    test_partitions()
    test_contraction_and_quotient()
    print("multigraph tests passed")
