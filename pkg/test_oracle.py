import math

from data_models import (
    BudgetError, OracleBudget, bidirected_cycle_arcs, bundled_cycle_edges, cycle_edges, path_edges
)
from multigraph import build, build_directed
from oracle import (
    exact_cut_list, exact_fail, exact_kconn_fail, exact_multiterminal_fail, exact_orientation_fail,
    exact_partition_tail, exact_rway_cut_list, exact_rway_fail, exact_strong_fail
)


def test_all_terminal_closed_forms():
    p = 0.1
    # A path fails when any edge fails.
    assert math.isclose(exact_fail(build(4, path_edges(4, p))), 1 - (1 - p) ** 3)
    # A cycle fails when at least two edges fail.
    q = 1 - p
    assert math.isclose(exact_fail(build(4, cycle_edges(4, p))), 1 - q ** 4 - 4 * p * q ** 3)
    assert exact_fail(build(3, cycle_edges(3, 0.0))) == 0.0


def test_other_problems():
    triangle = build(3, cycle_edges(3, 0.5))
    assert math.isclose(exact_fail(triangle), 0.5)
    assert math.isclose(exact_rway_fail(triangle, 3), 0.125)
    assert math.isclose(exact_kconn_fail(triangle, 2), 1 - 0.125)
    assert math.isclose(exact_multiterminal_fail(triangle, [0, 1]), 0.375)
    assert math.isclose(exact_orientation_fail(triangle), 0.75)
    assert math.isclose(exact_orientation_fail(build(4, cycle_edges(4, 0.5))), 0.875)

    directed_triangle = build_directed(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)])
    assert math.isclose(exact_strong_fail(directed_triangle), 1 - 0.125)
    assert exact_strong_fail(build_directed(4, bidirected_cycle_arcs(4, 0.5))) < 1.0


def test_cut_lists():
    g = build(4, cycle_edges(4, 0.1))
    assert len(exact_cut_list(g, 1.0)) == 6
    assert len(exact_cut_list(g, 2.0)) == 7
    banded = exact_cut_list(g, 1.0, slack=2.0)
    assert len(banded) == 7 and sum(c.flagged for c in banded) == 1

    assert len(exact_rway_cut_list(g, 3, 1.0)) == 4
    assert len(exact_rway_cut_list(g, 3, 2.0)) == 6
    assert len(exact_rway_cut_list(g, 2, 1.0)) == 6


def test_partition_tail():
    g = build(4, cycle_edges(4, 0.2))
    tail = exact_partition_tail(g)
    assert math.isclose(tail.s[1], 1.0)
    assert math.isclose(tail.s[2], exact_fail(g))
    assert math.isclose(tail.s[3], exact_rway_fail(g, 3))
    assert math.isclose(sum(tail.p_exact.values()), 1.0)

    cuts = exact_cut_list(g, 1.0)
    with_events = exact_partition_tail(g, p=0.3, events=cuts)
    assert math.isclose(with_events.S[0], 1.0)
    assert math.isclose(with_events.S[1], exact_fail(g.with_probability(0.3)))
    assert math.isclose(sum(with_events.t.values()), 1.0)


def test_budgets():
    big = build(4, bundled_cycle_edges(4, 6, 0.1))
    try:
        exact_fail(big)
    except BudgetError as e:
        print(f"refused: {e}")
        assert e.required == 24
    else:
        raise AssertionError("24 edges exceed the default oracle budget")

    try:
        exact_fail(build(4, cycle_edges(4, 0.1)), OracleBudget(max_edges=3))
    except BudgetError:
        pass
    else:
        raise AssertionError("a custom budget applies")
    try:
        exact_orientation_fail(build(4, bundled_cycle_edges(4, 5, 0.5)))
    except BudgetError:
        pass
    else:
        raise AssertionError("20 orientable edges exceed the orientation budget")


if __name__ == "__main__":
    test_all_terminal_closed_forms()
    test_other_problems()
    test_cut_lists()
    test_partition_tail()
    test_budgets()
    print("oracle tests passed")
