import json
import os
import tempfile

os.environ["DATABASE_URL"] = "sqlite:///" + os.path.join(tempfile.mkdtemp(), "relicut-test.db")

from data_models import cycle_edges, get_sample_graphs  # noqa: E402
from db_operations import (  # noqa: E402
    delete_graph, get_audit_logs, get_estimation_history, get_graphs_df, get_run_report, load_graph,
    save_estimation_run, save_graph, seed_sample_graphs, to_json_value
)
from estimators import estimate_fail  # noqa: E402
from multigraph import Multigraph  # noqa: E402


def test_sample_corpus_loads_once():
    assert seed_sample_graphs()
    assert not seed_sample_graphs()
    seeded = get_audit_logs("Corpus")
    assert list(seeded['action']) == ["SEED"]
    assert json.loads(seeded['after'].iloc[0]) == {"graphs": len(get_sample_graphs())}
    graphs = get_graphs_df()
    print(graphs[['name', 'n', 'm']])
    assert len(graphs) == len(get_sample_graphs())
    triangle = load_graph("triangle")
    assert isinstance(triangle, Multigraph)
    assert triangle.n == 3 and triangle.m == 3


def test_save_and_delete_graph():
    graph_id = save_graph("square", 4, cycle_edges(4, 0.01), family="cycle", description="test square")
    assert graph_id is not None
    assert save_graph("square", 4, cycle_edges(4, 0.02), family="cycle") == graph_id
    assert load_graph("square").uniform_p == 0.02

    logs = get_audit_logs("Graph")
    assert set(logs['action']) >= {"CREATE", "UPDATE"}

    assert delete_graph("square")
    assert load_graph("square") is None
    assert not delete_graph("square")

    logs = get_audit_logs("Graph")
    deleted = logs[logs['action'] == "DELETE"]
    assert len(deleted) == 1
    assert json.loads(deleted['before'].iloc[0])['name'] == "square"
    assert deleted['after'].iloc[0] is None


def test_estimation_history():
    g = load_graph("cycle-4") or Multigraph(4, tuple(cycle_edges(4, 0.1)))
    estimate = estimate_fail(g, epsilon=0.1, seed=1)
    report = estimate.to_report(timing=True)
    run_id = save_estimation_run("cycle-4", report, {'epsilon': 0.1}, graph_name="cycle-4")
    assert run_id is not None

    history = get_estimation_history()
    assert run_id in list(history['id'])
    assert get_estimation_history(problem="tutte").empty
    stored = get_run_report(run_id)
    assert stored['method'] == estimate.method
    assert abs(stored['estimate'] - estimate.value) < 1e-15
    assert stored == to_json_value(report)


if __name__ == "__main__":
    test_sample_corpus_loads_once()
    test_save_and_delete_graph()
    test_estimation_history()
    print("database tests passed")
