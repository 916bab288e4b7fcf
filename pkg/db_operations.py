import json
import logging
from datetime import datetime

import numpy as np
import pandas as pd

from database import (
    get_db_session, init_db, GraphRecord, EstimationRun, AuditLog, log_audit
)
from data_models import get_sample_graphs, parse_edge_list
from multigraph import build, build_directed

logger = logging.getLogger(__name__)

GRAPH_COLUMNS = ['id', 'name', 'family', 'n', 'm', 'directed', 'description', 'created_at']
RUN_COLUMNS = ['id', 'run_date', 'graph_label', 'problem', 'method', 'estimate', 'epsilon', 'eta', 'seed',
               'n', 'm', 'min_cut', 'p_c', 'delta', 'cuts_enumerated', 'trials', 'certified_error_bound',
               'wall_ms']


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def to_json_value(value):
    """`value` with numpy scalars and arrays turned into plain JSON types."""
    return json.loads(json.dumps(value, default=_plain))


def seed_sample_graphs():
    """Load the sample corpus once; later calls are no-ops."""
    init_db()
    db = get_db_session()
    try:
        seeded = db.query(AuditLog).filter(AuditLog.action == "SEED").first()
        if seeded is not None:
            logger.debug("sample graphs already loaded")
            return False

        corpus = get_sample_graphs()
        for _, row in corpus.iterrows():
            db.add(GraphRecord(
                name=row['name'],
                family=row['family'],
                n=int(row['n']),
                m=int(row['m']),
                directed=False,
                edges=row['edges'],
                description=f"sample, p_high={row['p_high']}, p_low={row['p_low']}"
            ))
        log_audit(db, "SEED", "Corpus", after={"graphs": int(len(corpus))})
        db.commit()
        logger.info("sample graphs loaded")
        return True
    except Exception as e:
        db.rollback()
        logger.error("Error seeding sample graphs: %s", e)
        return False
    finally:
        db.close()


def save_graph(name: str, n: int, edges: list, family: str = "custom", directed: bool = False,
               description: str = None):
    """Insert or replace a graph by name; returns its id or None on failure."""
    init_db()
    db = get_db_session()
    try:
        payload = json.dumps([[int(u), int(v), float(p)] for u, v, p in edges])
        record = db.query(GraphRecord).filter(GraphRecord.name == name).first()
        action = 'UPDATE' if record else 'CREATE'
        if record is None:
            record = GraphRecord(name=name)
            db.add(record)
        record.family = family
        record.n = int(n)
        record.m = len(edges)
        record.directed = bool(directed)
        record.edges = payload
        record.description = description
        db.flush()
        log_audit(db, action, "Graph", record.id, after={"name": name, "n": int(n), "m": len(edges)})
        db.commit()
        return record.id
    except Exception as e:
        db.rollback()
        logger.error("Error saving graph %s: %s", name, e)
        return None
    finally:
        db.close()


def get_graphs_df():
    init_db()
    db = get_db_session()
    try:
        graphs = db.query(GraphRecord).order_by(GraphRecord.name).all()
        if not graphs:
            return pd.DataFrame(columns=GRAPH_COLUMNS)
        data = []
        for g in graphs:
            data.append({
                'id': g.id,
                'name': g.name,
                'family': g.family,
                'n': g.n,
                'm': g.m,
                'directed': g.directed,
                'description': g.description,
                'created_at': g.created_at
            })
        return pd.DataFrame(data)
    finally:
        db.close()


def load_graph(name: str):
    """Multigraph (or Digraph) stored under `name`, or None."""
    init_db()
    db = get_db_session()
    try:
        record = db.query(GraphRecord).filter(GraphRecord.name == name).first()
        if record is None:
            return None
        edges = parse_edge_list(record.edges)
        return build_directed(record.n, edges) if record.directed else build(record.n, edges)
    finally:
        db.close()


def delete_graph(name: str):
    db = get_db_session()
    try:
        record = db.query(GraphRecord).filter(GraphRecord.name == name).first()
        if record:
            before = {"name": record.name, "n": record.n, "m": record.m}
            log_audit(db, "DELETE", "Graph", record.id, before=before)
            db.delete(record)
            db.commit()
            return True
        return False
    except Exception as e:
        db.rollback()
        logger.error("Error deleting graph %s: %s", name, e)
        return False
    finally:
        db.close()


def save_estimation_run(graph_label: str, report: dict, parameters: dict = None, graph_name: str = None):
    """Store one report (as produced by Estimate.to_report); returns the run id or None."""
    report = to_json_value(report)
    init_db()
    db = get_db_session()
    try:
        graph_id = None
        if graph_name:
            record = db.query(GraphRecord).filter(GraphRecord.name == graph_name).first()
            graph_id = record.id if record else None
        run = EstimationRun(
            run_date=datetime.utcnow(),
            graph_id=graph_id,
            graph_label=graph_label,
            problem=report.get('problem', 'rel'),
            method=report.get('method', ''),
            estimate=report.get('estimate'),
            epsilon=report.get('epsilon'),
            eta=report.get('eta'),
            seed=report.get('seed'),
            n=report.get('n'),
            m=report.get('m'),
            min_cut=report.get('min_cut'),
            p_c=report.get('p_c'),
            delta=report.get('delta'),
            cuts_enumerated=report.get('cuts_enumerated'),
            trials=report.get('trials'),
            certified_error_bound=report.get('certified_error_bound'),
            wall_ms=report.get('wall_ms'),
            parameters=to_json_value(parameters) if parameters else None,
            report=report
        )
        db.add(run)
        db.commit()
        return run.id
    except Exception as e:
        db.rollback()
        logger.error("Error saving estimation run: %s", e)
        return None
    finally:
        db.close()


def get_estimation_history(problem: str = None, limit: int = 100):
    init_db()
    db = get_db_session()
    try:
        query = db.query(EstimationRun)
        if problem:
            query = query.filter(EstimationRun.problem == problem)
        runs = query.order_by(EstimationRun.run_date.desc(), EstimationRun.id.desc()).limit(limit).all()
        data = [{column: getattr(r, column) for column in RUN_COLUMNS} for r in runs]
        return pd.DataFrame(data) if data else pd.DataFrame(columns=RUN_COLUMNS)
    finally:
        db.close()


def get_run_report(run_id: int):
    db = get_db_session()
    try:
        run = db.query(EstimationRun).filter(EstimationRun.id == run_id).first()
        return run.report if run else None
    finally:
        db.close()


def get_audit_logs(entity_type: str = None, limit: int = 100):
    init_db()
    db = get_db_session()
    try:
        query = db.query(AuditLog)
        if entity_type:
            query = query.filter(AuditLog.entity_type == entity_type)
        logs = query.order_by(AuditLog.timestamp.desc(), AuditLog.id.desc()).limit(limit).all()
        data = []
        for log in logs:
            data.append({
                'id': log.id,
                'action': log.action,
                'entity_type': log.entity_type,
                'entity_id': log.entity_id,
                'before': json.dumps(log.before) if log.before else None,
                'after': json.dumps(log.after) if log.after else None,
                'timestamp': log.timestamp
            })
        return pd.DataFrame(data) if data else pd.DataFrame()
    finally:
        db.close()
