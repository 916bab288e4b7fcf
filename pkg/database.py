import os
from datetime import datetime

from sqlalchemy import (
    JSON, Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine, event
)
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

DATABASE_URL = os.environ.get("DATABASE_URL", "sqlite:///./relicut.db")


def make_engine(url: str):
    """Engine for `url`; SQLite connections get foreign keys switched on."""
    if not url.startswith("sqlite"):
        return create_engine(url, pool_pre_ping=True)
    sqlite_engine = create_engine(url, connect_args={"check_same_thread": False})

    def _foreign_keys_on(dbapi_connection, _record):
        dbapi_connection.execute("PRAGMA foreign_keys=ON")

    event.listen(sqlite_engine, "connect", _foreign_keys_on)
    return sqlite_engine


engine = make_engine(DATABASE_URL)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


class GraphRecord(Base):
    __tablename__ = "graphs"

    id = Column(Integer, primary_key=True, index=True)
    name = Column(String(100), unique=True, index=True, nullable=False)
    family = Column(String(50), default="custom")
    n = Column(Integer, nullable=False)
    m = Column(Integer, nullable=False)
    directed = Column(Boolean, default=False)
    # JSON list of [u, v, p_fail], 0-indexed
    edges = Column(Text, nullable=False)
    description = Column(Text)
    created_at = Column(DateTime, default=datetime.utcnow)
    updated_at = Column(DateTime, default=datetime.utcnow, onupdate=datetime.utcnow)

    runs = relationship("EstimationRun", back_populates="graph")


class EstimationRun(Base):
    __tablename__ = "estimation_runs"

    id = Column(Integer, primary_key=True, index=True)
    run_date = Column(DateTime, default=datetime.utcnow, nullable=False)
    graph_id = Column(Integer, ForeignKey("graphs.id", ondelete="SET NULL"))
    graph_label = Column(String(200))
    problem = Column(String(50), nullable=False, index=True)
    method = Column(String(50), nullable=False)
    estimate = Column(Float)
    epsilon = Column(Float)
    eta = Column(Float)
    seed = Column(Integer)
    n = Column(Integer)
    m = Column(Integer)
    min_cut = Column(Float)
    p_c = Column(Float)
    delta = Column(Float)
    cuts_enumerated = Column(Integer)
    trials = Column(Integer)
    certified_error_bound = Column(Float)
    wall_ms = Column(Float)
    parameters = Column(JSON)
    report = Column(JSON)

    graph = relationship("GraphRecord", back_populates="runs")


class AuditLog(Base):
    """One row per change to the graph store; 'SEED' marks the corpus load."""
    __tablename__ = "audit_logs"

    id = Column(Integer, primary_key=True, index=True)
    timestamp = Column(DateTime, default=datetime.utcnow, index=True)
    action = Column(String(20), nullable=False)
    entity_type = Column(String(50), nullable=False)
    entity_id = Column(String(100))
    before = Column(JSON)
    after = Column(JSON)


def init_db():
    Base.metadata.create_all(bind=engine)


def get_db_session():
    return SessionLocal()


def log_audit(db, action: str, entity_type: str, entity_id=None, before: dict = None, after: dict = None):
    """Add an audit row to the caller's transaction; the caller commits."""
    entry = AuditLog(action=action, entity_type=entity_type,
                     entity_id=None if entity_id is None else str(entity_id),
                     before=before, after=after)
    db.add(entry)
    return entry
