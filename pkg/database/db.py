"""
Database module for the corpus builder
SQLite checkpoint ledger: which stage of which language pair finished,
and where an interrupted stage should resume
"""

import json
import logging
import os
import sqlite3
from datetime import datetime, timezone

from modules.errors import DataError

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'schema.sql')


def get_connection(db_path):
    """Create and return a database connection"""
    conn = sqlite3.connect(db_path, check_same_thread=False)
    conn.row_factory = sqlite3.Row  # Enable column access by name
    return conn


def initialize_database(db_path):
    """Create the ledger tables if they do not exist"""
    os.makedirs(os.path.dirname(os.path.abspath(db_path)), exist_ok=True)
    conn = get_connection(db_path)
    try:
        with open(SCHEMA_PATH, 'r') as f:
            conn.executescript(f.read())
        conn.commit()
    finally:
        conn.close()
    logger.debug("checkpoint ledger ready at %s", db_path)


def execute_query(db_path, query, params=None, fetch_one=False, fetch_all=False):
    """
    Execute a database query with error handling

    Args:
        db_path: ledger file
        query: SQL query string
        params: Query parameters (tuple or dict)
        fetch_one: Return single row
        fetch_all: Return all rows

    Returns:
        Query results, or the last row id for writes
    """
    conn = get_connection(db_path)
    try:
        cursor = conn.execute(query, params or ())
        if fetch_one:
            return cursor.fetchone()
        if fetch_all:
            return cursor.fetchall()
        conn.commit()
        return cursor.lastrowid
    except sqlite3.Error as e:
        logger.error("ledger error on %s: %s", db_path, e)
        raise DataError(f"checkpoint ledger {db_path}: {e}")
    finally:
        conn.close()


def save_checkpoint(db_path, pair, stage, position=None, status="running", payload=None):
    """Record progress for one (pair, stage)"""
    query = """
        INSERT INTO checkpoints (pair, stage, position, status, payload, updated_at)
        VALUES (?, ?, ?, ?, ?, ?)
        ON CONFLICT(pair, stage) DO UPDATE SET
            position = excluded.position,
            status = excluded.status,
            payload = excluded.payload,
            updated_at = excluded.updated_at
    """
    params = (
        pair, stage, position, status,
        json.dumps(payload or {}, sort_keys=True),
        datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    return execute_query(db_path, query, params)


def load_checkpoint(db_path, pair, stage):
    """Return {position, status, payload} for one (pair, stage), or None"""
    if not os.path.exists(db_path):
        return None
    row = execute_query(
        db_path,
        "SELECT position, status, payload FROM checkpoints WHERE pair = ? AND stage = ?",
        (pair, stage),
        fetch_one=True,
    )
    if row is None:
        return None
    return {"position": row["position"], "status": row["status"], "payload": json.loads(row["payload"])}


def list_checkpoints(db_path):
    if not os.path.exists(db_path):
        return []
    rows = execute_query(db_path, "SELECT pair, stage, position, status FROM checkpoints ORDER BY pair, stage",
                         fetch_all=True)
    return [dict(row) for row in rows]


def clear_checkpoints(db_path):
    if os.path.exists(db_path):
        execute_query(db_path, "DELETE FROM checkpoints")
