# paratomo/database.py
import logging
import sqlite3

class LedgerManager:
    """Manages the SQLite run ledger: one row per run plus its audit checks."""

    def __init__(self, db_path):
        """
        Initializes the LedgerManager.

        :param db_path: The path to the SQLite database file (':memory:' works).
        """
        self.db_path = db_path
        self.conn = None
        logging.debug("LedgerManager initialized for path: %s", self.db_path)

    def _get_connection(self):
        """Establishes and returns a database connection."""
        if self.conn is None:
            try:
                self.conn = sqlite3.connect(self.db_path)
                self.conn.row_factory = sqlite3.Row
            except sqlite3.Error as e:
                logging.critical("Could not connect to ledger at %s. Error: %s", self.db_path, e)
                raise
        return self.conn

    def close_connection(self):
        """Closes the database connection if it's open."""
        if self.conn:
            self.conn.close()
            self.conn = None
            logging.debug("Ledger connection closed.")

    def setup(self):
        """Creates the ledger tables if they don't exist."""
        logging.debug("Setting up ledger schema...")
        try:
            conn = self._get_connection()
            cursor = conn.cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    experiment TEXT NOT NULL,
                    seed TEXT NOT NULL,
                    config_digest TEXT NOT NULL,
                    status TEXT NOT NULL DEFAULT 'running',
                    exit_code INTEGER,
                    report_path TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS audit_checks (
                    run_id INTEGER NOT NULL REFERENCES runs(run_id),
                    check_id TEXT NOT NULL,
                    passed INTEGER NOT NULL,
                    detail TEXT,
                    PRIMARY KEY (run_id, check_id)
                )
            """)
            conn.commit()
            logging.debug("Ledger initialized successfully.")
        except sqlite3.Error as e:
            logging.critical("Ledger setup failed: %s", e)
            raise

    def start_run(self, experiment, seed, config_digest):
        """Records a new run and returns its id."""
        conn = self._get_connection()
        cursor = conn.cursor()
        # Seeds are u64 and overflow SQLite's signed integers.
        cursor.execute("INSERT INTO runs (experiment, seed, config_digest) VALUES (?, ?, ?)",
                       (experiment, str(seed), config_digest))
        conn.commit()
        logging.debug("Started ledger run %d (%s, seed %s).", cursor.lastrowid, experiment, seed)
        return cursor.lastrowid

    def finish_run(self, run_id, status, exit_code, report_path=None):
        """Stores the outcome of a run."""
        try:
            conn = self._get_connection()
            conn.execute("UPDATE runs SET status = ?, exit_code = ?, report_path = ? WHERE run_id = ?",
                         (status, exit_code, report_path, run_id))
            conn.commit()
            return True
        except sqlite3.Error as e:
            logging.error("Failed to finish ledger run %d. Error: %s", run_id, e)
            return False

    def add_check(self, run_id, check_id, passed, detail=""):
        """Adds (or replaces) the outcome of one named check."""
        conn = self._get_connection()
        conn.execute("INSERT OR REPLACE INTO audit_checks (run_id, check_id, passed, detail) VALUES (?, ?, ?, ?)",
                     (run_id, check_id, int(bool(passed)), detail))
        conn.commit()

    def get_checks(self, run_id):
        """Returns the checks of a run ordered by id."""
        cursor = self._get_connection().cursor()
        cursor.execute("SELECT check_id, passed, detail FROM audit_checks WHERE run_id = ? ORDER BY check_id",
                       (run_id,))
        return [{'check_id': row['check_id'], 'passed': bool(row['passed']), 'detail': row['detail']}
                for row in cursor.fetchall()]

    def get_runs(self, experiment=None):
        """Returns recorded runs, newest first, optionally for one experiment."""
        cursor = self._get_connection().cursor()
        if experiment is None:
            cursor.execute("SELECT * FROM runs ORDER BY run_id DESC")
        else:
            cursor.execute("SELECT * FROM runs WHERE experiment = ? ORDER BY run_id DESC", (experiment,))
        return [dict(row) for row in cursor.fetchall()]
