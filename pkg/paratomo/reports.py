# paratomo/reports.py
import csv
import json
import logging
import os

import numpy as np

from .recovery import operator_from_arrays

TRAJECTORY_COLUMNS = ("x", "observable_id", "estimate", "stderr")


def _to_builtin(value):
    """json.dumps fallback for numpy scalars and arrays."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps_summary(summary):
    """Deterministic JSON text: sorted keys, fixed indentation, numpy values converted."""
    return json.dumps(summary, sort_keys=True, indent=2, default=_to_builtin) + "\n"


class ReportWriter:
    """Writes run reports: a JSON summary, a CSV trajectory and an .npz coefficient sidecar."""

    def __init__(self, config, dry_run=False):
        """
        Initializes the ReportWriter.

        :param config: The configuration dictionary.
        :param dry_run: If True, nothing is written to disk.
        """
        self.config = config
        self.dry_run = dry_run
        self.out_dir = config['output']['dir']
        logging.debug("ReportWriter initialized (Dry Run: %s, Output: %s)", self.dry_run, self.out_dir)

    def report_name(self):
        name = self.config['output'].get('name')
        return name or f"{self.config['experiment']}_seed{self.config['seed']}"

    def write_group(self, name, summary=None, rows=None, arrays=None):
        """
        Writes the files of one report as a single transaction.

        If any file fails, the files already written for this group are removed.
        Returns the {kind: path} mapping, or None when the group was rolled back.
        """
        base = os.path.join(self.out_dir, name)
        files = []
        if summary is not None:
            files.append(("summary", f"{base}.json", lambda path: self._write_json(path, summary)))
        if rows is not None:
            files.append(("trajectory", f"{base}.csv", lambda path: self._write_csv(path, rows)))
        if arrays is not None:
            files.append(("coefficients", f"{base}.npz", lambda path: self._write_npz(path, arrays)))

        if self.dry_run:
            for kind, path, _ in files:
                logging.info("[DRY RUN] Would write %s report: %s", kind, path)
            return {kind: path for kind, path, _ in files}

        os.makedirs(self.out_dir, exist_ok=True)
        written = {}
        for kind, path, writer in files:
            try:
                writer(path)
                written[kind] = path
                logging.info("  + %s: %s", kind, os.path.basename(path))
            except Exception as e:
                logging.error("  ! FAILED to write %s report '%s'. Rolling back this group. Error: %s", kind, path, e)
                self._rollback(written.values())
                raise
        return written

    def _rollback(self, paths):
        for path in paths:
            try:
                if os.path.exists(path):
                    os.remove(path)
                    logging.info("    - ROLLED BACK (deleted): %s", os.path.basename(path))
            except OSError as e:
                logging.error("    - FAILED to roll back %s. Error: %s", os.path.basename(path), e)

    @staticmethod
    def _write_json(path, summary):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(dumps_summary(summary))

    @staticmethod
    def _write_csv(path, rows):
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRAJECTORY_COLUMNS)
            for row in rows:
                stderr = row.get('stderr')
                writer.writerow([
                    repr(float(row['x'])),
                    row['observable_id'],
                    repr(float(row['estimate'])),
                    "" if stderr is None else repr(float(stderr)),
                ])

    @staticmethod
    def _write_npz(path, arrays):
        with open(path, 'wb') as f:
            np.savez(f, **arrays)


def load_coefficients(path):
    """Reads an .npz coefficient sidecar back into a ParametrizedOperator."""
    logging.debug("Loading coefficient sidecar from %s", path)
    with np.load(path, allow_pickle=False) as data:
        return operator_from_arrays({key: data[key] for key in data.files})


def read_trajectory(path):
    """Parses a trajectory CSV into row dicts (stderr None when empty)."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        rows = []
        for row in csv.DictReader(f):
            rows.append({
                'x': float(row['x']),
                'observable_id': row['observable_id'],
                'estimate': float(row['estimate']),
                'stderr': float(row['stderr']) if row['stderr'] else None,
            })
        return rows
