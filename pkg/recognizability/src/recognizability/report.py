"""Shared report CSV rows for the recognizability task.

The schema `s,task,accuracy,n_train,n_test,seed` is the interchange
contract with the forensics tooling: rows written here merge into its
trade-off table (`planeguard tradeoff --recognizability ...`), which
derives the privacy index column as 1 - accuracy.
"""

import csv
from pathlib import Path

from .errors import DataFormatError, InvalidArgumentError

REPORT_COLUMNS = ("s", "task", "accuracy", "n_train", "n_test", "seed")
TASK = "recognizability"


def _check_row(s, accuracy, n_train, n_test):
    if not 0 <= s <= 8:
        raise InvalidArgumentError(f"s must be in 0..8, got {s}")
    if not 0.0 <= accuracy <= 1.0:
        raise InvalidArgumentError(f"accuracy must be in [0, 1], got {accuracy}")
    if n_train < 0 or n_test < 0:
        raise InvalidArgumentError("counts must be non-negative")


def append_report_row(path, s, accuracy, n_train, n_test, seed):
    """Append one recognizability row, creating the file with a header if needed.

    The accuracy is written as repr(float) so it reads back bit-exact.
    """
    _check_row(s, accuracy, n_train, n_test)
    path = Path(path)
    fresh = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(REPORT_COLUMNS)
        writer.writerow([str(int(s)), TASK, repr(float(accuracy)),
                         str(int(n_train)), str(int(n_test)), str(int(seed))])


def read_report_rows(path):
    """Parse a report CSV back into (s, task, accuracy, n_train, n_test, seed) tuples."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from None
    if not rows or tuple(rows[0]) != REPORT_COLUMNS:
        raise DataFormatError(f"{path}: bad or missing header")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(REPORT_COLUMNS):
            raise DataFormatError(f"{path}:{lineno}: expected {len(REPORT_COLUMNS)} columns")
        try:
            s = int(row[0])
            accuracy = float(row[2])
            n_train, n_test, seed = int(row[3]), int(row[4]), int(row[5])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
        _check_row(s, accuracy, n_train, n_test)
        out.append((s, row[1], accuracy, n_train, n_test, seed))
    return out


def privacy_index(accuracy):
    """1 - accuracy; the anonymity score the trade-off table derives from these rows."""
    if not isinstance(accuracy, float):
        raise InvalidArgumentError(f"accuracy must be a float, got {type(accuracy).__name__}")
    if not 0.0 <= accuracy <= 1.0:
        raise InvalidArgumentError(f"accuracy must be in [0, 1], got {accuracy}")
    return 1.0 - accuracy
