"""Figure rendering smoke tests (headless, file output only)."""

import pytest

from planeguard.errors import InvalidInputError
from planeguard.figures import render_report_figure, render_tradeoff_figure

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _report_row(s, task, acc):
    return {
        "s": str(s),
        "task": task,
        "accuracy": str(acc),
        "n_train": "8",
        "n_test": "2",
        "seed": "0",
    }


def test_report_figure_writes_png(tmp_path):
    rows = [_report_row(s, "forensics_zeroed", 0.9 - 0.05 * s) for s in range(9)]
    rows += [_report_row(s, "forensics_raw", 0.55) for s in range(9)]
    out = tmp_path / "report.png"
    render_report_figure(rows, out)
    assert out.read_bytes()[:8] == _PNG_MAGIC


def test_tradeoff_figure_handles_blanks(tmp_path):
    rows = [
        {"s": "0", "forensics_accuracy": "0.9", "recognizability_accuracy": "0.76", "privacy_index": "0.24"},
        {"s": "5", "forensics_accuracy": "0.81", "recognizability_accuracy": "", "privacy_index": ""},
    ]
    out = tmp_path / "tradeoff.png"
    render_tradeoff_figure(rows, out)
    assert out.read_bytes()[:8] == _PNG_MAGIC


def test_figures_reject_empty_rows(tmp_path):
    with pytest.raises(InvalidInputError):
        render_report_figure([], tmp_path / "a.png")
    with pytest.raises(InvalidInputError):
        render_tradeoff_figure([], tmp_path / "b.png")
