"""Manifest handling, splitting, synthesis, experiment loop, and reports."""

from pathlib import Path

import numpy as np
import pytest

from planeguard import (
    extract_features,
    ingest_manifest,
    privacy_index,
    run_forensics_experiment,
    split,
    synthesize_dataset,
    tradeoff_report,
)
from planeguard.errors import (
    DataFormatError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidTrainingSetError,
)
from planeguard.experiments import (
    TASK_RAW,
    TASK_ZEROED,
    DatasetManifest,
    ExperimentConfig,
    ManifestEntry,
    ReportRow,
    _row_to_strings,
    extract_manifest_features,
    label_counts,
    make_tampered_pair,
    read_report_csv,
    read_tradeoff_csv,
    write_report_csv,
)
from planeguard.fileio import read_pgm
from planeguard.residuals import kernel_residual

# ---------------------------------------------------------------------------
# manifests


def _write_manifest(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


def test_ingest_minimal_manifest(tmp_path):
    p = _write_manifest(tmp_path / "m.csv", ["path,label", "a.pgm,authentic", "b.pgm,tampered"])
    m = ingest_manifest(p, check_paths=False)
    assert len(m) == 2
    assert m.entries[0].path == "a.pgm" and m.entries[0].label == "authentic"
    assert m.entries[0].group == "a.pgm"  # group defaults to the path
    assert m.resolve(m.entries[1]) == tmp_path / "b.pgm"
    assert label_counts(m) == {"authentic": 1, "tampered": 1}


def test_ingest_group_and_class_columns(tmp_path):
    p = _write_manifest(
        tmp_path / "m.csv",
        ["path,label,class,group", "a.pgm,authentic,cat,g1", "b.pgm,authentic,dog,g1"],
    )
    m = ingest_manifest(p, check_paths=False)
    assert m.entries[0].cls == "cat"
    assert {e.group for e in m.entries} == {"g1"}


def test_ingest_rejects_duplicates(tmp_path):
    p = _write_manifest(tmp_path / "m.csv", ["path,label", "a.pgm,authentic", "a.pgm,tampered"])
    with pytest.raises(DataFormatError, match="m.csv:3.*duplicate"):
        ingest_manifest(p, check_paths=False)


def test_ingest_rejects_unknown_columns(tmp_path):
    p = _write_manifest(tmp_path / "m.csv", ["path,label,extra", "a.pgm,authentic,1"])
    with pytest.raises(DataFormatError, match="unknown manifest columns"):
        ingest_manifest(p, check_paths=False)


def test_ingest_requires_path_and_label(tmp_path):
    p = _write_manifest(tmp_path / "m.csv", ["path,class", "a.pgm,x"])
    with pytest.raises(DataFormatError, match="needs 'path' and 'label'"):
        ingest_manifest(p, check_paths=False)
    p = _write_manifest(tmp_path / "m2.csv", ["path,label", "a.pgm,"])
    with pytest.raises(DataFormatError, match="m2.csv:2"):
        ingest_manifest(p, check_paths=False)


def test_ingest_checks_file_existence(tmp_path):
    p = _write_manifest(tmp_path / "m.csv", ["path,label", "missing.pgm,authentic"])
    with pytest.raises(DataFormatError, match="not found"):
        ingest_manifest(p)


def test_ingest_rejects_empty(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        ingest_manifest(p)
    p.write_text("path,label\n")
    with pytest.raises(DataFormatError, match="no rows"):
        ingest_manifest(p)


# ---------------------------------------------------------------------------
# splitting


def _manifest_of(entries):
    return DatasetManifest(
        tuple(ManifestEntry(p, label, "", group or p) for p, label, group in entries),
        Path("."),
    )


def test_split_exact_ratio_with_singleton_groups():
    entries = [(f"a{i}.pgm", "authentic", None) for i in range(100)]
    entries += [(f"t{i}.pgm", "tampered", None) for i in range(100)]
    train_m, test_m = split(_manifest_of(entries), ratio=0.8, seed=3)
    assert len(train_m) == 160 and len(test_m) == 40
    assert label_counts(test_m) == {"authentic": 20, "tampered": 20}


def test_split_is_deterministic():
    entries = [(f"a{i}.pgm", "authentic", None) for i in range(20)]
    entries += [(f"t{i}.pgm", "tampered", None) for i in range(20)]
    m = _manifest_of(entries)
    first = split(m, seed=5)
    second = split(m, seed=5)
    assert [e.path for e in first[1].entries] == [e.path for e in second[1].entries]
    other = split(m, seed=6)
    assert [e.path for e in other[1].entries] != [e.path for e in first[1].entries]


def test_split_never_straddles_groups():
    entries = []
    for i in range(20):
        label = "authentic" if i < 10 else "tampered"
        entries.append((f"img{i}a.pgm", label, f"g{i}"))
        entries.append((f"img{i}b.pgm", label, f"g{i}"))
    train_m, test_m = split(_manifest_of(entries), ratio=0.8, seed=1)
    train_groups = {e.group for e in train_m.entries}
    test_groups = {e.group for e in test_m.entries}
    assert not train_groups & test_groups
    assert len(train_m) + len(test_m) == 40


def test_split_rejects_mixed_label_groups():
    entries = [
        ("a.pgm", "authentic", "g"),
        ("b.pgm", "tampered", "g"),
        ("c.pgm", "authentic", None),
        ("d.pgm", "tampered", None),
    ]
    with pytest.raises(InvalidInputError, match="mixes labels"):
        split(_manifest_of(entries))


def test_split_validates_ratio_and_coverage():
    entries = [("a.pgm", "authentic", None), ("b.pgm", "tampered", None)]
    with pytest.raises(InvalidArgumentError):
        split(_manifest_of(entries), ratio=1.0)
    # tampered test quota rounds to zero, so the test side loses a class
    entries = [(f"a{i}.pgm", "authentic", None) for i in range(3)]
    entries += [(f"t{i}.pgm", "tampered", None) for i in range(2)]
    with pytest.raises(InvalidTrainingSetError):
        split(_manifest_of(entries), ratio=0.8)


# ---------------------------------------------------------------------------
# synthetic data


def test_synthesis_is_deterministic(tmp_path):
    m1 = synthesize_dataset(tmp_path / "d1", seed=4, n_per_class=2, size=48)
    m2 = synthesize_dataset(tmp_path / "d2", seed=4, n_per_class=2, size=48)
    for name in ("au_0000.pgm", "tp_0001.pgm", "manifest.csv", "patches.csv"):
        assert (m1.parent / name).read_bytes() == (m2.parent / name).read_bytes()
    m3 = synthesize_dataset(tmp_path / "d3", seed=5, n_per_class=2, size=48)
    assert (m1.parent / "au_0000.pgm").read_bytes() != (m3.parent / "au_0000.pgm").read_bytes()


def test_tampered_pair_differs_only_inside_patch(rng):
    base, tampered, (r, c, side) = make_tampered_pair(rng, 96)
    diff = base != tampered
    outside = diff.copy()
    outside[r : r + side, c : c + side] = False
    assert not outside.any()
    assert diff[r : r + side, c : c + side].mean() > 0.5


def test_patches_carry_more_highpass_energy(tiny_dataset):
    root = tiny_dataset.parent
    patch_rows = (root / "patches.csv").read_text().splitlines()[1:]
    patch_energy, patch_n = 0.0, 0
    for line in patch_rows:
        name, r, c, side = line.split(",")
        r, c, side = int(r), int(c), int(side)
        rmap = kernel_residual(read_pgm(root / name), "SQUARE3")
        rr = slice(max(r - rmap.row0, 0), max(r + side - rmap.row0, 0))
        cc = slice(max(c - rmap.col0, 0), max(c + side - rmap.col0, 0))
        region = np.abs(rmap.values[rr, cc])
        patch_energy += float(region.sum())
        patch_n += region.size
    auth_energy, auth_n = 0.0, 0
    for p in sorted(root.glob("au_*.pgm")):
        values = np.abs(kernel_residual(read_pgm(p), "SQUARE3").values)
        auth_energy += float(values.sum())
        auth_n += values.size
    assert patch_energy / patch_n > 1.2 * (auth_energy / auth_n)


def test_synthesize_validates_arguments(tmp_path):
    with pytest.raises(InvalidArgumentError):
        synthesize_dataset(tmp_path / "x", seed=0, n_per_class=0)
    with pytest.raises(InvalidArgumentError):
        synthesize_dataset(tmp_path / "y", seed=0, n_per_class=1, size=20)


# ---------------------------------------------------------------------------
# extraction and the experiment loop


def test_extract_manifest_features_matches_direct_extraction(tiny_dataset):
    manifest = ingest_manifest(tiny_dataset)
    sub = DatasetManifest(manifest.entries[:3], manifest.base_dir)
    X = extract_manifest_features(sub, s=0, preprocess="none", key=None)
    assert X.shape == (3, 12753)
    direct = extract_features(read_pgm(sub.resolve(sub.entries[1])), 0)
    assert np.array_equal(X[1], direct)


def test_extract_manifest_features_worker_parity(tiny_dataset, key):
    manifest = ingest_manifest(tiny_dataset)
    sub = DatasetManifest(manifest.entries[:4], manifest.base_dir)
    serial = extract_manifest_features(sub, s=2, preprocess="zero", key=key, workers=1)
    parallel = extract_manifest_features(sub, s=2, preprocess="zero", key=key, workers=2)
    assert np.array_equal(serial, parallel)


def test_extract_manifest_features_rejects_bad_mode(tiny_dataset):
    manifest = ingest_manifest(tiny_dataset)
    with pytest.raises(InvalidArgumentError):
        extract_manifest_features(manifest, s=0, preprocess="both", key=None)


def test_experiment_s0_modes_agree(tiny_dataset, key):
    manifest = ingest_manifest(tiny_dataset)
    config = ExperimentConfig(key=key, seed=0, lam=1.0)
    row_none = run_forensics_experiment(manifest, 0, "none", config)
    row_zero = run_forensics_experiment(manifest, 0, "zero", config)
    assert row_none.task == TASK_RAW and row_zero.task == TASK_ZEROED
    assert row_none.accuracy == row_zero.accuracy
    assert row_none.n_train == 16 and row_none.n_test == 4


def test_experiment_s8_is_exactly_chance(tiny_dataset, key):
    manifest = ingest_manifest(tiny_dataset)
    config = ExperimentConfig(key=key, seed=0, lam=1.0)
    row = run_forensics_experiment(manifest, 8, "zero", config)
    # every feature row is the same degenerate vector and the test split
    # is balanced, so the constant prediction scores exactly 0.5
    assert row.accuracy == 0.5


def test_experiment_appends_report(tiny_dataset, key, tmp_path):
    report = tmp_path / "report.csv"
    manifest = ingest_manifest(tiny_dataset)
    config = ExperimentConfig(key=key, seed=0, lam=1.0, report_path=str(report))
    run_forensics_experiment(manifest, 8, "zero", config)
    run_forensics_experiment(manifest, 8, "none", config)
    rows = read_report_csv(report)
    assert [r["task"] for r in rows] == [TASK_ZEROED, TASK_RAW]
    assert all(r["s"] == "8" for r in rows)


# ---------------------------------------------------------------------------
# privacy and report plumbing


def test_privacy_index_examples():
    assert privacy_index(0.76) == 0.24
    assert privacy_index(0.29) == 0.71
    assert privacy_index(1.0) == 0.0
    assert privacy_index(0.0) == 1.0


def test_privacy_index_validation():
    for bad in (1.2, -0.1, float("nan"), "0.5"):
        with pytest.raises(InvalidInputError):
            privacy_index(bad)


def test_report_round_trip(tmp_path):
    rows = [
        _row_to_strings(ReportRow(0, TASK_ZEROED, 0.875, 160, 40, 0)),
        _row_to_strings(ReportRow(8, TASK_RAW, 0.5, 160, 40, 0)),
    ]
    p = tmp_path / "r.csv"
    write_report_csv(p, rows)
    assert read_report_csv(p) == rows


def test_report_read_errors(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        read_report_csv(p)
    p.write_text("s,task,accuracy\n")
    with pytest.raises(DataFormatError, match="bad header"):
        read_report_csv(p)
    header = "s,task,accuracy,n_train,n_test,seed\n"
    p.write_text(header + "9,forensics_zeroed,0.5,1,1,0\n")
    with pytest.raises(DataFormatError, match="r.csv:2.*outside"):
        read_report_csv(p)
    p.write_text(header + "1,forensics_zeroed,1.5,1,1,0\n")
    with pytest.raises(DataFormatError, match="accuracy"):
        read_report_csv(p)
    p.write_text(header + "1,mystery,0.5,1,1,0\n")
    with pytest.raises(DataFormatError, match="unknown task"):
        read_report_csv(p)
    p.write_text(header + "1,forensics_zeroed,0.5,1,1\n")
    with pytest.raises(DataFormatError, match="columns"):
        read_report_csv(p)


def _write_report(path, rows):
    lines = ["s,task,accuracy,n_train,n_test,seed"]
    lines += [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_tradeoff_join_is_string_exact(tmp_path):
    fore = _write_report(
        tmp_path / "f.csv",
        [("5", TASK_ZEROED, "0.81", "160", "40", "0")],
    )
    rec = _write_report(
        tmp_path / "r.csv",
        [("5", "recognizability", "0.29", "100", "50", "0")],
    )
    out = tmp_path / "t.csv"
    rows = tradeoff_report(fore, rec, out)
    assert rows == [
        {
            "s": "5",
            "forensics_accuracy": "0.81",
            "recognizability_accuracy": "0.29",
            "privacy_index": "0.71",
        }
    ]
    assert read_tradeoff_csv(out) == rows


def test_tradeoff_decimal_arithmetic_avoids_float_noise(tmp_path):
    fore = _write_report(tmp_path / "f.csv", [("2", TASK_ZEROED, "0.9", "8", "2", "0")])
    rec = _write_report(tmp_path / "r.csv", [("2", "recognizability", "0.123456789", "8", "2", "0")])
    rows = tradeoff_report(fore, rec, tmp_path / "t.csv")
    assert rows[0]["privacy_index"] == "0.876543211"


def test_tradeoff_prefers_zeroed_and_last_row_wins(tmp_path):
    fore = _write_report(
        tmp_path / "f.csv",
        [
            ("1", TASK_RAW, "0.6", "8", "2", "0"),
            ("1", TASK_ZEROED, "0.7", "8", "2", "0"),
            ("1", TASK_ZEROED, "0.8", "8", "2", "0"),
        ],
    )
    rows = tradeoff_report(fore, None, tmp_path / "t.csv")
    assert rows == [
        {
            "s": "1",
            "forensics_accuracy": "0.8",
            "recognizability_accuracy": "",
            "privacy_index": "",
        }
    ]


def test_tradeoff_union_of_grids(tmp_path):
    fore = _write_report(tmp_path / "f.csv", [("0", TASK_ZEROED, "0.9", "8", "2", "0")])
    rec = _write_report(tmp_path / "r.csv", [("2", "recognizability", "0.4", "8", "2", "0")])
    rows = tradeoff_report(fore, rec, tmp_path / "t.csv")
    assert [r["s"] for r in rows] == ["0", "2"]
    assert rows[0]["recognizability_accuracy"] == ""
    assert rows[1]["forensics_accuracy"] == ""
    assert rows[1]["privacy_index"] == "0.6"


def test_read_tradeoff_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        read_tradeoff_csv(p)
    p.write_text("s,wrong\n")
    with pytest.raises(DataFormatError, match="bad header"):
        read_tradeoff_csv(p)
    p.write_text("s,forensics_accuracy,recognizability_accuracy,privacy_index\n1,0.5\n")
    with pytest.raises(DataFormatError, match="columns"):
        read_tradeoff_csv(p)
