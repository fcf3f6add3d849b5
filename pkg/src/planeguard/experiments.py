"""Dataset plumbing and the accuracy-vs-privacy experiment loop.

A dataset is a CSV manifest (path,label[,class][,group]) whose image
paths are resolved against the manifest's directory. The experiment
runner encrypts every image with a per-index nonce, extracts features
either from the encrypted planes as-is ("none") or after zeroing the
encrypted planes ("zero"), trains the ridge detector on a deterministic
group-aware 80/20 split, and logs one report row per (s, task).

The synthetic generator produces smooth textured authentic images and
tampered copies carrying one sharply textured pasted square, which is
enough signal for the detector while the clear planes survive and
collapses to chance once they do not.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .bitplanes import EncryptionParams, encrypt_planes
from .classifier import LabeledFeatureSet, evaluate, labels_to_values, train
from .errors import (
    DataFormatError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidTrainingSetError,
)
from .features import extract_features
from .fileio import atomic_write_text, read_image, write_pgm
from .keystream import derive_nonce

TASK_RAW = "forensics_raw"
TASK_ZEROED = "forensics_zeroed"
TASK_RECOGNIZABILITY = "recognizability"
KNOWN_TASKS = (TASK_RAW, TASK_ZEROED, TASK_RECOGNIZABILITY)

PREPROCESS_MODES = ("none", "zero")

REPORT_COLUMNS = ("s", "task", "accuracy", "n_train", "n_test", "seed")
TRADEOFF_COLUMNS = ("s", "forensics_accuracy", "recognizability_accuracy", "privacy_index")

_MANIFEST_COLUMNS = {"path", "label", "class", "group"}

# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    cls: str = ""
    group: str = ""


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    base_dir: Path

    def __len__(self):
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.path


def ingest_manifest(path, check_paths: bool = True) -> DatasetManifest:
    """Read and validate a dataset manifest CSV."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read manifest: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DataFormatError(f"{path}:1: empty manifest")
    fields = [f.strip() for f in reader.fieldnames]
    unknown = set(fields) - _MANIFEST_COLUMNS
    if unknown:
        raise DataFormatError(f"{path}:1: unknown manifest columns {sorted(unknown)}")
    if "path" not in fields or "label" not in fields:
        raise DataFormatError(f"{path}:1: manifest needs 'path' and 'label' columns")
    entries, seen = [], set()
    for ln, row in enumerate(reader, start=2):
        rel = (row.get("path") or "").strip()
        label = (row.get("label") or "").strip()
        if not rel or not label:
            raise DataFormatError(f"{path}:{ln}: missing path or label")
        if rel in seen:
            raise DataFormatError(f"{path}:{ln}: duplicate path {rel!r}")
        seen.add(rel)
        cls = (row.get("class") or "").strip()
        group = (row.get("group") or "").strip() or rel
        if check_paths and not (path.parent / rel).is_file():
            raise DataFormatError(f"{path}:{ln}: referenced image not found: {rel}")
        entries.append(ManifestEntry(rel, label, cls, group))
    if not entries:
        raise DataFormatError(f"{path}: manifest has no rows")
    return DatasetManifest(tuple(entries), path.parent)


def label_counts(manifest: DatasetManifest) -> dict:
    counts = {}
    for e in manifest.entries:
        counts[e.label] = counts.get(e.label, 0) + 1
    return counts


def split(manifest: DatasetManifest, ratio: float = 0.8, seed: int = 0):
    """Deterministic group-aware stratified split into (train, test).

    Groups never straddle the boundary; with singleton groups the split
    hits the per-label test quota exactly.
    """
    if not 0 < ratio < 1:
        raise InvalidArgumentError(f"ratio must be in (0, 1), got {ratio}")
    by_group: dict = {}
    group_order = []
    for i, e in enumerate(manifest.entries):
        if e.group not in by_group:
            by_group[e.group] = []
            group_order.append(e.group)
        by_group[e.group].append(i)
    group_label = {}
    for g, idxs in by_group.items():
        labels = {manifest.entries[i].label for i in idxs}
        if len(labels) != 1:
            raise InvalidInputError(f"group {g!r} mixes labels {sorted(labels)}; cannot stratify")
        group_label[g] = labels.pop()

    rng = np.random.default_rng(seed)
    test_idx: set = set()
    for label in sorted({e.label for e in manifest.entries}):
        groups = [g for g in group_order if group_label[g] == label]
        n_label = sum(len(by_group[g]) for g in groups)
        target = round((1 - ratio) * n_label)
        order = rng.permutation(len(groups))
        picked = 0
        for gi in order:
            g = groups[gi]
            if picked + len(by_group[g]) <= target:
                test_idx.update(by_group[g])
                picked += len(by_group[g])
            if picked == target:
                break
    train_entries = tuple(e for i, e in enumerate(manifest.entries) if i not in test_idx)
    test_entries = tuple(e for i, e in enumerate(manifest.entries) if i in test_idx)
    for side, name in ((train_entries, "train"), (test_entries, "test")):
        present = {e.label for e in side}
        if present != {e.label for e in manifest.entries}:
            raise InvalidTrainingSetError(
                f"{name} side lost a label class; dataset too small for ratio {ratio}"
            )
    return (
        DatasetManifest(train_entries, manifest.base_dir),
        DatasetManifest(test_entries, manifest.base_dir),
    )


# ---------------------------------------------------------------------------
# synthetic dataset

SYNTH_NOISE_SIGMA = 40.0
SYNTH_BLUR_AUTHENTIC = 1.5
SYNTH_BLUR_DONOR = 0.5
SYNTH_FINE_NOISE = 2.0
SYNTH_PATCH_MIN = 16
SYNTH_PATCH_MAX = 64
SYNTH_GRADIENT_SLOPE = 0.10
SYNTH_GRADIENT_OFFSET = 16.0
SYNTH_MEAN = 128.0


def _textured_field(rng, size, blur_sigma):
    field = gaussian_filter(rng.normal(0.0, SYNTH_NOISE_SIGMA, (size, size)), blur_sigma)
    field += rng.normal(0.0, SYNTH_FINE_NOISE, (size, size))
    gx, gy = rng.uniform(-SYNTH_GRADIENT_SLOPE, SYNTH_GRADIENT_SLOPE, size=2)
    offset = rng.uniform(-SYNTH_GRADIENT_OFFSET, SYNTH_GRADIENT_OFFSET)
    ii, jj = np.mgrid[0:size, 0:size]
    img = SYNTH_MEAN + offset + field + gx * (ii - size / 2) + gy * (jj - size / 2)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_tampered_pair(rng, size):
    """(base, tampered, (row, col, side)): one pasted square, no blending."""
    base = _textured_field(rng, size, SYNTH_BLUR_AUTHENTIC)
    donor = _textured_field(rng, size, SYNTH_BLUR_DONOR)
    side = int(rng.integers(SYNTH_PATCH_MIN, min(SYNTH_PATCH_MAX, size) + 1))
    r = int(rng.integers(0, size - side + 1))
    c = int(rng.integers(0, size - side + 1))
    tampered = base.copy()
    tampered[r : r + side, c : c + side] = donor[r : r + side, c : c + side]
    return base, tampered, (r, c, side)


def synthesize_dataset(out_dir, seed: int, n_per_class: int = 200, size: int = 256) -> Path:
    """Write a labeled synthetic dataset; returns the manifest path.

    Also writes patches.csv recording each pasted rectangle so tests can
    check locality without storing the unmodified bases.
    """
    if n_per_class < 1:
        raise InvalidArgumentError("need at least one image per class")
    if size < 2 * SYNTH_PATCH_MIN:
        raise InvalidArgumentError(f"size must be >= {2 * SYNTH_PATCH_MIN}, got {size}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows, patches = [], []
    for i in range(n_per_class):
        name = f"au_{i:04d}.pgm"
        write_pgm(out_dir / name, _textured_field(rng, size, SYNTH_BLUR_AUTHENTIC))
        rows.append((name, "authentic"))
    for i in range(n_per_class):
        name = f"tp_{i:04d}.pgm"
        _, tampered, (r, c, side) = make_tampered_pair(rng, size)
        write_pgm(out_dir / name, tampered)
        rows.append((name, "tampered"))
        patches.append((name, r, c, side))
    manifest_lines = ["path,label,group"]
    manifest_lines += [f"{name},{label},{Path(name).stem}" for name, label in rows]
    atomic_write_text(out_dir / "manifest.csv", "\n".join(manifest_lines) + "\n")
    patch_lines = ["path,row,col,side"]
    patch_lines += [f"{name},{r},{c},{side}" for name, r, c, side in patches]
    atomic_write_text(out_dir / "patches.csv", "\n".join(patch_lines) + "\n")
    return out_dir / "manifest.csv"


# ---------------------------------------------------------------------------
# experiment runner


@dataclass(frozen=True)
class ExperimentConfig:
    key: bytes
    seed: int = 0
    ratio: float = 0.8
    lam: float = 1.0
    workers: int = 1
    report_path: str | None = None


@dataclass(frozen=True)
class ReportRow:
    s: int
    task: str
    accuracy: float
    n_train: int
    n_test: int
    seed: int


def _extract_row(job):
    path, s, s_eff, key, index = job
    img = read_image(path)
    if key is not None:
        img = encrypt_planes(img, EncryptionParams(key, derive_nonce(index), s))
    return extract_features(img, s_eff)


def extract_manifest_features(manifest: DatasetManifest, s: int, preprocess: str,
                              key: bytes | None, workers: int = 1,
                              progress=None) -> np.ndarray:
    """Encrypt and extract every manifest image, in manifest order.

    The per-image nonce is the image's manifest index, so reruns over
    the same manifest reuse the same keystreams and results are
    bit-identical for any worker count. With key None the images are
    taken as already protected (or plain) and only masking applies.
    """
    if preprocess not in PREPROCESS_MODES:
        raise InvalidArgumentError(f"preprocess must be one of {PREPROCESS_MODES}, got {preprocess!r}")
    s_eff = s if preprocess == "zero" else 0
    jobs = [
        (str(manifest.resolve(e)), s, s_eff, key, i)
        for i, e in enumerate(manifest.entries)
    ]
    rows = []
    if workers <= 1:
        for i, job in enumerate(jobs):
            rows.append(_extract_row(job))
            if progress:
                progress(i + 1, len(jobs))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(_extract_row, jobs, chunksize=4)):
                rows.append(row)
                if progress:
                    progress(i + 1, len(jobs))
    return np.stack(rows)


def run_forensics_experiment(manifest: DatasetManifest, s: int, preprocess: str,
                             config: ExperimentConfig, progress=None) -> ReportRow:
    """One (s, preprocessing) detection run; appends to the report if set."""
    features = extract_manifest_features(manifest, s, preprocess, config.key,
                                         config.workers, progress)
    labels = labels_to_values([e.label for e in manifest.entries])
    train_m, test_m = split(manifest, config.ratio, config.seed)
    index_of = {e.path: i for i, e in enumerate(manifest.entries)}
    tr = [index_of[e.path] for e in train_m.entries]
    te = [index_of[e.path] for e in test_m.entries]
    model = train(LabeledFeatureSet(features[tr], labels[tr]), lam=config.lam)
    accuracy = evaluate(model, LabeledFeatureSet(features[te], labels[te]))
    row = ReportRow(
        s=s,
        task=TASK_ZEROED if preprocess == "zero" else TASK_RAW,
        accuracy=accuracy,
        n_train=len(tr),
        n_test=len(te),
        seed=config.seed,
    )
    if config.report_path:
        rows = []
        if Path(config.report_path).exists():
            rows = read_report_csv(config.report_path)
        write_report_csv(config.report_path, rows + [_row_to_strings(row)])
    return row


def privacy_index(accuracy: float) -> float:
    """1 - accuracy; the share of recognition attempts that fail."""
    if not isinstance(accuracy, (int, float, np.floating)) or not np.isfinite(accuracy):
        raise InvalidInputError(f"accuracy must be a finite number, got {accuracy!r}")
    if not 0.0 <= accuracy <= 1.0:
        raise InvalidInputError(f"accuracy must be in [0, 1], got {accuracy}")
    return 1.0 - float(accuracy)


# ---------------------------------------------------------------------------
# report and trade-off CSVs


def _row_to_strings(row: ReportRow) -> dict:
    return {
        "s": str(row.s),
        "task": row.task,
        "accuracy": repr(float(row.accuracy)),
        "n_train": str(row.n_train),
        "n_test": str(row.n_test),
        "seed": str(row.seed),
    }


def read_report_csv(path) -> list:
    """Rows of a report CSV as dicts of validated strings."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read report: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}:1: empty report") from None
    if tuple(h.strip() for h in header) != REPORT_COLUMNS:
        raise DataFormatError(
            f"{path}:1: bad header {header!r}, expected {','.join(REPORT_COLUMNS)}"
        )
    rows = []
    for ln, parts in enumerate(reader, start=2):
        if not parts:
            continue
        if len(parts) != len(REPORT_COLUMNS):
            raise DataFormatError(f"{path}:{ln}: expected {len(REPORT_COLUMNS)} columns, got {len(parts)}")
        row = dict(zip(REPORT_COLUMNS, (p.strip() for p in parts)))
        try:
            s = int(row["s"])
            acc = float(row["accuracy"])
            int(row["n_train"]), int(row["n_test"]), int(row["seed"])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{ln}: {exc}") from exc
        if not 0 <= s <= 8:
            raise DataFormatError(f"{path}:{ln}: s={s} outside [0, 8]")
        if not 0.0 <= acc <= 1.0:
            raise DataFormatError(f"{path}:{ln}: accuracy {acc} outside [0, 1]")
        if row["task"] not in KNOWN_TASKS:
            raise DataFormatError(f"{path}:{ln}: unknown task {row['task']!r}")
        rows.append(row)
    return rows


def write_report_csv(path, string_rows) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    lines += [",".join(r[c] for c in REPORT_COLUMNS) for r in string_rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def tradeoff_report(forensics_csv, recognizability_csv, out_path) -> list:
    """Join per-s forensics and recognizability accuracies.

    Forensics rows prefer the zeroed task (falling back to raw); the
    last row per (s, task) wins. The privacy column is computed on the
    CSV's decimal strings, so values like 0.9 -> 0.1 come out exact
    rather than inheriting binary float noise.
    """
    fore = read_report_csv(forensics_csv)
    rec = read_report_csv(recognizability_csv) if recognizability_csv else []
    zeroed, raw, recog = {}, {}, {}
    for row in fore:
        s = int(row["s"])
        if row["task"] == TASK_ZEROED:
            zeroed[s] = row["accuracy"]
        elif row["task"] == TASK_RAW:
            raw[s] = row["accuracy"]
    for row in rec:
        if row["task"] == TASK_RECOGNIZABILITY:
            recog[int(row["s"])] = row["accuracy"]
    out_rows = []
    for s in sorted(set(zeroed) | set(raw) | set(recog)):
        f_acc = zeroed.get(s, raw.get(s, ""))
        r_acc = recog.get(s, "")
        if r_acc:
            try:
                privacy = str(Decimal("1") - Decimal(r_acc))
            except InvalidOperation as exc:
                raise DataFormatError(f"recognizability accuracy {r_acc!r} at s={s}: {exc}") from exc
        else:
            privacy = ""
        out_rows.append(
            {
                "s": str(s),
                "forensics_accuracy": f_acc,
                "recognizability_accuracy": r_acc,
                "privacy_index": privacy,
            }
        )
    lines = [",".join(TRADEOFF_COLUMNS)]
    lines += [",".join(r[c] for c in TRADEOFF_COLUMNS) for r in out_rows]
    atomic_write_text(out_path, "\n".join(lines) + "\n")
    return out_rows


def read_tradeoff_csv(path) -> list:
    """Rows of a trade-off CSV as dicts of strings (blank cells allowed)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{path}:1: empty trade-off file") from None
    if tuple(h.strip() for h in header) != TRADEOFF_COLUMNS:
        raise DataFormatError(f"{path}:1: bad header {header!r}")
    rows = []
    for ln, parts in enumerate(reader, start=2):
        if not parts:
            continue
        if len(parts) != len(TRADEOFF_COLUMNS):
            raise DataFormatError(f"{path}:{ln}: expected {len(TRADEOFF_COLUMNS)} columns")
        rows.append(dict(zip(TRADEOFF_COLUMNS, (p.strip() for p in parts))))
    return rows
