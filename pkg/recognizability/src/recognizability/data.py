"""Datasets for the recognizability task.

A dataset is a class manifest: a CSV with columns `path,class` listing
one grayscale image per row. Helpers here read and write manifests,
split them per class, synthesize a small labeled corpus for smoke
tests, and export a CIFAR-10 subset from the stock python pickle
batches into that manifest form.
"""

import csv
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataFormatError, InvalidArgumentError, InvalidDatasetError

MANIFEST_COLUMNS = ("path", "class")

CIFAR_TRAIN_BATCHES = tuple(f"data_batch_{i}" for i in range(1, 6))
CIFAR_TEST_BATCH = "test_batch"
CIFAR_SIDE = 32


@dataclass(frozen=True)
class ClassEntry:
    path: Path
    cls: str


def read_image(path):
    """Load a grayscale image (PGM or PNG) as a uint8 array."""
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                im = im.convert("L")
            return np.asarray(im, dtype=np.uint8)
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from None


def write_image(path, img):
    Image.fromarray(img, mode="L").save(path)


def write_class_manifest(path, entries):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for entry in entries:
            writer.writerow([str(entry.path), entry.cls])


def read_class_manifest(path, check_paths=True):
    """Parse a `path,class` manifest. Paths are resolved against the CSV's directory."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path}: empty manifest")
    if tuple(rows[0]) != MANIFEST_COLUMNS:
        raise DataFormatError(
            f"{path}: expected header {','.join(MANIFEST_COLUMNS)},"
            f" got {','.join(rows[0])}")
    base = path.parent
    entries = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        raw, cls = row
        if not raw or not cls:
            raise DataFormatError(f"{path}:{lineno}: empty path or class")
        if raw in seen:
            raise DataFormatError(f"{path}:{lineno}: duplicate path {raw}")
        seen.add(raw)
        resolved = Path(raw) if Path(raw).is_absolute() else base / raw
        if check_paths and not resolved.is_file():
            raise DataFormatError(f"{path}:{lineno}: no such file {resolved}")
        entries.append(ClassEntry(resolved, cls))
    if not entries:
        raise DataFormatError(f"{path}: no data rows")
    return entries


def class_names(entries):
    return sorted({e.cls for e in entries})


def class_counts(entries):
    counts = {}
    for e in entries:
        counts[e.cls] = counts.get(e.cls, 0) + 1
    return counts


def split_class_manifest(entries, ratio, seed):
    """Per-class split into (train, test); test gets round((1 - ratio) * n) of each class."""
    if not 0.0 < ratio < 1.0:
        raise InvalidArgumentError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    by_class = {}
    for e in entries:
        by_class.setdefault(e.cls, []).append(e)
    train, test = [], []
    for cls in sorted(by_class):
        members = by_class[cls]
        order = rng.permutation(len(members))
        n_test = int(round((1.0 - ratio) * len(members)))
        if n_test == 0 or n_test == len(members):
            raise InvalidDatasetError(
                f"class {cls}: split ratio {ratio} leaves an empty side"
                f" with {len(members)} images")
        picked = set(order[:n_test].tolist())
        for i, member in enumerate(members):
            (test if i in picked else train).append(member)
    return train, test


def synthesize_class_dataset(out_dir, n_per_class=30, size=96, seed=0):
    """Write a two-class stripe corpus (horizontal vs vertical sinusoid plus noise).

    The orientation signal spans the full 8-bit range, so it survives
    moderate shifts and vanishes only when every plane is dropped.
    Returns the manifest path.
    """
    if n_per_class < 2:
        raise InvalidArgumentError(f"n_per_class must be >= 2, got {n_per_class}")
    if size < 16:
        raise InvalidArgumentError(f"size must be >= 16, got {size}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    coords = np.arange(size, dtype=np.float64)
    entries = []
    for cls, axis in (("horiz", 0), ("vert", 1)):
        for i in range(n_per_class):
            period = rng.uniform(8.0, 24.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            wave = 80.0 * np.sin(2.0 * np.pi * coords / period + phase)
            field = wave[:, np.newaxis] if axis == 0 else wave[np.newaxis, :]
            img = 128.0 + np.broadcast_to(field, (size, size)) \
                + rng.normal(0.0, 12.0, (size, size))
            img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
            name = f"{cls}_{i:04d}.pgm"
            write_image(out_dir / name, img)
            entries.append(ClassEntry(out_dir / name, cls))
    manifest = out_dir / "manifest.csv"
    relative = [ClassEntry(Path(e.path.name), e.cls) for e in entries]
    write_class_manifest(manifest, relative)
    return manifest


def _cifar_batch(path):
    try:
        with open(path, "rb") as fh:
            raw = pickle.load(fh, encoding="bytes")
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from None
    except (pickle.UnpicklingError, EOFError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a pickle batch: {exc}") from None
    try:
        data = np.asarray(raw[b"data"], dtype=np.uint8)
        labels = [int(v) for v in raw[b"labels"]]
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: missing batch fields: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3 * CIFAR_SIDE * CIFAR_SIDE:
        raise DataFormatError(
            f"{path}: expected Nx{3 * CIFAR_SIDE * CIFAR_SIDE} data, got {data.shape}")
    if len(labels) != data.shape[0]:
        raise DataFormatError(f"{path}: {len(labels)} labels for {data.shape[0]} rows")
    return data, labels


def _to_grayscale(rows):
    """Rows are R,G,B planes of 1024 bytes each; Rec.601 luminance, rounded."""
    planes = rows.reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE).astype(np.float64)
    y = 0.299 * planes[:, 0] + 0.587 * planes[:, 1] + 0.114 * planes[:, 2]
    return np.rint(y).astype(np.uint8)


def load_cifar10(cifar_dir):
    """Read the python-format batches; returns (train_x, train_y, test_x, test_y, names)."""
    cifar_dir = Path(cifar_dir)
    train_parts, train_labels = [], []
    for batch in CIFAR_TRAIN_BATCHES:
        data, labels = _cifar_batch(cifar_dir / batch)
        train_parts.append(data)
        train_labels.extend(labels)
    test_data, test_labels = _cifar_batch(cifar_dir / CIFAR_TEST_BATCH)
    names = [f"class{i}" for i in range(10)]
    meta = cifar_dir / "batches.meta"
    if meta.is_file():
        with open(meta, "rb") as fh:
            raw = pickle.load(fh, encoding="bytes")
        names = [n.decode("ascii") for n in raw.get(b"label_names", [])] or names
    train_x = _to_grayscale(np.concatenate(train_parts, axis=0))
    test_x = _to_grayscale(test_data)
    return train_x, np.asarray(train_labels), test_x, np.asarray(test_labels), names


def export_cifar10_subset(cifar_dir, out_dir, n_per_class=500,
                          test_per_class=100, seed=0):
    """Write a per-class subset as PGM files plus train/test manifests.

    Returns (train_manifest_path, test_manifest_path).
    """
    train_x, train_y, test_x, test_y, names = load_cifar10(cifar_dir)
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)

    def emit(images, labels, per_class, subdir, manifest_name):
        folder = out_dir / subdir
        folder.mkdir(parents=True, exist_ok=True)
        entries = []
        for cls_idx, cls in enumerate(names):
            rows = np.flatnonzero(labels == cls_idx)
            if len(rows) < per_class:
                raise InvalidDatasetError(
                    f"class {cls}: only {len(rows)} images, need {per_class}")
            picked = rows[rng.permutation(len(rows))[:per_class]]
            for j, row in enumerate(sorted(picked.tolist())):
                name = f"{cls}_{j:04d}.pgm"
                write_image(folder / name, images[row])
                entries.append(ClassEntry(Path(name), cls))
        manifest = folder / manifest_name
        write_class_manifest(manifest, entries)
        return manifest

    train_manifest = emit(train_x, train_y, n_per_class, "train", "manifest.csv")
    test_manifest = emit(test_x, test_y, test_per_class, "test", "manifest.csv")
    return train_manifest, test_manifest
