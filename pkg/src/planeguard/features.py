"""Rich-model features from the clear bitplanes of an image.

The extractor maps an image to a fixed 12,753-dimensional vector:
residual maps are quantized to {-T..T} with T=2, fourth-order
co-occurrences are counted along rows and columns, the 625-bin
histograms are folded under sign and scan-reversal symmetry, and each
block is L1-normalized. Histograms stay integer until the final
division, so the symmetry invariances (180-degree rotation for any s,
intensity inversion for s=0) hold bit-exactly.

Submodel roster, 39 blocks, frozen:

  6 "spam" submodels over single residual kinds (first order E, second
  order h, third order E, SQUARE3, SQUARE5, EDGE3), each contributing
  2 x 169 = 338 values (horizontal and vertical scans);
  33 "minmax" submodels (min and max of a direction set of same-order
  residuals), each contributing 325 values.

The EDGE3 spam submodel sums the histograms of the north and south
kernel variants, and every minmax submodel whose direction set is not
closed under reversal also accumulates the reversed set; both choices
are what make the rotation invariance exact without changing the
dimension. Quantization steps follow the producing stencil's
normalizer: q = c.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bitplanes import as_gray, zero_planes
from .errors import (
    DataFormatError,
    DegenerateInputError,
    InvalidArgumentError,
    InvalidInputError,
)
from .fileio import atomic_write_bytes, atomic_write_text
from .residuals import (
    AXES,
    DIRECTIONS,
    REVERSE,
    ResidualMap,
    align_maps,
    directional_residual,
    kernel_residual,
)

T_TRUNC = 2
WINDOW = 4
N_LEVELS = 2 * T_TRUNC + 1  # 5
N_BINS = N_LEVELS**WINDOW  # 625
SPAM_ORBITS = 169
MINMAX_ORBITS = 325
SPAM_WIDTH = 2 * SPAM_ORBITS  # 338
MINMAX_WIDTH = MINMAX_ORBITS  # 325
FEATURE_DIM = 12753
# SQUARE5 needs a 2-pixel margin on every side and the statistics need
# a 16x16 valid region to mean anything.
MIN_SIDE = 20

# ---------------------------------------------------------------------------
# co-occurrence bin <-> quadruple tables

_QUADS = tuple(itertools.product(range(-T_TRUNC, T_TRUNC + 1), repeat=WINDOW))
_QUAD_INDEX = {q: i for i, q in enumerate(_QUADS)}

# bin of the negated / reversed quadruple, used by the symmetrizers
NEG_BIN = np.array([_QUAD_INDEX[tuple(-c for c in q)] for q in _QUADS], dtype=np.int64)
REV_BIN = np.array([_QUAD_INDEX[q[::-1]] for q in _QUADS], dtype=np.int64)


def quad_bin(quad) -> int:
    """Histogram bin index of a quadruple of quantized values."""
    q = tuple(int(c) for c in quad)
    if q not in _QUAD_INDEX:
        raise InvalidArgumentError(f"quadruple {quad!r} outside [-{T_TRUNC}, {T_TRUNC}]^{WINDOW}")
    return _QUAD_INDEX[q]


def _orbit_table(members):
    reps = [min(members(q)) for q in _QUADS]
    ranked = {r: i for i, r in enumerate(sorted(set(reps)))}
    return np.array([ranked[r] for r in reps], dtype=np.int64), len(ranked)


SPAM_ORBIT_OF_BIN, _n_spam = _orbit_table(
    lambda q: (q, tuple(-c for c in q), q[::-1], tuple(-c for c in q[::-1]))
)
MINMAX_ORBIT_OF_BIN, _n_minmax = _orbit_table(lambda q: (q, q[::-1]))
assert _n_spam == SPAM_ORBITS, _n_spam
assert _n_minmax == MINMAX_ORBITS, _n_minmax

# ---------------------------------------------------------------------------
# quantization and co-occurrence


@dataclass(frozen=True)
class QuantizedResidualMap:
    """Residual map quantized to integers in [-T_TRUNC, T_TRUNC]."""

    values: np.ndarray
    row0: int
    col0: int
    q: int


@dataclass(frozen=True)
class CoocHistogram:
    """625-bin integer co-occurrence histogram plus its window count."""

    counts: np.ndarray
    group_count: int

    def __post_init__(self):
        if self.counts.shape != (N_BINS,) or self.counts.dtype != np.int64:
            raise InvalidInputError("histogram must be an int64 array of 625 bins")
        if int(self.counts.sum()) != self.group_count:
            raise InvalidInputError("histogram mass disagrees with its window count")

    def __add__(self, other: "CoocHistogram") -> "CoocHistogram":
        return CoocHistogram(self.counts + other.counts, self.group_count + other.group_count)


def quantize_truncate(rmap: ResidualMap, q: int, t: int = T_TRUNC) -> QuantizedResidualMap:
    """round(r / q) with halves away from zero, clamped to [-t, t].

    Done in exact integer arithmetic: |r|/q rounds to (2|r| + q) // (2q),
    which keeps the quantizer an odd function of r.
    """
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise InvalidArgumentError(f"quantization step must be a positive integer, got {q!r}")
    if t < 1:
        raise InvalidArgumentError(f"truncation threshold must be >= 1, got {t!r}")
    r = rmap.values.astype(np.int64)
    mag = (2 * np.abs(r) + q) // (2 * q)
    v = np.sign(r) * mag
    np.clip(v, -t, t, out=v)
    return QuantizedResidualMap(v, rmap.row0, rmap.col0, int(q))


def cooccurrence4(qmap: QuantizedResidualMap, scan: str) -> CoocHistogram:
    """Count stride-1 length-4 windows along rows or columns.

    Window (d1, d2, d3, d4) reads left to right (or top to bottom) and
    lands in bin sum_i (d_i + T) * 5**(4-1-i).
    """
    if scan not in ("horizontal", "vertical"):
        raise InvalidArgumentError(f"scan must be 'horizontal' or 'vertical', got {scan!r}")
    v = qmap.values
    if np.abs(v).max(initial=0) > T_TRUNC:
        raise InvalidInputError("map is not quantized to the truncation range")
    if scan == "vertical":
        v = v.T
    if v.shape[0] == 0 or v.shape[1] < WINDOW:
        raise DegenerateInputError(f"no length-{WINDOW} windows along the {scan} scan")
    q = v + T_TRUNC
    idx = ((q[:, :-3] * N_LEVELS + q[:, 1:-2]) * N_LEVELS + q[:, 2:-1]) * N_LEVELS + q[:, 3:]
    counts = np.bincount(idx.ravel(), minlength=N_BINS).astype(np.int64)
    return CoocHistogram(counts, int(idx.size))


# ---------------------------------------------------------------------------
# symmetrization


def _orbit_fold(counts, orbit_of_bin, n_orbits, total):
    if total <= 0:
        raise DegenerateInputError("empty histogram, nothing to normalize")
    folded = np.zeros(n_orbits, dtype=np.int64)
    np.add.at(folded, orbit_of_bin, counts)
    return folded / float(total)


def symmetrize_spam(hist_h: CoocHistogram, hist_v: CoocHistogram) -> np.ndarray:
    """Fold both scans under {identity, sign flip, reversal, both}.

    Returns the horizontal block then the vertical block, each an
    L1-normalized vector over the 169 orbits.
    """
    return np.concatenate(
        [
            _orbit_fold(hist_h.counts, SPAM_ORBIT_OF_BIN, SPAM_ORBITS, hist_h.group_count),
            _orbit_fold(hist_v.counts, SPAM_ORBIT_OF_BIN, SPAM_ORBITS, hist_v.group_count),
        ]
    )


def symmetrize_minmax(hist_min: CoocHistogram, hist_max: CoocHistogram) -> np.ndarray:
    """Merge min/max under sign flip, then fold under reversal.

    merged[d] = hist_min[d] + hist_max[-d], folded over the 325 orbits
    of {d, reversed d} and normalized by the combined mass.
    """
    if hist_min.group_count != hist_max.group_count:
        raise InvalidInputError(
            f"min and max histograms disagree on window count "
            f"({hist_min.group_count} vs {hist_max.group_count})"
        )
    merged = hist_min.counts + hist_max.counts[NEG_BIN]
    total = hist_min.group_count + hist_max.group_count
    return _orbit_fold(merged, MINMAX_ORBIT_OF_BIN, MINMAX_ORBITS, total)


# ---------------------------------------------------------------------------
# submodel roster

_MINMAX_SETS_DIR = (
    ("E", "W"),
    ("N", "S"),
    ("NE", "SW"),
    ("NW", "SE"),
    ("E", "W", "N", "S"),
    ("NE", "NW", "SE", "SW"),
    ("E", "N", "NE"),
    ("W", "N", "NW"),
    ("E", "S", "SE"),
    ("W", "S", "SW"),
    DIRECTIONS,
)
_MINMAX_SETS_AXIS = (
    ("h", "v"),
    ("h", "d"),
    ("h", "m"),
    ("v", "d"),
    ("v", "m"),
    ("d", "m"),
    ("h", "v", "d"),
    ("h", "v", "m"),
    ("h", "d", "m"),
    ("v", "d", "m"),
    AXES,
)


@dataclass(frozen=True)
class SubmodelSpec:
    """One roster entry: what residual feeds it and how wide it is."""

    sid: str
    kind: str  # "spam" or "minmax"
    q: int
    width: int
    order: int = 0  # directional residual order; 0 for kernel spam
    directions: tuple = ()
    kernel: str = ""


def _build_roster():
    subs = [
        SubmodelSpec("spam_d1_E", "spam", 1, SPAM_WIDTH, order=1, directions=("E",)),
        SubmodelSpec("spam_d2_h", "spam", 2, SPAM_WIDTH, order=2, directions=("h",)),
        SubmodelSpec("spam_d3_E", "spam", 3, SPAM_WIDTH, order=3, directions=("E",)),
        SubmodelSpec("spam_SQUARE3", "spam", 4, SPAM_WIDTH, kernel="SQUARE3"),
        SubmodelSpec("spam_SQUARE5", "spam", 12, SPAM_WIDTH, kernel="SQUARE5"),
        SubmodelSpec("spam_EDGE3", "spam", 4, SPAM_WIDTH, kernel="EDGE3"),
    ]
    for order, sets in ((1, _MINMAX_SETS_DIR), (2, _MINMAX_SETS_AXIS), (3, _MINMAX_SETS_DIR)):
        for dirs in sets:
            sid = f"minmax_d{order}_" + "-".join(dirs)
            subs.append(
                SubmodelSpec(sid, "minmax", order, MINMAX_WIDTH, order=order, directions=tuple(dirs))
            )
    return tuple(subs)


ROSTER = _build_roster()
assert sum(sub.width for sub in ROSTER) == FEATURE_DIM
assert sum(1 for sub in ROSTER if sub.kind == "spam") == 6
assert sum(1 for sub in ROSTER if sub.kind == "minmax") == 33


def block_slices() -> dict:
    """Map submodel id to its slice of the feature vector."""
    out, off = {}, 0
    for sub in ROSTER:
        out[sub.sid] = slice(off, off + sub.width)
        off += sub.width
    return out


def roster_manifest() -> str:
    """Human-readable roster description shipped with feature files."""
    lines = [f"feature roster v1 dim={FEATURE_DIM} T={T_TRUNC} window={WINDOW}"]
    off = 0
    for sub in ROSTER:
        src = sub.kernel if sub.kernel else f"order{sub.order}:" + "+".join(sub.directions)
        lines.append(
            f"{sub.sid} kind={sub.kind} q={sub.q} src={src} offset={off} width={sub.width}"
        )
        off += sub.width
    return "\n".join(lines) + "\n"


def roster_hash() -> str:
    """Short digest identifying the frozen roster."""
    return hashlib.sha256(roster_manifest().encode("ascii")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# extraction


def _spam_features(sub, dmaps, kmaps):
    if sub.kernel == "EDGE3":
        maps = (kmaps["EDGE3_N"], kmaps["EDGE3_S"])
    elif sub.kernel:
        maps = (kmaps[sub.kernel],)
    else:
        maps = (dmaps[(sub.order, sub.directions[0])],)
    hist_h = hist_v = None
    for rmap in maps:
        qm = quantize_truncate(rmap, sub.q)
        ch = cooccurrence4(qm, "horizontal")
        cv = cooccurrence4(qm, "vertical")
        hist_h = ch if hist_h is None else hist_h + ch
        hist_v = cv if hist_v is None else hist_v + cv
    return symmetrize_spam(hist_h, hist_v)


def _minmax_features(sub, dmaps):
    variants = [sub.directions]
    rev = tuple(REVERSE[d] for d in sub.directions)
    if set(rev) != set(sub.directions):
        variants.append(rev)
    hist_min = hist_max = None
    for dirs in variants:
        stack, r0, c0 = align_maps([dmaps[(sub.order, d)] for d in dirs])
        for reduced, is_min in ((stack.min(axis=0), True), (stack.max(axis=0), False)):
            qm = quantize_truncate(ResidualMap(reduced, r0, c0, sub.order), sub.q)
            pair = cooccurrence4(qm, "horizontal") + cooccurrence4(qm, "vertical")
            if is_min:
                hist_min = pair if hist_min is None else hist_min + pair
            else:
                hist_max = pair if hist_max is None else hist_max + pair
    return symmetrize_minmax(hist_min, hist_max)


def extract_features(img, s: int) -> np.ndarray:
    """Feature vector of the image's 8-s clear planes.

    The s most significant planes are zeroed first, so the vector never
    depends on encrypted content: extracting from an encrypted image
    with matching s gives the same vector as extracting from the
    original. s=8 is permitted and produces the degenerate all-zero
    residual statistics.
    """
    arr = as_gray(img)
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise DegenerateInputError(
            f"image {arr.shape[0]}x{arr.shape[1]} below the {MIN_SIDE}x{MIN_SIDE} minimum"
        )
    x = zero_planes(arr, s)

    dmaps = {}
    for d in DIRECTIONS:
        dmaps[(1, d)] = directional_residual(x, 1, d)
        dmaps[(3, d)] = directional_residual(x, 3, d)
    for a in AXES:
        dmaps[(2, a)] = directional_residual(x, 2, a)
    kmaps = {k: kernel_residual(x, k) for k in ("SQUARE3", "SQUARE5", "EDGE3_N", "EDGE3_S")}

    blocks = []
    for sub in ROSTER:
        if sub.kind == "spam":
            blocks.append(_spam_features(sub, dmaps, kmaps))
        else:
            blocks.append(_minmax_features(sub, dmaps))
    vec = np.concatenate(blocks)
    if vec.shape != (FEATURE_DIM,):
        raise AssertionError(f"roster produced {vec.shape[0]} values, expected {FEATURE_DIM}")
    return vec


# ---------------------------------------------------------------------------
# feature file I/O

FEATURE_MAGIC = b"RM1F"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<HII")  # version, dim, rows


def write_feature_file(path, matrix) -> None:
    """Write a feature matrix as magic, version, dim, rows, f32 data (LE)."""
    X = np.asarray(matrix, dtype=np.float32)
    if X.ndim != 2:
        raise InvalidInputError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    header = FEATURE_MAGIC + _HEADER.pack(FEATURE_VERSION, X.shape[1], X.shape[0])
    atomic_write_bytes(path, header + X.astype("<f4").tobytes())


def read_feature_file(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    if len(data) < 4 + _HEADER.size or data[:4] != FEATURE_MAGIC:
        raise DataFormatError(f"{path}: not a feature file (bad magic)")
    version, dim, rows = _HEADER.unpack(data[4 : 4 + _HEADER.size])
    if version != FEATURE_VERSION:
        raise DataFormatError(f"{path}: feature file version {version}, expected {FEATURE_VERSION}")
    need = 4 + _HEADER.size + 4 * dim * rows
    if len(data) != need:
        raise DataFormatError(f"{path}: feature payload is {len(data)} bytes, expected {need}")
    return np.frombuffer(data[4 + _HEADER.size :], dtype="<f4").reshape(rows, dim).copy()


def write_feature_csv(path, matrix, labels) -> None:
    """CSV export, one row per image, label first then the values."""
    X = np.asarray(matrix, dtype=np.float32)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise InvalidInputError("matrix rows and labels must match")
    lines = []
    for label, row in zip(labels, X):
        lines.append(label + "," + ",".join(f"{v:.9g}" for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_csv(path):
    labels, rows = [], []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise DataFormatError(f"{path}:{ln}: expected label plus values")
        labels.append(parts[0])
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{ln}: bad value: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: no feature rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataFormatError(f"{path}: inconsistent row widths {sorted(widths)}")
    return np.asarray(rows, dtype=np.float32), labels
