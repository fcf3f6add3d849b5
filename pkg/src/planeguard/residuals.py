"""High-pass residual maps for rich-model features.

A residual is the response of a zero-sum integer stencil centered on a
pixel: first order compares one neighbor against the center, second
order is the 1-D Laplacian along an axis, third order uses the cubic
taps (-1, 3, -3, 1), and the kernel residuals apply fixed 2-D masks.
Responses are computed only where the whole stencil fits inside the
image (no padding); each map carries the offset of its first element in
source coordinates so maps from different stencils can be aligned
pointwise. Arithmetic is int32 throughout, which is exact here: the
largest magnitude any kernel can reach on 8-bit data is 255 * 48
(SQUARE5's positive tap mass).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitplanes import as_gray
from .errors import DegenerateInputError, InvalidArgumentError

# Compass directions for first/third order, screen convention: row axis
# grows downward (S), column axis grows rightward (E).
DIRECTIONS = ("E", "W", "N", "S", "NE", "NW", "SE", "SW")
# Axes for the symmetric second-order residual: horizontal, vertical,
# "\" diagonal, "/" anti-diagonal.
AXES = ("h", "v", "d", "m")

_VEC = {
    "E": (0, 1), "W": (0, -1), "N": (-1, 0), "S": (1, 0),
    "NE": (-1, 1), "NW": (-1, -1), "SE": (1, 1), "SW": (1, -1),
    "h": (0, 1), "v": (1, 0), "d": (1, 1), "m": (1, -1),
}

# Direction each direction/axis maps to under 180-degree rotation.
REVERSE = {
    "E": "W", "W": "E", "N": "S", "S": "N",
    "NE": "SW", "SW": "NE", "NW": "SE", "SE": "NW",
    "h": "h", "v": "v", "d": "d", "m": "m",
}

KERNEL_KINDS = ("SQUARE3", "SQUARE5", "EDGE3_N", "EDGE3_S", "EDGE3_E", "EDGE3_W")

# (grid, anchor row, anchor col, normalizer c). The anchor marks the
# center pixel, always the cell holding the largest-magnitude tap.
_KERNELS = {
    "SQUARE3": ([[-1, 2, -1], [2, -4, 2], [-1, 2, -1]], 1, 1, 4),
    "SQUARE5": (
        [
            [-1, 2, -2, 2, -1],
            [2, -6, 8, -6, 2],
            [-2, 8, -12, 8, -2],
            [2, -6, 8, -6, 2],
            [-1, 2, -2, 2, -1],
        ],
        2, 2, 12,
    ),
    "EDGE3_N": ([[-1, 2, -1], [2, -4, 2]], 1, 1, 4),
    "EDGE3_S": ([[2, -4, 2], [-1, 2, -1]], 0, 1, 4),
    "EDGE3_E": ([[2, -1], [-4, 2], [2, -1]], 1, 0, 4),
    "EDGE3_W": ([[-1, 2], [2, -4], [-1, 2]], 1, 1, 4),
}


@dataclass(frozen=True)
class ResidualMap:
    """Residual values plus the source offset of element (0, 0)."""

    values: np.ndarray
    row0: int
    col0: int
    order: int  # normalizer c of the producing stencil


def _apply_taps(img, taps, order):
    """Sum coef * shifted(image) over the stencil's valid region."""
    x = as_gray(img).astype(np.int32)
    dis = [di for _, di, _ in taps]
    djs = [dj for _, _, dj in taps]
    top, bottom = max(0, -min(dis)), max(0, max(dis))
    left, right = max(0, -min(djs)), max(0, max(djs))
    h = x.shape[0] - top - bottom
    w = x.shape[1] - left - right
    if h <= 0 or w <= 0:
        raise DegenerateInputError(
            f"image {x.shape[0]}x{x.shape[1]} smaller than the stencil support"
        )
    out = np.zeros((h, w), dtype=np.int32)
    for coef, di, dj in taps:
        out += coef * x[top + di : top + di + h, left + dj : left + dj + w]
    return ResidualMap(out, top, left, order)


def directional_residual(img, order: int, direction: str) -> ResidualMap:
    """First, second, or third order residual along one direction.

    order 1 (direction u): X(p+u) - X(p)
    order 2 (axis u):      X(p-u) - 2 X(p) + X(p+u)
    order 3 (direction u): -X(p-u) + 3 X(p) - 3 X(p+u) + X(p+2u)
    """
    if order == 2:
        if direction not in AXES:
            raise InvalidArgumentError(f"order 2 runs along an axis in {AXES}, got {direction!r}")
    elif order in (1, 3):
        if direction not in DIRECTIONS:
            raise InvalidArgumentError(f"order {order} needs a direction in {DIRECTIONS}, got {direction!r}")
    else:
        raise InvalidArgumentError(f"order must be 1, 2, or 3, got {order!r}")
    di, dj = _VEC[direction]
    if order == 1:
        taps = [(-1, 0, 0), (1, di, dj)]
    elif order == 2:
        taps = [(1, -di, -dj), (-2, 0, 0), (1, di, dj)]
    else:
        taps = [(-1, -di, -dj), (3, 0, 0), (-3, di, dj), (1, 2 * di, 2 * dj)]
    return _apply_taps(img, taps, order)


def kernel_residual(img, kind: str) -> ResidualMap:
    """Fixed 2-D kernel residual (SQUARE3, SQUARE5, EDGE3_{N,S,E,W})."""
    if kind not in _KERNELS:
        raise InvalidArgumentError(f"unknown kernel {kind!r}, expected one of {KERNEL_KINDS}")
    grid, ar, ac, order = _KERNELS[kind]
    taps = [
        (grid[r][c], r - ar, c - ac)
        for r in range(len(grid))
        for c in range(len(grid[0]))
        if grid[r][c] != 0
    ]
    return _apply_taps(img, taps, order)


def align_maps(maps) -> tuple[np.ndarray, int, int]:
    """Stack residual maps over their common source region.

    Returns (stack, row0, col0) where stack[i] is map i restricted to
    the intersection of all valid rectangles.
    """
    if not maps:
        raise InvalidArgumentError("no maps to align")
    r0 = max(m.row0 for m in maps)
    c0 = max(m.col0 for m in maps)
    r1 = min(m.row0 + m.values.shape[0] for m in maps)
    c1 = min(m.col0 + m.values.shape[1] for m in maps)
    if r1 <= r0 or c1 <= c0:
        raise DegenerateInputError("residual maps have no common region")
    stack = np.stack(
        [m.values[r0 - m.row0 : r1 - m.row0, c0 - m.col0 : c1 - m.col0] for m in maps]
    )
    return stack, r0, c0


def format_residual(rmap: ResidualMap) -> str:
    """Signed-integer text grid of a residual map (debug output)."""
    lines = [f"# rows {rmap.values.shape[0]} cols {rmap.values.shape[1]} row0 {rmap.row0} col0 {rmap.col0} c {rmap.order}"]
    for row in rmap.values:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"
