"""Image preprocessing for the recognizability task.

The chain is: left-shift the pixels by the number of protected planes
(dropping whatever the encryption scrambled), resize the shorter side up
to the network input size when the image is smaller, crop at the center,
then standardize each image to zero mean and unit variance. Shifting by
s throws away exactly the top s bitplanes, so an image and its
plane-zeroed counterpart preprocess to the same tensor bit for bit.

Shift semantics match the planeguard CLI's `shift` subcommand: the pixel
value is (p << s) mod 256. That contract is re-implemented here rather
than imported so this package only depends on the published interface.
"""

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError

CROP_SIDE = 224
VAR_FLOOR = 1e-6


def _check_image(img):
    if not isinstance(img, np.ndarray) or img.ndim != 2:
        raise InvalidArgumentError("expected a 2-D ndarray image")
    if img.dtype != np.uint8:
        raise InvalidArgumentError(f"expected uint8 pixels, got {img.dtype}")


def _check_s(s):
    if not isinstance(s, (int, np.integer)) or isinstance(s, bool):
        raise InvalidArgumentError(f"s must be an integer, got {s!r}")
    if not 0 <= s <= 8:
        raise InvalidArgumentError(f"s must be in 0..8, got {s}")


def shift_pixels(img, s):
    """Left-shift every pixel by s in 8-bit arithmetic: (p << s) mod 256."""
    _check_image(img)
    _check_s(s)
    return ((img.astype(np.uint16) << int(s)) & 0xFF).astype(np.uint8)


def center_crop(img, side=CROP_SIDE):
    """Crop a side x side window centered in the image (top-left bias on odd remainders)."""
    rows, cols = img.shape
    if rows < side or cols < side:
        raise InvalidArgumentError(
            f"image {rows}x{cols} smaller than crop side {side}")
    top = (rows - side) // 2
    left = (cols - side) // 2
    return img[top:top + side, left:left + side]


def _resize_shorter_to(img, target):
    """Bilinear-resize so the shorter side equals target, keeping aspect."""
    rows, cols = img.shape
    short = min(rows, cols)
    scale = target / short
    new_rows = max(target, int(round(rows * scale)))
    new_cols = max(target, int(round(cols * scale)))
    pil = Image.fromarray(img, mode="L")
    # PIL sizes are (width, height)
    return np.asarray(pil.resize((new_cols, new_rows), Image.BILINEAR))


def standardize(img):
    """Zero-mean unit-variance float32 map; variance floored so flat inputs give zeros."""
    x = img.astype(np.float32)
    mean = float(x.mean())
    var = float(x.var())
    std = np.sqrt(max(var, VAR_FLOOR))
    return ((x - mean) / std).astype(np.float32)


def preprocess_for_cnn(img, s, side=CROP_SIDE):
    """Shift, fit to the crop size, center-crop, standardize, stack 3 channels.

    Returns a float32 array of shape (3, side, side). Images whose
    shorter side is below the crop size are upscaled first; larger
    images are cropped directly, as captured.
    """
    shifted = shift_pixels(img, s)
    if min(shifted.shape) < side:
        shifted = _resize_shorter_to(shifted, side)
    cropped = center_crop(shifted, side)
    flat = standardize(cropped)
    return np.repeat(flat[np.newaxis, :, :], 3, axis=0)
