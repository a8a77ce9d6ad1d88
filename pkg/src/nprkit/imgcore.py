"""Image containers, color conversion, and shared raster primitives.

Conventions used across the package:

* Images are float64 numpy arrays in [0, 1], shaped (H, W) for a single
  channel or (H, W, 3) for color, row-major.
* Lab images use the same layout with channels normalized to [0, 1]:
  L = L*/100, a = (a* + 128)/255, b = (b* + 128)/255 (D65 white).
* Binary masks are boolean (H, W) arrays, True = foreground.
* All functions are pure; identical inputs give bit-identical outputs.

Windowed operations use a shrinking window at the borders: the window is
clipped to the image and sums are normalized by the actual sample count,
which avoids border darkening and stays consistent with integral images.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DegenerateInputError, InvalidInputError, UnsupportedFormatError

# sRGB to XYZ (linear light), D65. The white point is taken from the row
# sums so neutral inputs map to exactly neutral Lab.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ.sum(axis=1)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box: (x0, y0) inclusive, (x1, y1) exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise InvalidInputError(f"empty or inverted box {self}")
        if min(self.x0, self.y0) < 0:
            raise InvalidInputError(f"negative box coordinates {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def check_inside(self, img_width: int, img_height: int) -> None:
        if self.x1 > img_width or self.y1 > img_height:
            raise InvalidInputError(
                f"box {self} exceeds image bounds {img_width}x{img_height}"
            )


def require_image(img: np.ndarray, channels: int | None = None) -> np.ndarray:
    """Validate an image array and return it as float64.

    channels=1 accepts (H, W); channels=3 requires (H, W, 3); None accepts
    either layout.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        got = 1
    elif arr.ndim == 3 and arr.shape[2] in (1, 3):
        got = arr.shape[2]
    else:
        raise InvalidInputError(f"expected (H, W) or (H, W, 3) array, got {arr.shape}")
    if channels is not None and got != channels:
        raise InvalidInputError(f"expected {channels}-channel image, got {got}")
    if arr.size == 0:
        raise InvalidInputError("empty image")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("image contains non-finite samples")
    return arr


# ---------------------------------------------------------------------------
# color conversion
# ---------------------------------------------------------------------------

def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


_DELTA = 6.0 / 29.0


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(u: np.ndarray) -> np.ndarray:
    return np.where(u > _DELTA, u**3, 3.0 * _DELTA**2 * (u - 4.0 / 29.0))


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Convert an sRGB image in [0,1] to unit-normalized Lab.

    Returns an (H, W, 3) array with L in [0,1] (L*/100) and a, b mapped
    affinely from [-128, 127] to [0, 1].
    """
    rgb = require_image(img, channels=3)
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    fxyz = _lab_f(xyz / _WHITE)
    lstar = 116.0 * fxyz[..., 1] - 16.0
    astar = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    bstar = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return np.stack(
        [lstar / 100.0, (astar + 128.0) / 255.0, (bstar + 128.0) / 255.0], axis=-1
    )


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Invert rgb_to_lab; out-of-gamut values clamp to [0, 1]."""
    lab = require_image(lab, channels=3)
    lstar = lab[..., 0] * 100.0
    astar = lab[..., 1] * 255.0 - 128.0
    bstar = lab[..., 2] * 255.0 - 128.0
    fy = (lstar + 16.0) / 116.0
    fx = fy + astar / 500.0
    fz = fy - bstar / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _WHITE
    rgb = _linear_to_srgb(xyz @ _XYZ_TO_RGB.T)
    return np.clip(rgb, 0.0, 1.0)


# ---------------------------------------------------------------------------
# raster primitives
# ---------------------------------------------------------------------------

def box_filter(img: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the (2r+1)^2 window, O(1) per pixel via an integral image.

    Border windows shrink to the image and are normalized by the actual
    sample count.
    """
    arr = require_image(img)
    if radius < 0:
        raise InvalidInputError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return arr.copy()
    h, w = arr.shape[:2]
    integral = np.zeros((h + 1, w + 1) + arr.shape[2:], dtype=np.float64)
    integral[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    sums = (
        integral[np.ix_(y1, x1)]
        - integral[np.ix_(y0, x1)]
        - integral[np.ix_(y1, x0)]
        + integral[np.ix_(y0, x0)]
    )
    counts = np.outer(y1 - y0, x1 - x0).astype(np.float64)
    if arr.ndim == 3:
        counts = counts[..., None]
    return sums / counts


def resize_area(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample by exact area averaging (the right tool for downscaling)."""
    arr = require_image(img)
    if out_h < 1 or out_w < 1:
        raise InvalidInputError("output dimensions must be >= 1")
    arr = _area_axis(arr, out_h, axis=0)
    arr = _area_axis(arr, out_w, axis=1)
    return arr


def _area_axis(arr: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = arr.shape[axis]
    if out_len == in_len:
        return arr
    scale = in_len / out_len
    weights = np.zeros((out_len, in_len))
    for i in range(out_len):
        lo = i * scale
        hi = (i + 1) * scale
        first = int(np.floor(lo))
        last = min(int(np.ceil(hi)), in_len)
        for t in range(first, last):
            overlap = min(t + 1.0, hi) - max(float(t), lo)
            if overlap > 0:
                weights[i, t] = overlap
    weights /= weights.sum(axis=1, keepdims=True)
    moved = np.moveaxis(arr, axis, 0)
    out = np.tensordot(weights, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample with center-aligned bilinear interpolation."""
    arr = require_image(img)
    if out_h < 1 or out_w < 1:
        raise InvalidInputError("output dimensions must be >= 1")
    arr = _bilinear_axis(arr, out_h, axis=0)
    arr = _bilinear_axis(arr, out_w, axis=1)
    return arr


def _bilinear_axis(arr: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = arr.shape[axis]
    if out_len == in_len:
        return arr
    src = (np.arange(out_len) + 0.5) * (in_len / out_len) - 0.5
    src = np.clip(src, 0.0, in_len - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_len - 1)
    frac = src - i0
    moved = np.moveaxis(arr, axis, 0)
    shape = (out_len,) + (1,) * (moved.ndim - 1)
    out = moved[i0] * (1.0 - frac).reshape(shape) + moved[i1] * frac.reshape(shape)
    return np.moveaxis(out, 0, axis)


# ---------------------------------------------------------------------------
# file I/O: 8-bit PNG and binary PGM
# ---------------------------------------------------------------------------

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def load_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB or RGBA PNG as an (H, W, 3) float64 image.

    The alpha channel, when present, is dropped. Anything that is not an
    8-bit truecolor PNG (16-bit, grayscale, palette) is rejected.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(26)
    if len(header) < 26 or header[:8] != _PNG_SIGNATURE:
        raise UnsupportedFormatError(f"{path}: not a PNG file")
    bit_depth, color_type = struct.unpack_from("BB", header, 24)
    if bit_depth != 8:
        raise UnsupportedFormatError(
            f"{path}: {bit_depth}-bit PNG not supported, provide 8-bit RGB/RGBA"
        )
    if color_type not in (2, 6):
        raise UnsupportedFormatError(
            f"{path}: PNG color type {color_type} not supported, "
            "provide 8-bit RGB/RGBA"
        )
    with Image.open(path) as im:
        data = np.asarray(im)
    return data[..., :3].astype(np.float64) / 255.0


def save_png(img: np.ndarray, path: str | Path) -> None:
    """Write an (H, W, 3) image in [0,1] as an 8-bit RGB PNG."""
    arr = require_image(img, channels=3)
    data = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def load_pgm(path: str | Path) -> np.ndarray:
    """Load a binary PGM (P5, maxval <= 255) as an (H, W) float64 array."""
    path = Path(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(b"P5"):
        raise UnsupportedFormatError(f"{path}: not a binary PGM (P5) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        token = blob[start:pos]
        if not token.isdigit():
            raise UnsupportedFormatError(f"{path}: malformed PGM header")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if maxval > 255:
        raise UnsupportedFormatError(f"{path}: 16-bit PGM not supported")
    data = np.frombuffer(blob, dtype=np.uint8, offset=pos)
    if data.size < width * height:
        raise UnsupportedFormatError(f"{path}: truncated PGM data")
    data = data[: width * height].reshape(height, width)
    return data.astype(np.float64) / maxval


def save_pgm(img: np.ndarray, path: str | Path) -> None:
    """Write a single-channel image in [0,1] as a binary PGM (maxval 255)."""
    arr = require_image(img, channels=1)
    if arr.ndim == 3:
        arr = arr[..., 0]
    data = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    h, w = data.shape
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())


def mask_to_image(mask: np.ndarray) -> np.ndarray:
    """Boolean mask to a 0.0/1.0 single-channel image (for PGM dumps)."""
    return mask.astype(np.float64)


def image_to_mask(img: np.ndarray) -> np.ndarray:
    """Single-channel image back to a boolean mask (foreground > 0.5)."""
    arr = require_image(img, channels=1)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return arr > 0.5


def require_nonempty_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D boolean, got shape {mask.shape}")
    if not mask.any():
        raise DegenerateInputError("mask has no foreground pixels")
    return mask
