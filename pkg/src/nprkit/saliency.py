"""Salient-region detection: graph-based saliency, Otsu mask, bounding box.

The image is reduced to a coarse feature grid; per feature channel a
fully-connected Markov chain is built whose transition weights grow with
feature dissimilarity and decay with grid distance, and the stationary
distribution marks where mass (attention) accumulates. The averaged and
smoothed activation is upsampled back to image size, thresholded with
Otsu's method, and boxed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, NumericalError
from .filters import gaussian_blur
from .imgcore import BBox, require_image, resize_area, resize_bilinear, rgb_to_lab

MIN_IMAGE_SIDE = 64


@dataclass(frozen=True)
class SaliencyParams:
    """Grid resolution and Markov-chain settings."""

    grid_width: int = 32
    sigma_frac: float = 0.15
    weight_floor: float = 1e-6
    power_tol: float = 1e-6
    power_max_iters: int = 1000

    def __post_init__(self) -> None:
        if self.grid_width < 8:
            raise InvalidInputError(f"grid_width must be >= 8, got {self.grid_width}")
        if min(self.sigma_frac, self.weight_floor, self.power_tol) <= 0:
            raise InvalidInputError("saliency parameters must be positive")
        if self.power_max_iters < 1:
            raise InvalidInputError("power_max_iters must be >= 1")


def _normalize_minmax(channel: np.ndarray) -> np.ndarray:
    lo = channel.min()
    hi = channel.max()
    if hi == lo:
        return np.zeros_like(channel)
    return (channel - lo) / (hi - lo)


def feature_maps(img: np.ndarray, params: SaliencyParams) -> list[np.ndarray]:
    """Four grid-resolution feature channels, each min-max normalized.

    Channels: luminance, red-green opponency, blue-yellow opponency, and
    gradient-orientation energy (four orientations collapsed into one
    map). A constant channel normalizes to all zeros.
    """
    arr = require_image(img, channels=3)
    h, w = arr.shape[:2]
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise InvalidInputError(
            f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {w}x{h}"
        )
    grid_w = params.grid_width
    grid_h = max(1, round(grid_w * h / w))
    small = resize_area(arr, grid_h, grid_w)
    lum = rgb_to_lab(small)[..., 0]
    red_green = small[..., 0] - small[..., 1]
    blue_yellow = small[..., 2] - 0.5 * (small[..., 0] + small[..., 1])
    gy, gx = np.gradient(lum)
    # directional energy at 0, 45, 90, 135 degrees, summed
    diag = 1.0 / math.sqrt(2.0)
    orientation = (
        np.abs(gx)
        + np.abs(gy)
        + np.abs(diag * (gx + gy))
        + np.abs(diag * (gx - gy))
    )
    return [
        _normalize_minmax(lum),
        _normalize_minmax(red_green),
        _normalize_minmax(blue_yellow),
        _normalize_minmax(orientation),
    ]


def _transition_matrix(feature: np.ndarray, params: SaliencyParams) -> np.ndarray:
    """Column-stochastic transition matrix of the saliency chain.

    Pairwise weight = |F(a) - F(b)| * exp(-d(a,b)^2 / (2 sigma^2)) plus
    the ergodicity floor, so a constant feature gives equal weights
    everywhere and therefore an exactly uniform stationary distribution.
    """
    h, w = feature.shape
    values = feature.reshape(-1)
    ys, xs = np.mgrid[0:h, 0:w]
    ys = ys.reshape(-1).astype(np.float64)
    xs = xs.reshape(-1).astype(np.float64)
    dist2 = (ys[:, None] - ys[None, :]) ** 2 + (xs[:, None] - xs[None, :]) ** 2
    sigma = params.sigma_frac * w
    weights = np.abs(values[:, None] - values[None, :]) * np.exp(
        -dist2 / (2.0 * sigma * sigma)
    )
    weights += params.weight_floor
    return weights / weights.sum(axis=0, keepdims=True)


def _power_stationary(matrix: np.ndarray, tol: float, max_iters: int) -> np.ndarray:
    """Stationary vector of a column-stochastic matrix by power iteration.

    Convergence is the L1 residual of the stationarity equation. The
    iterate is averaged with its image (a lazy walk with the identical
    stationary vector), which damps the oscillation of chains whose
    second eigenvalue sits near -1, e.g. short near-bipartite chains.
    """
    n = matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        nxt = matrix @ pi
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = 0.5 * (pi + nxt)
    raise NumericalError(
        f"stationary distribution did not converge in {max_iters} iterations"
    )


def markov_activation(feature: np.ndarray, params: SaliencyParams) -> np.ndarray:
    """Stationary mass of the feature's saliency chain, max-normalized."""
    feat = require_image(feature, channels=1)
    if feat.ndim == 3:
        feat = feat[..., 0]
    if feat.min() < 0.0 or feat.max() > 1.0:
        raise InvalidInputError("feature values must lie in [0, 1]")
    matrix = _transition_matrix(feat, params)
    pi = _power_stationary(matrix, params.power_tol, params.power_max_iters)
    return (pi / pi.max()).reshape(feat.shape)


def saliency_map(img: np.ndarray, params: SaliencyParams) -> np.ndarray:
    """Full-resolution saliency map in [0, 1] with maximum exactly 1."""
    arr = require_image(img, channels=3)
    channels = feature_maps(arr, params)
    activation = np.mean(
        [markov_activation(ch, params) for ch in channels], axis=0
    )
    sigma = params.grid_width / 16.0
    smooth = gaussian_blur(activation, math.ceil(3.0 * sigma), sigma)
    full = resize_bilinear(smooth, arr.shape[0], arr.shape[1])
    return full / full.max()


def otsu_from_histogram(counts: np.ndarray) -> int:
    """Otsu threshold index over a 256-bin histogram, computed exactly.

    Candidate t splits bins into {< t} and {>= t}. The between-class
    variance n0*n1*(mu0-mu1)^2 is compared as exact integer fractions so
    ties genuinely tie and break toward the lower threshold.
    """
    counts = np.asarray(counts)
    if counts.shape != (256,) or np.any(counts < 0):
        raise InvalidInputError("histogram must be 256 nonnegative counts")
    bins = [int(c) for c in counts]
    total = sum(bins)
    total_mass = sum(i * c for i, c in enumerate(bins))
    best_t = 0
    best_num = 0  # variance as fraction best_num / best_den
    best_den = 1
    n0 = 0
    s0 = 0
    for t in range(256):
        n1 = total - n0
        if n0 > 0 and n1 > 0:
            diff = s0 * n1 - (total_mass - s0) * n0
            num = diff * diff
            den = n0 * n1
            if num * best_den > best_num * den:
                best_num = num
                best_den = den
                best_t = t
        n0 += bins[t]
        s0 += t * bins[t]
    return best_t


def otsu_threshold(saliency: np.ndarray) -> np.ndarray:
    """Binarize a saliency map at the Otsu threshold (mask = value > t/255)."""
    smap = require_image(saliency, channels=1)
    if smap.ndim == 3:
        smap = smap[..., 0]
    if smap.min() == smap.max():
        raise DegenerateInputError("constant map has no threshold")
    levels = np.clip(np.round(smap * 255.0).astype(np.int64), 0, 255)
    counts = np.bincount(levels.reshape(-1), minlength=256)
    t = otsu_from_histogram(counts)
    return smap > (t / 255.0)


def bounding_box(mask: np.ndarray, pad: int) -> BBox:
    """Tightest box around the true pixels, padded and clamped to bounds."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
    if pad < 0:
        raise InvalidInputError(f"pad must be >= 0, got {pad}")
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise DegenerateInputError("cannot bound an empty mask")
    h, w = mask.shape
    return BBox(
        x0=max(0, int(xs.min()) - pad),
        y0=max(0, int(ys.min()) - pad),
        x1=min(w, int(xs.max()) + 1 + pad),
        y1=min(h, int(ys.max()) + 1 + pad),
    )
