"""Pixel-domain filters: Gaussian, bilateral, guided, DoG, quantization.

Detail exaggeration and cartoon abstraction are built from these pieces.
All filters share the shrinking-window border policy from imgcore and map
constant images to themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.ndimage import correlate1d

from .errors import InvalidInputError
from .imgcore import box_filter, lab_to_rgb, require_image, rgb_to_lab


@dataclass(frozen=True)
class GuidedFilterParams:
    """Guided-filter smoothing plus detail boost settings."""

    radius: int = 8
    epsilon: float = 0.01
    boost: float = 4.0

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise InvalidInputError(f"guided radius must be >= 1, got {self.radius}")
        if self.epsilon <= 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if self.boost < 0:
            raise InvalidInputError(f"boost must be >= 0, got {self.boost}")


@dataclass(frozen=True)
class AbstractionParams:
    """Cartoon abstraction settings: bilateral smoothing, luminance
    quantization, and the soft edge map multiplied onto the quantized L."""

    spatial_sigma: float = 3.0
    range_sigma: float = 0.1
    quant_levels: int = 10
    bilateral_iterations: int = 2
    dog_sigma: float = 1.0
    dog_ratio: float = 1.6
    dog_tau: float = 0.98
    dog_sharpness: float = 5.0

    def __post_init__(self) -> None:
        if self.quant_levels < 2:
            raise InvalidInputError(
                f"quant_levels must be >= 2, got {self.quant_levels}"
            )
        if min(self.spatial_sigma, self.range_sigma, self.dog_sigma) <= 0:
            raise InvalidInputError("all sigmas must be > 0")
        if self.bilateral_iterations < 1:
            raise InvalidInputError("bilateral_iterations must be >= 1")


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------

def gaussian_kernel1d(radius: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps at integer offsets -radius..radius."""
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be > 0, got {sigma}")
    if radius < 0:
        raise InvalidInputError(f"radius must be >= 0, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    """Normalized (2r+1)^2 Gaussian table (outer product of the 1-D taps)."""
    k = gaussian_kernel1d(radius, sigma)
    return np.outer(k, k)


def gaussian_blur(img: np.ndarray, radius: int, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with shrinking-window borders.

    Each axis is normalized by the kernel mass that actually fell inside
    the image, so the separable result equals a full 2-D windowed blur
    renormalized per pixel.
    """
    arr = require_image(img)
    kernel = gaussian_kernel1d(radius, sigma)
    if radius == 0:
        return arr.copy()
    h, w = arr.shape[:2]
    mass_y = correlate1d(np.ones(h), kernel, mode="constant", cval=0.0)
    mass_x = correlate1d(np.ones(w), kernel, mode="constant", cval=0.0)
    out = correlate1d(arr, kernel, axis=0, mode="constant", cval=0.0)
    out /= mass_y.reshape((h,) + (1,) * (arr.ndim - 1))
    out = correlate1d(out, kernel, axis=1, mode="constant", cval=0.0)
    out /= mass_x.reshape((1, w) + (1,) * (arr.ndim - 2))
    return out


# ---------------------------------------------------------------------------
# bilateral
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _bilateral_kernel(lab, spatial, inv_two_sr2, out):  # pragma: no cover
    h, w, _ = lab.shape
    radius = spatial.shape[0] // 2
    for y in range(h):
        for x in range(w):
            c0 = lab[y, x, 0]
            c1 = lab[y, x, 1]
            c2 = lab[y, x, 2]
            acc0 = 0.0
            acc1 = 0.0
            acc2 = 0.0
            wsum = 0.0
            y_lo = max(0, y - radius)
            y_hi = min(h - 1, y + radius)
            x_lo = max(0, x - radius)
            x_hi = min(w - 1, x + radius)
            for yy in range(y_lo, y_hi + 1):
                for xx in range(x_lo, x_hi + 1):
                    d0 = lab[yy, xx, 0] - c0
                    d1 = lab[yy, xx, 1] - c1
                    d2 = lab[yy, xx, 2] - c2
                    dist2 = d0 * d0 + d1 * d1 + d2 * d2
                    wgt = spatial[yy - y + radius, xx - x + radius] * math.exp(
                        -dist2 * inv_two_sr2
                    )
                    acc0 += wgt * lab[yy, xx, 0]
                    acc1 += wgt * lab[yy, xx, 1]
                    acc2 += wgt * lab[yy, xx, 2]
                    wsum += wgt
            out[y, x, 0] = acc0 / wsum
            out[y, x, 1] = acc1 / wsum
            out[y, x, 2] = acc2 / wsum


def bilateral_filter(
    lab: np.ndarray, spatial_sigma: float, range_sigma: float
) -> np.ndarray:
    """Joint-range bilateral filter on a unit-normalized Lab image.

    One weight field per pixel, built from the spatial Gaussian and the
    Euclidean Lab distance, filters all three channels; the window is
    truncated at ceil(3 * spatial_sigma).
    """
    arr = require_image(lab, channels=3)
    if spatial_sigma <= 0 or range_sigma <= 0:
        raise InvalidInputError("bilateral sigmas must be > 0")
    radius = math.ceil(3.0 * spatial_sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    dist2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    spatial = np.exp(-dist2 / (2.0 * spatial_sigma * spatial_sigma))
    out = np.empty_like(arr)
    _bilateral_kernel(
        np.ascontiguousarray(arr), spatial, 1.0 / (2.0 * range_sigma * range_sigma), out
    )
    return out


# ---------------------------------------------------------------------------
# guided filter and detail exaggeration
# ---------------------------------------------------------------------------

def guided_filter(
    p: np.ndarray, guide: np.ndarray, radius: int, epsilon: float
) -> np.ndarray:
    """Edge-preserving smoothing of p steered by the guide image.

    Within each window the output is an affine function of the guide:
    a = cov(I, p) / (var(I) + epsilon), b = mean(p) - a * mean(I), and
    each pixel averages the a, b of every window covering it.
    """
    p = require_image(p, channels=1)
    guide = require_image(guide, channels=1)
    if p.shape != guide.shape:
        raise InvalidInputError(
            f"filter input {p.shape} and guide {guide.shape} differ in size"
        )
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    mean_i = box_filter(guide, radius)
    mean_p = box_filter(p, radius)
    corr_ip = box_filter(guide * p, radius)
    corr_ii = box_filter(guide * guide, radius)
    var_i = corr_ii - mean_i * mean_i
    cov_ip = corr_ip - mean_i * mean_p
    a = cov_ip / (var_i + epsilon)
    b = mean_p - a * mean_i
    return box_filter(a, radius) * guide + box_filter(b, radius)


def detail_exaggerate(img: np.ndarray, params: GuidedFilterParams) -> np.ndarray:
    """Boost the detail layer on top of the guided-filter base layer.

    Per channel: base = guided_filter(ch, ch), detail = ch - base,
    output = clamp(base + boost * detail). boost=1 reproduces the input.
    """
    arr = require_image(img, channels=3)
    out = np.empty_like(arr)
    for c in range(3):
        ch = arr[..., c]
        base = guided_filter(ch, ch, params.radius, params.epsilon)
        out[..., c] = base + params.boost * (ch - base)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# abstraction: quantization, DoG edges, full effect
# ---------------------------------------------------------------------------

def quantize_luminance(lab: np.ndarray, levels: int) -> np.ndarray:
    """Snap L to the nearest of `levels` uniform values in [0, 1]."""
    arr = require_image(lab, channels=3)
    if levels < 2:
        raise InvalidInputError(f"levels must be >= 2, got {levels}")
    out = arr.copy()
    steps = levels - 1
    out[..., 0] = np.round(arr[..., 0] * steps) / steps
    return out


def dog_edges(luminance: np.ndarray, params: AbstractionParams) -> np.ndarray:
    """Soft edge map in (0, 1] from a thresholded difference of Gaussians.

    D = blur(L, sigma) - tau * blur(L, sigma * ratio); flat and bright-side
    responses (D > 0) give 1, edge responses roll off as 1 + tanh(phi * D).
    """
    lum = require_image(luminance, channels=1)
    sigma = params.dog_sigma
    wide = sigma * params.dog_ratio
    narrow_blur = gaussian_blur(lum, math.ceil(3.0 * sigma), sigma)
    wide_blur = gaussian_blur(lum, math.ceil(3.0 * wide), wide)
    diff = narrow_blur - params.dog_tau * wide_blur
    return np.where(diff > 0.0, 1.0, 1.0 + np.tanh(params.dog_sharpness * diff))


def abstract_image(img: np.ndarray, params: AbstractionParams) -> np.ndarray:
    """Cartoon abstraction: iterated bilateral smoothing in Lab, luminance
    quantization, and DoG edge darkening, then back to RGB."""
    arr = require_image(img, channels=3)
    lab = rgb_to_lab(arr)
    for _ in range(params.bilateral_iterations):
        lab = bilateral_filter(lab, params.spatial_sigma, params.range_sigma)
    quantized = quantize_luminance(lab, params.quant_levels)
    edges = dog_edges(lab[..., 0], params)
    quantized[..., 0] = quantized[..., 0] * edges
    return lab_to_rgb(quantized)
