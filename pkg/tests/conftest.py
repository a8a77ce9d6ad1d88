"""Shared fixtures: synthetic scenes and a one-time numba warm-up."""

from __future__ import annotations

import numpy as np
import pytest

from nprkit.filters import bilateral_filter
from nprkit.maxflow import solve_max_flow


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile the numba kernels once so timed tests measure the algorithm."""
    img = np.full((8, 8, 3), 0.5)
    bilateral_filter(img, 1.0, 0.1)
    solve_max_flow(
        2,
        0,
        1,
        np.array([0, 1], dtype=np.int64),
        np.array([1, 0], dtype=np.int64),
        np.array([1.0, 0.0]),
    )


@pytest.fixture
def square_scene():
    """Factory for an orange square on a noisy blue background.

    Returns (image, true_mask); the square is the salient object the
    pipeline is expected to recover.
    """

    def build(
        h: int = 96,
        w: int = 128,
        side: int = 40,
        noise: float = 0.02,
        seed: int = 5,
    ) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(seed)
        img = np.empty((h, w, 3))
        img[..., 0] = 0.15
        img[..., 1] = 0.25
        img[..., 2] = 0.60
        y0 = (h - side) // 2
        x0 = (w - side) // 2
        mask = np.zeros((h, w), dtype=bool)
        mask[y0 : y0 + side, x0 : x0 + side] = True
        img[mask] = (0.90, 0.55, 0.10)
        img += rng.normal(0.0, noise, img.shape)
        return np.clip(img, 0.0, 1.0), mask

    return build


@pytest.fixture
def textured_scene():
    """Factory for a detailed object over a smooth gradient background.

    Heavier texture inside the object keeps it salient while giving the
    detail-boosting filters something to amplify.
    """

    def build(h: int, w: int, seed: int = 11) -> np.ndarray:
        rng = np.random.default_rng(seed)
        yy, xx = np.mgrid[0:h, 0:w]
        img = np.empty((h, w, 3))
        img[..., 0] = 0.18 + 0.10 * xx / w
        img[..., 1] = 0.25 + 0.08 * yy / h
        img[..., 2] = 0.55 - 0.10 * xx / w
        img += rng.normal(0.0, 0.01, img.shape)

        oh, ow = int(h * 0.38), int(w * 0.30)
        y0, x0 = (h - oh) // 2, (w - ow) // 2
        obj = slice(y0, y0 + oh), slice(x0, x0 + ow)
        texture = (
            0.08 * np.sin(yy[obj] * 0.9) * np.cos(xx[obj] * 0.7)
            + rng.normal(0.0, 0.05, (oh, ow))
        )
        img[obj] = np.stack(
            [0.85 + texture, 0.50 + 0.5 * texture, 0.12 - 0.3 * texture], axis=-1
        )
        return np.clip(img, 0.0, 1.0)

    return build


def iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.logical_and(a, b).sum()
    union = np.logical_or(a, b).sum()
    return inter / union if union else 1.0
