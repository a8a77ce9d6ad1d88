"""Box-seeded foreground extraction (GrabCut).

Pixels outside the seed box are permanent background; pixels inside
start as probable foreground. The algorithm alternates three exact
block minimizations of one energy: assign each pixel its cheapest
mixture component, refit both color models from those assignments, and
relabel the probable pixels with a min-cut over the 8-neighbor lattice.
Each step can only lower the energy, so the iteration is monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import (
    DegenerateResultError,
    InvalidInputError,
    NumericalError,
)
from .imgcore import BBox, require_image
from .maxflow import solve_max_flow

REG_FLOOR = 1e-5
DEFAULT_COMPONENTS = 5
DEFAULT_GAMMA = 50.0

# offsets covering every 8-neighbor pair exactly once, with distances
_NEIGHBOR_OFFSETS = (
    (0, 1, 1.0),
    (1, 0, 1.0),
    (1, 1, math.sqrt(2.0)),
    (1, -1, math.sqrt(2.0)),
)


class Region(IntEnum):
    """Per-pixel trimap label. HARD labels never change."""

    HARD_BG = 0
    HARD_FG = 1
    PROB_BG = 2
    PROB_FG = 3


@dataclass(frozen=True)
class Gmm:
    """Gaussian mixture color model with cached inverses and log-dets.

    Covariances are kept with eigenvalues >= REG_FLOOR so every
    component stays invertible on flat color regions.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    inv_covs: np.ndarray
    log_dets: np.ndarray

    def __post_init__(self) -> None:
        k = self.weights.shape[0]
        if k == 0:
            raise InvalidInputError("mixture needs at least one component")
        if self.means.shape != (k, 3) or self.covs.shape != (k, 3, 3):
            raise InvalidInputError("mixture field shapes disagree")
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise InvalidInputError("weights must be nonnegative and sum to 1")

    @property
    def components(self) -> int:
        return self.weights.shape[0]


def gmm_fit(pixels: np.ndarray, assignments: np.ndarray, reg_floor: float = REG_FLOOR) -> Gmm:
    """Maximum-likelihood mixture refit from hard component assignments.

    Components with no pixels are dropped; the surviving weights
    (count / total) already sum to 1. Covariance eigenvalues are clamped
    up to reg_floor, which is the exact constrained ML solution, so a
    refit never increases the assignment likelihood cost.
    """
    px = np.asarray(pixels, dtype=np.float64)
    ids = np.asarray(assignments)
    if px.ndim != 2 or px.shape[1] != 3:
        raise InvalidInputError(f"pixels must be (n, 3), got {px.shape}")
    if px.shape[0] == 0:
        raise InvalidInputError("cannot fit a mixture to zero pixels")
    if ids.shape != (px.shape[0],):
        raise InvalidInputError("one assignment per pixel required")

    labels = np.unique(ids)
    k = labels.shape[0]
    weights = np.empty(k)
    means = np.empty((k, 3))
    covs = np.empty((k, 3, 3))
    inv_covs = np.empty((k, 3, 3))
    log_dets = np.empty(k)
    total = px.shape[0]
    for i, lab in enumerate(labels):
        member = px[ids == lab]
        n = member.shape[0]
        weights[i] = n / total
        mu = member.mean(axis=0)
        means[i] = mu
        diff = member - mu
        cov = diff.T @ diff / n
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, reg_floor)
        covs[i] = (eigvecs * eigvals) @ eigvecs.T
        inv_covs[i] = (eigvecs / eigvals) @ eigvecs.T
        log_dets[i] = np.log(eigvals).sum()
    return Gmm(weights, means, covs, inv_covs, log_dets)


# k-means center fitting runs on a strided subsample above this size;
# the final assignment pass always covers every pixel
_KMEANS_SAMPLE_LIMIT = 65536


def gmm_init(pixels: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Deterministic k-means (Lloyd, 10 iterations max) assignments.

    Initial centers follow the k-means++ rule driven by a seeded PRNG;
    k is reduced to the pixel count when there are fewer pixels.
    """
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim != 2 or px.shape[1] != 3:
        raise InvalidInputError(f"pixels must be (n, 3), got {px.shape}")
    n = px.shape[0]
    if n == 0:
        raise InvalidInputError("cannot cluster zero pixels")
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if seed < 0:
        raise InvalidInputError(f"seed must be >= 0, got {seed}")
    k = min(k, n)

    stride = -(-n // _KMEANS_SAMPLE_LIMIT)
    sub = px[::stride]
    m = sub.shape[0]

    rng = np.random.default_rng(seed)
    centers = np.empty((k, 3))
    centers[0] = sub[rng.integers(m)]
    d2 = ((sub - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        mass = d2.sum()
        if mass > 0:
            centers[i] = sub[rng.choice(m, p=d2 / mass)]
        else:
            centers[i] = sub[rng.integers(m)]
        d2 = np.minimum(d2, ((sub - centers[i]) ** 2).sum(axis=1))

    assign = np.full(m, -1, dtype=np.int64)
    for _ in range(10):
        dist = ((sub[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(dist, axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            member = sub[assign == j]
            if member.shape[0] > 0:
                centers[j] = member.mean(axis=0)
    if stride == 1:
        return assign
    dist = ((px[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(dist, axis=1)


def component_terms(pixels: np.ndarray, gmm: Gmm) -> np.ndarray:
    """Per-pixel, per-component negative log cost, shape (n, K).

    cost = -log w + log(det cov)/2 + mahalanobis^2/2. The constant
    3/2 log(2 pi) is omitted throughout, which shifts the total energy
    uniformly and changes no comparison.
    """
    px = np.asarray(pixels, dtype=np.float64)
    k = gmm.components
    terms = np.empty((px.shape[0], k))
    for i in range(k):
        diff = px - gmm.means[i]
        quad = np.einsum("nj,jk,nk->n", diff, gmm.inv_covs[i], diff)
        terms[:, i] = -np.log(gmm.weights[i]) + 0.5 * gmm.log_dets[i] + 0.5 * quad
    return terms


def data_terms(pixels: np.ndarray, gmm: Gmm) -> np.ndarray:
    """Best-component data cost per pixel (minimum over components)."""
    return component_terms(pixels, gmm).min(axis=1)


def _neighbor_pairs(
    img: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All 8-neighbor pixel pairs (a, b) with their smoothness weights.

    weight = gamma * exp(-beta * |z_a - z_b|^2) / dist(a, b), where beta
    is 1 / (2 * mean squared color difference) over every pair (beta = 0
    for a constant image).
    """
    h, w = img.shape[:2]
    flat = np.arange(h * w, dtype=np.int64).reshape(h, w)
    a_parts: list[np.ndarray] = []
    b_parts: list[np.ndarray] = []
    sq_parts: list[np.ndarray] = []
    dist_parts: list[np.ndarray] = []
    for dy, dx, dist in _NEIGHBOR_OFFSETS:
        ys = slice(0, h - dy)
        ys2 = slice(dy, h)
        xs = slice(max(0, -dx), w - max(0, dx))
        xs2 = slice(max(0, dx), w - max(0, -dx))
        a = flat[ys, xs].reshape(-1)
        b = flat[ys2, xs2].reshape(-1)
        sq = ((img[ys, xs] - img[ys2, xs2]) ** 2).sum(axis=-1).reshape(-1)
        a_parts.append(a)
        b_parts.append(b)
        sq_parts.append(sq)
        dist_parts.append(np.full(a.shape[0], dist))
    a_all = np.concatenate(a_parts)
    b_all = np.concatenate(b_parts)
    sq_all = np.concatenate(sq_parts)
    dist_all = np.concatenate(dist_parts)
    mean_sq = sq_all.mean() if sq_all.size else 0.0
    beta = 0.0 if mean_sq == 0.0 else 1.0 / (2.0 * mean_sq)
    weights = gamma * np.exp(-beta * sq_all) / dist_all
    return a_all, b_all, weights


@dataclass
class GrabCutState:
    """Final labels, both color models, and convergence bookkeeping."""

    labels: np.ndarray
    fg_gmm: Gmm
    bg_gmm: Gmm
    energy: float
    iteration: int


def grabcut(
    img: np.ndarray,
    box: BBox,
    *,
    components: int = DEFAULT_COMPONENTS,
    gamma: float = DEFAULT_GAMMA,
    max_iters: int = 10,
    seed: int = 0,
    energy_tol: float = 1e-3,
    energy_log: list[float] | None = None,
    return_state: bool = False,
) -> np.ndarray | tuple[np.ndarray, GrabCutState]:
    """Foreground mask for the object seeded by the bounding box.

    Stops when the relative energy decrease falls below energy_tol or
    after max_iters relabelings. energy_log, when given, receives the
    total energy after every relabeling.
    """
    arr = require_image(img, channels=3).astype(np.float64, copy=False)
    h, w = arr.shape[:2]
    box.check_inside(w, h)
    if box.x0 == 0 and box.y0 == 0 and box.x1 == w and box.y1 == h:
        raise InvalidInputError("box must be strictly smaller than the image")
    if max_iters < 1:
        raise InvalidInputError(f"max_iters must be >= 1, got {max_iters}")

    pixels = arr.reshape(-1, 3)
    labels = np.full(h * w, Region.HARD_BG, dtype=np.int64)
    inside = np.zeros((h, w), dtype=bool)
    inside[box.y0 : box.y1, box.x0 : box.x1] = True
    inside = inside.reshape(-1)
    labels[inside] = Region.PROB_FG

    free_flat = np.nonzero(inside)[0]
    n_free = free_flat.shape[0]
    node_of = np.full(h * w, -1, dtype=np.int64)
    node_of[free_flat] = np.arange(n_free)
    source = n_free
    sink = n_free + 1

    pair_a, pair_b, pair_w = _neighbor_pairs(arr, gamma)
    a_free = inside[pair_a]
    b_free = inside[pair_b]
    both = a_free & b_free
    # pairs with one hard-background end fold into the sink capacity of
    # the free end: the weight is paid exactly when that end goes fg
    fold = np.zeros(h * w)
    one_a = a_free & ~b_free
    one_b = b_free & ~a_free
    np.add.at(fold, pair_a[one_a], pair_w[one_a])
    np.add.at(fold, pair_b[one_b], pair_w[one_b])
    fold_free = fold[free_flat]

    na = node_of[pair_a[both]]
    nb = node_of[pair_b[both]]
    vw = pair_w[both]
    link_from = np.column_stack([na, nb]).reshape(-1)
    link_to = np.column_stack([nb, na]).reshape(-1)
    link_cap = np.repeat(vw, 2)

    m_nodes = np.arange(n_free, dtype=np.int64)
    term_from = np.column_stack(
        [np.full(n_free, source), m_nodes, m_nodes, np.full(n_free, sink)]
    ).reshape(-1)
    term_to = np.column_stack(
        [m_nodes, np.full(n_free, source), np.full(n_free, sink), m_nodes]
    ).reshape(-1)
    arc_from = np.concatenate([link_from, term_from])
    arc_to = np.concatenate([link_to, term_to])

    fg_assign = gmm_init(pixels[inside], components, seed)
    bg_assign = gmm_init(pixels[~inside], components, seed + 1)
    fg_gmm = gmm_fit(pixels[inside], fg_assign)
    bg_gmm = gmm_fit(pixels[~inside], bg_assign)

    prev_energy: float | None = None
    energy = math.inf
    iteration = 0
    for iteration in range(1, max_iters + 1):
        fg_mask = (labels == Region.PROB_FG) | (labels == Region.HARD_FG)
        if not fg_mask.any():
            break
        fg_comp = np.argmin(component_terms(pixels[fg_mask], fg_gmm), axis=1)
        bg_comp = np.argmin(component_terms(pixels[~fg_mask], bg_gmm), axis=1)
        fg_gmm = gmm_fit(pixels[fg_mask], fg_comp)
        bg_gmm = gmm_fit(pixels[~fg_mask], bg_comp)

        d_fg = data_terms(pixels[free_flat], fg_gmm)
        d_bg = data_terms(pixels[free_flat], bg_gmm)
        term_cap = np.column_stack(
            [d_bg, np.zeros(n_free), d_fg + fold_free, np.zeros(n_free)]
        ).reshape(-1)
        arc_cap = np.concatenate([link_cap, term_cap])
        _, source_side = solve_max_flow(
            n_free + 2, source, sink, arc_from, arc_to, arc_cap
        )

        free_fg = source_side[:n_free]
        labels[free_flat] = np.where(free_fg, Region.PROB_FG, Region.PROB_BG)
        fg_mask = (labels == Region.PROB_FG) | (labels == Region.HARD_FG)
        # total energy from the cached per-pixel terms: free pixels use
        # their cut side, hard pixels always pay the background cost
        e_data = d_fg[free_fg].sum() + d_bg[~free_fg].sum()
        e_data += data_terms(pixels[~inside], bg_gmm).sum()
        crossing = fg_mask[pair_a] != fg_mask[pair_b]
        energy = float(e_data + pair_w[crossing].sum())
        if not math.isfinite(energy):
            raise NumericalError(f"energy diverged at iteration {iteration}")
        if energy_log is not None:
            energy_log.append(energy)
        if prev_energy is not None:
            scale = abs(prev_energy) if prev_energy != 0.0 else 1.0
            if (prev_energy - energy) / scale < energy_tol:
                break
        prev_energy = energy

    fg_mask = (labels == Region.PROB_FG) | (labels == Region.HARD_FG)
    mask = fg_mask.reshape(h, w)
    if not mask.any():
        raise DegenerateResultError("foreground vanished during iteration")
    if not return_state:
        return mask
    state = GrabCutState(
        labels=labels.reshape(h, w),
        fg_gmm=fg_gmm,
        bg_gmm=bg_gmm,
        energy=energy,
        iteration=iteration,
    )
    return mask, state
