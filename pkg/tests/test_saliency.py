"""Saliency chain, Otsu threshold, and bounding box tests."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from nprkit.errors import (
    DegenerateInputError,
    InvalidInputError,
    NumericalError,
)
from nprkit.imgcore import BBox
from nprkit.saliency import (
    MIN_IMAGE_SIDE,
    SaliencyParams,
    _power_stationary,
    _transition_matrix,
    bounding_box,
    feature_maps,
    markov_activation,
    otsu_from_histogram,
    otsu_threshold,
    saliency_map,
)

# ---------------------------------------------------------------------------
# feature maps
# ---------------------------------------------------------------------------


def test_feature_maps_constant_gray_all_zero():
    img = np.full((64, 64, 3), 0.5)
    channels = feature_maps(img, SaliencyParams())
    assert len(channels) == 4
    for ch in channels:
        assert ch.shape == (32, 32)
        assert np.array_equal(ch, np.zeros((32, 32)))


def test_feature_maps_pure_red_all_zero():
    # a uniform red field is constant in every channel, including both
    # opponency maps and the gradient energy
    img = np.zeros((64, 64, 3))
    img[..., 0] = 1.0
    for ch in feature_maps(img, SaliencyParams()):
        assert np.array_equal(ch, np.zeros((32, 32)))


def test_feature_maps_half_red_half_green_opponency():
    img = np.zeros((64, 64, 3))
    img[:, :32, 0] = 1.0
    img[:, 32:, 1] = 1.0
    red_green = feature_maps(img, SaliencyParams())[1]
    assert np.array_equal(red_green[:, :16], np.ones((32, 16)))
    assert np.array_equal(red_green[:, 16:], np.zeros((32, 16)))


def test_feature_maps_grid_shape_follows_aspect():
    img = np.zeros((64, 128, 3))
    img[..., 2] = np.linspace(0, 1, 128)
    for ch in feature_maps(img, SaliencyParams()):
        assert ch.shape == (16, 32)


def test_feature_maps_range():
    rng = np.random.default_rng(7)
    img = rng.random((80, 100, 3))
    for ch in feature_maps(img, SaliencyParams()):
        assert ch.min() >= 0.0 and ch.max() <= 1.0


def test_feature_maps_rejects_small_images():
    img = np.zeros((MIN_IMAGE_SIDE - 1, 100, 3))
    with pytest.raises(InvalidInputError):
        feature_maps(img, SaliencyParams())
    with pytest.raises(InvalidInputError):
        feature_maps(np.zeros((100, 32, 3)), SaliencyParams())


# ---------------------------------------------------------------------------
# Markov activation
# ---------------------------------------------------------------------------


def test_transition_matrix_is_column_stochastic():
    rng = np.random.default_rng(13)
    feat = rng.random((5, 6))
    matrix = _transition_matrix(feat, SaliencyParams())
    assert np.abs(matrix.sum(axis=0) - 1.0).max() < 1e-12
    assert matrix.min() > 0.0


def test_stationary_distribution_properties():
    rng = np.random.default_rng(14)
    feat = rng.random((4, 5))
    matrix = _transition_matrix(feat, SaliencyParams())
    pi = _power_stationary(matrix, 1e-10, 1000)
    assert abs(pi.sum() - 1.0) < 1e-9
    assert np.abs(matrix @ pi - pi).sum() <= 1e-10
    assert pi.min() > 0.0


def test_markov_activation_constant_feature_is_uniform():
    # equal weights everywhere make the uniform vector stationary, and
    # max-normalizing it gives ones up to matvec rounding
    out = markov_activation(np.zeros((6, 7)), SaliencyParams())
    assert np.abs(out - 1.0).max() < 1e-12


def test_markov_activation_three_node_chain_matches_eigenvector():
    """Hand-built 3-node chain against a dense eigen solve."""
    feat = np.array([[0.0, 0.5, 1.0]])
    params = SaliencyParams(power_tol=1e-12)

    values = feat.reshape(-1)
    sigma = params.sigma_frac * feat.shape[1]
    weights = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            weights[i, j] = abs(values[i] - values[j]) * math.exp(
                -((i - j) ** 2) / (2.0 * sigma * sigma)
            )
    weights += params.weight_floor
    matrix = weights / weights.sum(axis=0, keepdims=True)

    eigvals, eigvecs = np.linalg.eig(matrix)
    lead = np.argmin(np.abs(eigvals - 1.0))
    pi = np.real(eigvecs[:, lead])
    pi = pi / pi.sum()

    got = markov_activation(feat, params).reshape(-1)
    assert np.abs(got - pi / pi.max()).max() < 1e-9


def test_markov_activation_highlights_the_odd_node():
    # one strongly dissimilar cell over a gentle ramp should attract the
    # most stationary mass; the ramp keeps the chain well mixed
    feat = np.linspace(0.0, 0.3, 64).reshape(8, 8)
    feat[3, 4] = 1.0
    out = markov_activation(feat, SaliencyParams())
    assert np.unravel_index(np.argmax(out), out.shape) == (3, 4)
    assert out[3, 4] == 1.0


def test_markov_activation_rejects_out_of_range_feature():
    with pytest.raises(InvalidInputError):
        markov_activation(np.full((4, 4), 1.5), SaliencyParams())
    with pytest.raises(InvalidInputError):
        markov_activation(np.full((4, 4), -0.1), SaliencyParams())


def test_markov_activation_reports_non_convergence():
    feat = np.zeros((6, 6))
    feat[2, 2] = 1.0
    params = SaliencyParams(power_tol=1e-12, power_max_iters=1)
    with pytest.raises(NumericalError, match="1 iteration"):
        markov_activation(feat, params)


# ---------------------------------------------------------------------------
# full saliency map
# ---------------------------------------------------------------------------


def test_saliency_map_constant_image_is_all_ones():
    img = np.full((64, 80, 3), 0.3)
    smap = saliency_map(img, SaliencyParams())
    assert smap.shape == (64, 80)
    assert np.allclose(smap, 1.0, atol=1e-12)


def test_saliency_map_peak_inside_bright_disk():
    img = np.full((128, 128, 3), 0.12)
    yy, xx = np.mgrid[0:128, 0:128]
    disk = (yy - 64) ** 2 + (xx - 64) ** 2 <= 20**2
    img[disk] = 0.88
    smap = saliency_map(img, SaliencyParams())
    y, x = np.unravel_index(np.argmax(smap), smap.shape)
    assert 44 <= y < 84 and 44 <= x < 84


def test_saliency_map_dims_range_and_max():
    rng = np.random.default_rng(23)
    img = rng.random((72, 96, 3))
    smap = saliency_map(img, SaliencyParams())
    assert smap.shape == (72, 96)
    assert smap.min() >= 0.0
    assert smap.max() == 1.0


def test_saliency_map_flip_invariance():
    rng = np.random.default_rng(24)
    img = rng.random((64, 96, 3))
    params = SaliencyParams(power_tol=1e-10)
    base = saliency_map(img, params)
    horizontal = saliency_map(img[:, ::-1], params)
    vertical = saliency_map(img[::-1], params)
    assert np.abs(horizontal[:, ::-1] - base).max() < 1e-6
    assert np.abs(vertical[::-1] - base).max() < 1e-6


# ---------------------------------------------------------------------------
# Otsu
# ---------------------------------------------------------------------------


def _otsu_reference(counts: np.ndarray) -> int:
    """Exhaustive argmax of the between-class variance, in exact rationals."""
    counts = [int(c) for c in counts]
    prefix_n = np.cumsum([0] + counts)
    prefix_s = np.cumsum([0] + [i * c for i, c in enumerate(counts)])
    total_n = int(prefix_n[-1])
    total_s = int(prefix_s[-1])
    best_t = 0
    best_var = Fraction(0)
    for t in range(256):
        n0 = int(prefix_n[t])
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            continue
        s0 = int(prefix_s[t])
        diff = s0 * n1 - (total_s - s0) * n0
        var = Fraction(diff * diff, n0 * n1)
        if var > best_var:
            best_var = var
            best_t = t
    return best_t


def test_otsu_two_spike_histogram():
    counts = np.zeros(256, dtype=np.int64)
    counts[0] = 500
    counts[255] = 500
    # every split between the spikes scores the same, so the tie break
    # picks the lowest threshold
    assert otsu_from_histogram(counts) == 1
    assert _otsu_reference(counts) == 1


def test_otsu_single_bin_has_no_split():
    counts = np.zeros(256, dtype=np.int64)
    counts[40] = 999
    assert otsu_from_histogram(counts) == 0
    assert otsu_from_histogram(np.zeros(256, dtype=np.int64)) == 0


def test_otsu_matches_exact_reference_on_random_histograms():
    rng = np.random.default_rng(31)
    for trial in range(40):
        counts = rng.integers(0, 100, 256)
        if trial % 2:
            counts[rng.choice(256, 240, replace=False)] = 0
        assert otsu_from_histogram(counts) == _otsu_reference(counts)


def test_otsu_rejects_bad_histograms():
    with pytest.raises(InvalidInputError):
        otsu_from_histogram(np.zeros(255, dtype=np.int64))
    bad = np.zeros(256, dtype=np.int64)
    bad[3] = -1
    with pytest.raises(InvalidInputError):
        otsu_from_histogram(bad)


def test_otsu_threshold_splits_binary_map():
    smap = np.zeros((10, 10))
    smap[:, 5:] = 1.0
    mask = otsu_threshold(smap)
    assert np.array_equal(mask, smap == 1.0)


def test_otsu_threshold_separates_two_clusters():
    rng = np.random.default_rng(32)
    smap = np.where(rng.random((20, 20)) < 0.5, 0.2, 0.8)
    smap += rng.uniform(-0.02, 0.02, smap.shape)
    mask = otsu_threshold(smap)
    assert np.array_equal(mask, smap > 0.5)


def test_otsu_threshold_never_selects_everything():
    rng = np.random.default_rng(33)
    smap = rng.random((16, 16))
    mask = otsu_threshold(smap)
    assert mask.any() and not mask.all()


def test_otsu_threshold_constant_map_raises():
    with pytest.raises(DegenerateInputError):
        otsu_threshold(np.full((8, 8), 0.5))


# ---------------------------------------------------------------------------
# bounding box
# ---------------------------------------------------------------------------


def test_bounding_box_single_pixel():
    mask = np.zeros((40, 30), dtype=bool)
    mask[20, 10] = True
    assert bounding_box(mask, 0) == BBox(x0=10, y0=20, x1=11, y1=21)


def test_bounding_box_full_mask_with_pad_clamps():
    mask = np.ones((12, 18), dtype=bool)
    assert bounding_box(mask, 5) == BBox(x0=0, y0=0, x1=18, y1=12)


def test_bounding_box_l_shape():
    mask = np.zeros((20, 20), dtype=bool)
    mask[4:16, 3] = True
    mask[15, 3:12] = True
    assert bounding_box(mask, 0) == BBox(x0=3, y0=4, x1=12, y1=16)
    assert bounding_box(mask, 2) == BBox(x0=1, y0=2, x1=14, y1=18)


def test_bounding_box_pad_clamps_at_origin():
    mask = np.zeros((10, 10), dtype=bool)
    mask[1, 1] = True
    assert bounding_box(mask, 3) == BBox(x0=0, y0=0, x1=5, y1=5)


def test_bounding_box_empty_mask_raises():
    with pytest.raises(DegenerateInputError):
        bounding_box(np.zeros((5, 5), dtype=bool), 2)


def test_bounding_box_validation():
    mask = np.ones((5, 5), dtype=bool)
    with pytest.raises(InvalidInputError):
        bounding_box(mask, -1)
    with pytest.raises(InvalidInputError):
        bounding_box(np.ones((5, 5, 2), dtype=bool), 0)


def test_saliency_params_validation():
    with pytest.raises(InvalidInputError):
        SaliencyParams(grid_width=4)
    with pytest.raises(InvalidInputError):
        SaliencyParams(sigma_frac=0.0)
    with pytest.raises(InvalidInputError):
        SaliencyParams(power_max_iters=0)
