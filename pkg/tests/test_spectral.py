import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from freqmask.spectral import apply_mask, fft2, ifft2, mask_gradient

from oracles import central_diff, rel_err


def grids(h, w, lo=-10.0, hi=10.0):
    return arrays(np.float64, (h, w),
                  elements=st.floats(min_value=lo, max_value=hi, width=64))


def test_constant_image_dc_only():
    c = 0.7
    spec = fft2(np.full((8, 8), c))
    assert np.isclose(spec[0, 0], c * 64)
    off_dc = spec.copy()
    off_dc[0, 0] = 0.0
    assert np.abs(off_dc).max() < 1e-12


def test_impulse_flat_spectrum():
    grid = np.zeros((6, 5))
    grid[0, 0] = 1.0
    assert np.allclose(fft2(grid), 1.0)


def test_dc_only_gives_constant_image():
    spec = np.zeros((4, 4), dtype=complex)
    spec[0, 0] = 16.0
    assert np.allclose(ifft2(spec).real, 1.0)


def test_zero_grid_roundtrip():
    z = np.zeros((3, 7))
    assert np.array_equal(ifft2(fft2(z)).real, z)


@given(grids(8, 8))
def test_parseval(grid):
    spec = fft2(grid)
    lhs = (grid ** 2).sum()
    rhs = (np.abs(spec) ** 2).sum() / 64.0
    assert np.isclose(lhs, rhs, rtol=1e-10, atol=1e-9)


@given(grids(16, 16))
def test_fft_roundtrip(grid):
    back = ifft2(fft2(grid)).real
    assert np.abs(back - grid).max() < 1e-10


def test_fft2_rejects_1d():
    with pytest.raises(ValueError):
        fft2(np.arange(8.0))
    with pytest.raises(ValueError):
        ifft2(np.arange(8.0))


def test_identity_mask_is_identity():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, size=(1, 16, 16))
    out = apply_mask(img, np.ones_like(img))
    assert np.abs(out - img).max() < 1e-10


def test_zero_mask_zeroes_image():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, size=(1, 8, 8))
    assert np.abs(apply_mask(img, np.zeros_like(img))).max() < 1e-14


def test_plane_wave_survives_its_own_bins():
    """A cos wave passes unchanged through a mask keeping only its two bins."""
    h = w = 16
    rows = np.arange(h).reshape(h, 1)
    img = np.broadcast_to(np.cos(2 * np.pi * 3 * rows / h), (h, w)).copy()
    mask = np.zeros((h, w))
    mask[3, 0] = 1.0
    mask[h - 3, 0] = 1.0
    assert np.abs(apply_mask(img, mask) - img).max() < 1e-8


def test_mask_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        apply_mask(np.zeros((4, 4)), np.ones((4, 5)))


def test_mask_range_validated():
    img = np.zeros((4, 4))
    with pytest.raises(ValueError):
        apply_mask(img, np.full((4, 4), 1.5))
    with pytest.raises(ValueError):
        apply_mask(img, np.full((4, 4), -0.1))


def test_filtered_output_not_clipped():
    # Heavy filtering can push pixels outside [0, 1]; that must survive.
    rng = np.random.default_rng(2)
    img = rng.uniform(0, 1, size=(16, 16))
    mask = np.zeros((16, 16))
    mask[5, 7] = 1.0
    mask[11, 9] = 1.0
    out = apply_mask(img, mask)
    assert out.min() < 0.0


def test_mask_gradient_zero_upstream():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, size=(2, 8, 8))
    assert np.array_equal(mask_gradient(img, np.zeros_like(img)),
                          np.zeros_like(img))


@given(st.floats(min_value=-4.0, max_value=4.0, allow_nan=False))
def test_mask_gradient_linear_in_upstream(alpha):
    rng = np.random.default_rng(4)
    img = rng.uniform(0, 1, size=(8, 8))
    up = rng.normal(size=(8, 8))
    assert np.allclose(mask_gradient(img, alpha * up),
                       alpha * mask_gradient(img, up), atol=1e-9)


def test_mask_gradient_matches_central_differences():
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 1, size=(1, 8, 8))
    mask = rng.uniform(0.2, 0.8, size=(1, 8, 8))
    up = rng.normal(size=(1, 8, 8))

    def loss(m):
        return float((apply_mask(img, m) * up).sum())

    want = central_diff(loss, mask, h=1e-5)
    got = mask_gradient(img, up)
    assert rel_err(got, want) < 1e-6


@settings(max_examples=25)
@given(grids(6, 6, lo=0.0, hi=1.0), grids(6, 6), grids(6, 6, lo=0.0, hi=1.0))
def test_mask_gradient_is_adjoint(img, up, mask):
    # <apply_mask(x, M), U> == <M, mask_gradient(x, U)> since the operator
    # is linear in the mask
    lhs = float((apply_mask(img, mask) * up).sum())
    rhs = float((mask * mask_gradient(img, up)).sum())
    assert np.isclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_mask_gradient_shape_mismatch():
    with pytest.raises(ValueError):
        mask_gradient(np.zeros((4, 4)), np.zeros((5, 4)))
