"""2D discrete Fourier transforms and the frequency-mask filtering operator.

The filtering operator multiplies the FFT of an image element-wise with a
real mask in [0, 1] and projects back to pixel space by taking the real part
of the inverse transform:

    filtered = Re(ifft2(mask * fft2(image)))

All transforms use the unnormalized-forward / (1/(H*W))-inverse convention
and double precision. The operator is linear both in the image and in the
mask; ``mask_gradient`` is its exact adjoint in the mask argument.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fft2", "ifft2", "apply_mask", "mask_gradient"]


def fft2(grid: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2D DFT over the last two axes.

    The DC bin equals the plain sum of the inputs. Accepts real or complex
    input of shape (..., H, W) with H, W >= 1.
    """
    grid = np.asarray(grid)
    if grid.ndim < 2:
        raise ValueError(f"fft2 expects at least a 2D grid, got shape {grid.shape}")
    return np.fft.fft2(grid.astype(np.complex128, copy=False), axes=(-2, -1))


def ifft2(grid: np.ndarray) -> np.ndarray:
    """Inverse 2D DFT with 1/(H*W) normalization; inverse of :func:`fft2`."""
    grid = np.asarray(grid)
    if grid.ndim < 2:
        raise ValueError(f"ifft2 expects at least a 2D grid, got shape {grid.shape}")
    return np.fft.ifft2(grid.astype(np.complex128, copy=False), axes=(-2, -1))


def _check_mask(image: np.ndarray, mask: np.ndarray) -> None:
    if image.shape != mask.shape:
        raise ValueError(
            f"mask shape {mask.shape} does not match image shape {image.shape}"
        )
    if mask.size and (mask.min() < 0.0 or mask.max() > 1.0):
        raise ValueError("mask entries must lie in [0, 1]")


def apply_mask(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Filter ``image`` through a per-bin frequency mask.

    Parameters
    ----------
    image : (..., H, W) real array, typically (C, H, W)
    mask : same shape, entries in [0, 1]

    Returns
    -------
    Real array of the same shape: Re(ifft2(mask * fft2(image))). The output
    is deliberately not re-clipped to [0, 1].
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    _check_mask(image, mask)
    return ifft2(mask * fft2(image)).real


def mask_gradient(image: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`apply_mask` in its mask argument.

    Given the gradient ``upstream`` of some scalar loss with respect to the
    filtered image, returns the gradient with respect to the mask entries:

        grad[k] = Re(fft2(image)[k] * ifft2(upstream)[k])

    Matches central finite differences of the filtering operator exactly up
    to floating-point roundoff (the operator is linear in the mask).
    """
    image = np.asarray(image, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if image.shape != upstream.shape:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match image shape {image.shape}"
        )
    return (fft2(image) * ifft2(upstream)).real
