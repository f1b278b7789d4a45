"""Blockwise Gabor fingerprint enhancement.

Pipeline: per-block normalization, variance-based foreground segmentation,
gradient orientation field, x-signature ridge frequency, and even-symmetric
Gabor filtering with each block's own orientation and frequency. The result
is binarized at zero response: white = ridge.

Orientation angles are the direction *along* the ridges, measured from the
+x (column) axis towards +y (row, pointing down), in [0, pi).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.signal import fftconvolve

from ..errors import ImageTooSmall
from ..image import BinaryMask, GrayImage, Polarity
from .base import AnyShape, ClassifierSpec, PreferredShape

TARGET_MEAN = 0.5
TARGET_VAR = 0.01


@dataclass(frozen=True)
class GaborParams:
    block_size: int = 16
    orientation_smoothing_sigma: float = 1.0
    freq_min: float = 1.0 / 25.0
    freq_max: float = 1.0 / 3.0
    filter_sigma_x: float = 4.0
    filter_sigma_y: float = 4.0
    segmentation_variance_threshold: float = 0.005

    def __post_init__(self):
        if self.block_size < 8:
            raise ValueError("block_size must be >= 8")
        if not 0 < self.freq_min < self.freq_max < 0.5:
            raise ValueError("need 0 < freq_min < freq_max < 0.5")
        if self.orientation_smoothing_sigma < 0:
            raise ValueError("orientation_smoothing_sigma must be >= 0")
        if self.filter_sigma_x <= 0 or self.filter_sigma_y <= 0:
            raise ValueError("filter sigmas must be > 0")


@dataclass(frozen=True)
class OrientationField:
    """Per-block ridge angle in [0, pi) and coherence in [0, 1]."""

    angles: np.ndarray
    coherence: np.ndarray
    block_size: int


def block_edges(n: int, block: int) -> np.ndarray:
    """Start offsets of the blocks tiling ``range(n)``; the last may be short."""
    return np.arange(0, n, block)


def _block_sums(arr: np.ndarray, block: int) -> np.ndarray:
    rows = np.add.reduceat(arr, block_edges(arr.shape[0], block), axis=0)
    return np.add.reduceat(rows, block_edges(arr.shape[1], block), axis=1)


def _block_counts(shape, block: int) -> np.ndarray:
    return _block_sums(np.ones(shape), block)


def _expand(blocks: np.ndarray, shape, block: int) -> np.ndarray:
    """Broadcast a per-block array back to pixel resolution."""
    out = np.repeat(np.repeat(blocks, block, axis=0), block, axis=1)
    return out[:shape[0], :shape[1]]


def _check_size(shape, block: int) -> None:
    if shape[0] < block or shape[1] < block:
        raise ImageTooSmall(
            f"image {shape[1]}x{shape[0]} is smaller than one {block}px block")


def orientation_from_array(arr: np.ndarray, params: GaborParams) -> OrientationField:
    bs = params.block_size
    _check_size(arr.shape, bs)
    gx = ndi.sobel(arr, axis=1)
    gy = ndi.sobel(arr, axis=0)
    # doubled-angle vector components and gradient energy, summed per block
    sin2 = _block_sums(2.0 * gx * gy, bs)
    cos2 = _block_sums(gx * gx - gy * gy, bs)
    energy = _block_sums(gx * gx + gy * gy, bs)
    sigma = params.orientation_smoothing_sigma
    if sigma > 0:
        sin2 = ndi.gaussian_filter(sin2, sigma, mode="nearest")
        cos2 = ndi.gaussian_filter(cos2, sigma, mode="nearest")
        energy = ndi.gaussian_filter(energy, sigma, mode="nearest")
    angles = np.mod(0.5 * np.arctan2(sin2, cos2) + np.pi / 2, np.pi)
    strength = np.hypot(sin2, cos2)
    coherence = np.zeros_like(strength)
    np.divide(strength, energy, out=coherence, where=energy > 1e-12)
    return OrientationField(angles, np.clip(coherence, 0.0, 1.0), bs)


def estimate_orientation_field(img: GrayImage, params: GaborParams = GaborParams()) -> OrientationField:
    """Blockwise least-squares ridge orientation from 3x3 Sobel gradients.

    Raises:
        ImageTooSmall: the image is smaller than one block in either dimension.
    """
    return orientation_from_array(img.data, params)


def _interpolate_blocks(blocks: np.ndarray, shape, block: int) -> np.ndarray:
    """Bilinear interpolation of per-block values placed at the block centres."""
    ys = (np.arange(shape[0]) - (block - 1) / 2.0) / block
    xs = (np.arange(shape[1]) - (block - 1) / 2.0) / block
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return ndi.map_coordinates(blocks, [yy, xx], order=1, mode="nearest")


def normalize_blocks(arr: np.ndarray, params: GaborParams):
    """Return the blockwise-normalized image and the per-block foreground flags.

    Each block's mean and variance set the offset and gain that bring it to
    mean 0.5 and variance 0.01. Offsets and gains are interpolated between
    block centres so the normalized image has no steps at block borders.
    Background blocks (raw variance under the threshold) get zero gain.
    """
    bs = params.block_size
    counts = _block_counts(arr.shape, bs)
    mean = _block_sums(arr, bs) / counts
    var = np.maximum(_block_sums(arr * arr, bs) / counts - mean * mean, 0.0)
    foreground = var >= params.segmentation_variance_threshold
    gain = np.zeros_like(var)
    np.divide(np.sqrt(TARGET_VAR), np.sqrt(var), out=gain, where=foreground & (var > 0))
    offset = _interpolate_blocks(mean, arr.shape, bs)
    scale = _interpolate_blocks(gain, arr.shape, bs) * _expand(foreground, arr.shape, bs)
    norm = TARGET_MEAN + (arr - offset) * scale
    return norm, foreground


def _block_centres(n: int, block: int) -> np.ndarray:
    starts = block_edges(n, block)
    ends = np.minimum(starts + block, n)
    return (starts + ends - 1) / 2.0


def _refined_peaks(sig: np.ndarray) -> np.ndarray:
    mid = sig[1:-1]
    peak = (mid > sig[:-2]) & (mid >= sig[2:]) & (mid > sig.mean())
    idx = np.nonzero(peak)[0] + 1
    if idx.size == 0:
        return idx.astype(float)
    left, centre, right = sig[idx - 1], sig[idx], sig[idx + 1]
    denom = left - 2.0 * centre + right
    shift = np.zeros_like(centre)
    np.divide(0.5 * (left - right), denom, out=shift, where=denom < 0)
    return idx + np.clip(shift, -0.5, 0.5)


def _fill_invalid(freq: np.ndarray, valid: np.ndarray, fallback: float) -> np.ndarray:
    freq = np.where(valid, freq, 0.0)
    known = valid.astype(float)
    kernel = np.ones((3, 3))
    for _ in range(max(freq.shape)):
        if known.all():
            break
        num = ndi.convolve(freq * known, kernel, mode="constant")
        den = ndi.convolve(known, kernel, mode="constant")
        grow = (known == 0) & (den > 0)
        if not grow.any():
            break
        freq[grow] = num[grow] / den[grow]
        known[grow] = 1.0
    freq[known == 0] = fallback
    return freq


def ridge_frequency_from_array(norm: np.ndarray, field: OrientationField,
                               foreground: np.ndarray, params: GaborParams):
    """Per-block ridge frequency from the x-signature of an oriented window.

    The window is ``2 * block_size`` long across the ridges and ``block_size``
    wide along them. Returns ``(frequency, measured)`` where ``measured``
    flags blocks whose own signature gave an in-band estimate; every other
    block is filled from its neighbours.
    """
    bs = params.block_size
    length, width = 2 * bs, bs
    cy = _block_centres(norm.shape[0], bs)
    cx = _block_centres(norm.shape[1], bs)
    theta = field.angles
    tx, ty = np.cos(theta), np.sin(theta)       # along the ridges
    nx, ny = -np.sin(theta), np.cos(theta)      # across the ridges
    k = np.arange(length) - (length - 1) / 2.0
    d = np.arange(width) - (width - 1) / 2.0
    ys = (cy[:, None, None, None] + d[None, None, None, :] * ty[..., None, None]
          + k[None, None, :, None] * ny[..., None, None])
    xs = (cx[None, :, None, None] + d[None, None, None, :] * tx[..., None, None]
          + k[None, None, :, None] * nx[..., None, None])
    samples = ndi.map_coordinates(norm, [ys.ravel(), xs.ravel()], order=1, mode="nearest")
    signatures = samples.reshape(ys.shape).mean(axis=-1)

    freq = np.zeros(theta.shape)
    measured = np.zeros(theta.shape, dtype=bool)
    for i, j in zip(*np.nonzero(foreground)):
        peaks = _refined_peaks(signatures[i, j])
        if peaks.size < 2:
            continue
        f = (peaks.size - 1) / (peaks[-1] - peaks[0])
        if params.freq_min <= f <= params.freq_max:
            freq[i, j] = f
            measured[i, j] = True
    fallback = (float(np.median(freq[measured])) if measured.any()
                else math.sqrt(params.freq_min * params.freq_max))
    return _fill_invalid(freq, measured, fallback), measured


def gabor_kernel(theta: float, freq: float, sigma_x: float, sigma_y: float) -> np.ndarray:
    """Zero-DC even-symmetric Gabor kernel.

    The cosine runs across the ridges (normal to ``theta``) with envelope
    ``sigma_x``; ``sigma_y`` is the envelope along the ridges.
    """
    r = int(math.ceil(3.0 * max(sigma_x, sigma_y)))
    y, x = np.mgrid[-r:r + 1, -r:r + 1].astype(float)
    u = -x * math.sin(theta) + y * math.cos(theta)
    v = x * math.cos(theta) + y * math.sin(theta)
    envelope = np.exp(-0.5 * (u * u / sigma_x ** 2 + v * v / sigma_y ** 2))
    kernel = envelope * np.cos(2.0 * math.pi * freq * u)
    return kernel - envelope * (kernel.sum() / envelope.sum())


def gabor_enhance(img: GrayImage, params: GaborParams = GaborParams()) -> BinaryMask:
    """Enhance a fingerprint and return its ridge mask (True = ridge).

    Raises:
        ImageTooSmall: the image is smaller than one block in either dimension.
    """
    bs = params.block_size
    arr = img.data
    _check_size(arr.shape, bs)
    norm, foreground = normalize_blocks(arr, params)
    field = orientation_from_array(norm, params)
    freq, _ = ridge_frequency_from_array(norm, field, foreground, params)

    r = int(math.ceil(3.0 * max(params.filter_sigma_x, params.filter_sigma_y)))
    centred = np.pad(norm - TARGET_MEAN, r, mode="reflect")
    response = np.zeros(arr.shape)
    rows, cols = block_edges(arr.shape[0], bs), block_edges(arr.shape[1], bs)
    for i, j in zip(*np.nonzero(foreground)):
        y0, x0 = rows[i], cols[j]
        y1, x1 = min(y0 + bs, arr.shape[0]), min(x0 + bs, arr.shape[1])
        kernel = gabor_kernel(field.angles[i, j], freq[i, j],
                              params.filter_sigma_x, params.filter_sigma_y)
        patch = centred[y0:y1 + 2 * r, x0:x1 + 2 * r]
        response[y0:y1, x0:x1] = fftconvolve(patch, kernel, mode="valid")

    # ridges are dark in the input, so they respond negatively
    ridges = (response < 0) & _expand(foreground, arr.shape, bs)
    return BinaryMask(ridges, Polarity.RIDGE)


def gabor_classifier(params: GaborParams = GaborParams(),
                     preferred_shape: tuple[int, int] | None = (350, 350)) -> ClassifierSpec:
    """Gabor classifier spec; ``preferred_shape=None`` disables the resize."""
    policy = AnyShape() if preferred_shape is None else PreferredShape(*preferred_shape)
    return ClassifierSpec("gabor", Polarity.RIDGE, policy,
                          functools.partial(gabor_enhance, params=params))
