"""Blockwise FFT root filtering.

Every overlapping block is transformed, each coefficient is scaled by
``|F| ** k`` (DC removed) and transformed back. This boosts the dominant
ridge frequency relative to everything else. Blocks are stitched with a
raised-cosine taper over the overlap and the result is thresholded.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np
from skimage.filters import threshold_otsu

from ..errors import ImageTooSmall
from ..image import BinaryMask, GrayImage, Polarity
from .base import ClassifierSpec, FixedShape


@dataclass(frozen=True)
class Otsu:
    pass


@dataclass(frozen=True)
class Fixed:
    """Cut the min-max normalized response at ``value``."""

    value: float = 0.5


@dataclass(frozen=True)
class FftParams:
    block_size: int = 32
    overlap: int = 8
    power_exponent: float = 1.4
    binarize_threshold: Union[Otsu, Fixed] = Otsu()

    def __post_init__(self):
        if not 0 < self.overlap < self.block_size:
            raise ValueError("need 0 < overlap < block_size")
        if self.power_exponent <= 0:
            raise ValueError("power_exponent must be > 0")


def _taper(block: int, overlap: int) -> np.ndarray:
    # sin^2 ramp; mirrored ramps of neighbouring blocks sum to one
    ramp = np.sin(np.pi * (np.arange(overlap) + 0.5) / (2 * overlap)) ** 2
    w = np.ones(block)
    w[:overlap] = ramp
    w[-overlap:] = ramp[::-1]
    return w


def _starts(n: int, block: int, step: int) -> list[int]:
    starts = list(range(0, n - block + 1, step))
    if starts[-1] != n - block:
        starts.append(n - block)
    return starts


def root_filter(arr: np.ndarray, params: FftParams) -> np.ndarray:
    """Stitched root-filtered response of ``arr`` (same shape)."""
    bs, k = params.block_size, params.power_exponent
    step = bs - params.overlap
    w1 = _taper(bs, params.overlap)
    window = np.outer(w1, w1)
    acc = np.zeros(arr.shape)
    weight = np.zeros(arr.shape)
    for y in _starts(arr.shape[0], bs, step):
        for x in _starts(arr.shape[1], bs, step):
            spec = np.fft.fft2(arr[y:y + bs, x:x + bs])
            spec[0, 0] = 0.0
            spec *= np.abs(spec) ** k
            acc[y:y + bs, x:x + bs] += np.fft.ifft2(spec).real * window
            weight[y:y + bs, x:x + bs] += window
    return acc / weight


def fft_enhance(img: GrayImage, params: FftParams = FftParams()) -> BinaryMask:
    """Root-filter ``img`` block by block and return the ridge mask (True = ridge).

    Raises:
        ImageTooSmall: a dimension is smaller than ``block_size``.
    """
    arr = img.data
    if min(arr.shape) < params.block_size:
        raise ImageTooSmall(
            f"image {img.width}x{img.height} is smaller than one {params.block_size}px block")
    response = root_filter(arr, params)
    lo, hi = response.min(), response.max()
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        # no AC energy anywhere
        return BinaryMask(np.zeros(arr.shape, dtype=bool), Polarity.RIDGE)
    scaled = (response - lo) / (hi - lo)
    rule = params.binarize_threshold
    cut = threshold_otsu(scaled) if isinstance(rule, Otsu) else rule.value
    # filtering keeps phase, so dark ridges stay on the low side
    return BinaryMask(scaled < cut, Polarity.RIDGE)


def fft_classifier(params: FftParams = FftParams(),
                   shape: tuple[int, int] = (500, 500)) -> ClassifierSpec:
    return ClassifierSpec("fft", Polarity.RIDGE, FixedShape(*shape),
                          functools.partial(fft_enhance, params=params))
