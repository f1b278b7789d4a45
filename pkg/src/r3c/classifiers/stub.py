"""Deterministic stand-in classifiers for exercising the recursion engine."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import ndimage as ndi

from ..errors import DimensionMismatch
from ..image import BinaryMask, GrayImage, Polarity
from .base import AnyShape, ClassifierSpec


@dataclass(frozen=True)
class FixedMask:
    """Always return ``mask``, whatever the input."""

    mask: BinaryMask


@dataclass(frozen=True)
class Threshold:
    """Ridge = pixels darker than ``threshold`` (brighter when ``above``)."""

    threshold: float = 0.5
    above: bool = False


@dataclass(frozen=True)
class Dilating:
    """The :class:`Threshold` result dilated by a square of Chebyshev ``radius``.

    With ``above=True`` the bright pixels are selected, so whatever the
    recursion brightens in the composite joins the next prediction: this is
    the stub that grows from one iteration to the next.
    """

    radius: int = 1
    threshold: float = 0.5
    above: bool = False


StubBehavior = Union[FixedMask, Threshold, Dilating]


def _threshold(arr: np.ndarray, threshold: float, above: bool) -> np.ndarray:
    return arr >= threshold if above else arr < threshold


def _fixed(img: GrayImage, mask: BinaryMask) -> BinaryMask:
    if img.shape != mask.shape:
        raise DimensionMismatch(f"fixed mask is {mask.shape}, input is {img.shape}")
    return mask


def _thresholded(img: GrayImage, threshold: float, above: bool) -> BinaryMask:
    return BinaryMask(_threshold(img.data, threshold, above), Polarity.RIDGE)


def _dilated(img: GrayImage, radius: int, threshold: float, above: bool) -> BinaryMask:
    seed = _threshold(img.data, threshold, above)
    if radius > 0:
        seed = ndi.binary_dilation(seed, structure=np.ones((2 * radius + 1,) * 2, dtype=bool))
    return BinaryMask(seed, Polarity.RIDGE)


def stub_classifier(behavior: StubBehavior) -> ClassifierSpec:
    if isinstance(behavior, FixedMask):
        return ClassifierSpec("stub-fixed", behavior.mask.foreground, AnyShape(),
                              functools.partial(_fixed, mask=behavior.mask))
    if isinstance(behavior, Threshold):
        return ClassifierSpec("stub-threshold", Polarity.RIDGE, AnyShape(),
                              functools.partial(_thresholded, threshold=behavior.threshold,
                                                above=behavior.above))
    if isinstance(behavior, Dilating):
        if behavior.radius < 0:
            raise ValueError("radius must be >= 0")
        return ClassifierSpec("stub-dilating", Polarity.RIDGE, AnyShape(),
                              functools.partial(_dilated, radius=behavior.radius,
                                                threshold=behavior.threshold,
                                                above=behavior.above))
    raise TypeError(f"unknown stub behaviour {behavior!r}")
