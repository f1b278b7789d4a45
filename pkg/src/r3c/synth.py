"""Ground-truthed synthetic ridge patterns and controlled degradation.

Patterns come from a phase field: ``I = 0.5 - (contrast / 2) cos(2 pi f phi)``
where ``phi`` is the distance across the ridges. Ridges (cosine >= 0) are dark
and valleys bright, like a raw contact scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy import ndimage as ndi

from .errors import ImageTooSmall
from .image import BinaryMask, GrayImage, Polarity

MIN_SIZE = 64
# intensity of skin that never touched the sensor
BACKGROUND = 1.0


@dataclass(frozen=True)
class Constant:
    """Straight parallel ridges at ``theta_deg`` (0 = horizontal stripes)."""

    theta_deg: float = 0.0


@dataclass(frozen=True)
class Arch:
    """Concentric circular arches of the given curvature (1 / radius, px^-1).

    The circles are centred below the image so the ridges bow upwards.
    The spacing across ridges is exact everywhere.
    """

    curvature: float = 0.01

    def __post_init__(self):
        if not 0 < self.curvature <= 0.1:
            raise ValueError("arch curvature must be in (0, 0.1]")


OrientationMode = Union[Constant, Arch]


@dataclass(frozen=True)
class SynthParams:
    width: int = 256
    height: int = 256
    ridge_frequency: float = 0.1
    orientation_mode: OrientationMode = field(default_factory=Constant)
    contrast: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ridge_frequency < 0.5:
            raise ValueError("ridge_frequency must be in (0, 0.5)")
        if not 0 <= self.contrast <= 1:
            raise ValueError("contrast must be in [0, 1]")


@dataclass(frozen=True)
class DegradeParams:
    gap_count: int = 0
    gap_radius: float = 0.0
    blur_sigma: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    # 1.0 erases a gap completely; smaller values only fade it
    gap_strength: float = 1.0
    gap_level: float = BACKGROUND

    def __post_init__(self):
        for name in ("gap_count", "gap_radius", "blur_sigma", "noise_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= self.gap_strength <= 1:
            raise ValueError("gap_strength must be in [0, 1]")
        if not 0 <= self.gap_level <= 1:
            raise ValueError("gap_level must be in [0, 1]")


class SynthResult(NamedTuple):
    image: GrayImage
    ground_truth: BinaryMask
    orientation: np.ndarray  # per-pixel ridge angle in [0, pi)


def phase_field(params: SynthParams) -> tuple[np.ndarray, np.ndarray]:
    """Return the across-ridge distance and the ridge angle at every pixel."""
    h, w = params.height, params.width
    y, x = np.mgrid[0:h, 0:w].astype(float)
    mode = params.orientation_mode
    if isinstance(mode, Constant):
        theta = math.radians(mode.theta_deg)
        phi = -x * math.sin(theta) + y * math.cos(theta)
        angles = np.full((h, w), theta % math.pi)
    else:
        radius = 1.0 / mode.curvature
        dx = x - (w - 1) / 2.0
        dy = y - ((h - 1) / 2.0 + radius)
        rho = np.hypot(dx, dy)
        phi = radius - rho
        angles = np.mod(np.arctan2(dx, -dy), np.pi)
    return phi, angles


def generate_ridge_pattern(params: SynthParams) -> SynthResult:
    """Render a ridge pattern with its ridge mask and orientation ground truth.

    Raises:
        ImageTooSmall: either dimension is below 64 px.
    """
    if params.width < MIN_SIZE or params.height < MIN_SIZE:
        raise ImageTooSmall(f"synthetic patterns need at least {MIN_SIZE}x{MIN_SIZE} px")
    rng = np.random.default_rng(params.seed)
    offset = rng.random()  # fraction of a period
    phi, angles = phase_field(params)
    wave = np.cos(2.0 * math.pi * (params.ridge_frequency * phi + offset))
    image = GrayImage(0.5 - 0.5 * params.contrast * wave)
    return SynthResult(image, BinaryMask(wave >= 0, Polarity.RIDGE), angles)


def gap_centres(shape, params: DegradeParams, rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    return np.column_stack([rng.integers(0, h, params.gap_count),
                            rng.integers(0, w, params.gap_count)])


def degrade(img: GrayImage, params: DegradeParams) -> GrayImage:
    """Punch gaps, blur, then add noise. Deterministic for a given seed.

    Gaps are disks of ``gap_radius`` pushed towards ``gap_level`` (the
    no-contact background by default) by the fraction ``gap_strength``.
    """
    rng = np.random.default_rng(params.seed)
    arr = img.data.copy()
    if params.gap_count and params.gap_radius > 0:
        y, x = np.mgrid[0:arr.shape[0], 0:arr.shape[1]]
        hole = np.zeros(arr.shape, dtype=bool)
        for cy, cx in gap_centres(arr.shape, params, rng):
            hole |= (y - cy) ** 2 + (x - cx) ** 2 <= params.gap_radius ** 2
        arr[hole] += params.gap_strength * (params.gap_level - arr[hole])
    if params.blur_sigma > 0:
        arr = ndi.gaussian_filter(arr, params.blur_sigma, mode="reflect")
    if params.noise_sigma > 0:
        arr = arr + rng.normal(0.0, params.noise_sigma, arr.shape)
    return GrayImage(np.clip(arr, 0.0, 1.0))
