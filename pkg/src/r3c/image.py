"""Raster types, 8-bit PGM/PNG I/O and the resize/inversion primitives.

Images are stored as 2-D numpy arrays indexed ``[row, col]`` (row-major,
``height x width``). Both raster types are immutable: their arrays are
flagged read-only at construction.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DimensionMismatch,
    EmptyImage,
    IoFailure,
    MalformedHeader,
    UnsupportedColor,
    UnsupportedDepth,
)


class Polarity(str, enum.Enum):
    """Semantic of the foreground (True) class of a mask."""

    RIDGE = "ridge"
    VALLEY = "valley"

    def flipped(self) -> "Polarity":
        return Polarity.VALLEY if self is Polarity.RIDGE else Polarity.RIDGE


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Continuous-intensity raster with values clamped to [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyImage(f"image must be a non-empty 2-D raster, got shape {arr.shape}")
        if np.isnan(arr).any():
            raise ValueError("image contains NaN")
        object.__setattr__(self, "data", _frozen(np.clip(arr, 0.0, 1.0)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Two-class raster. ``True`` pixels belong to the ``foreground`` class."""

    data: np.ndarray
    foreground: Polarity = Polarity.RIDGE

    def __post_init__(self):
        arr = np.array(self.data, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyImage(f"mask must be a non-empty 2-D raster, got shape {arr.shape}")
        object.__setattr__(self, "data", _frozen(arr))
        object.__setattr__(self, "foreground", Polarity(self.foreground))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def count(self) -> int:
        """Number of foreground pixels."""
        return int(np.count_nonzero(self.data))

    def ridges(self) -> np.ndarray:
        """Boolean array that is True on ridge pixels, whatever the tag."""
        return self.data if self.foreground is Polarity.RIDGE else ~self.data

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.foreground is other.foreground and np.array_equal(self.data, other.data)

    __hash__ = None


def check_same_shape(a, b) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


# --------------------------------------------------------------------------
# File I/O
# --------------------------------------------------------------------------

def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lstrip(".")
    fmt = fmt.upper()
    if fmt not in ("PGM", "PNG"):
        raise ValueError(f"unsupported image format {fmt!r} (expected PGM or PNG)")
    return fmt


_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*")


def _read_pgm(raw: bytes, path: Path) -> np.ndarray:
    magic = raw[:2]
    if magic in (b"P6", b"P3"):
        raise UnsupportedColor(f"{path}: color PNM ({magic.decode()}) is not supported")
    if magic != b"P5":
        raise MalformedHeader(f"{path}: expected binary PGM magic 'P5', got {magic!r}")

    pos = 2
    fields = []
    for _ in range(3):
        m = _PNM_TOKEN.match(raw, pos)
        pos = m.end()
        start = pos
        while pos < len(raw) and raw[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise MalformedHeader(f"{path}: truncated or non-numeric PGM header")
        fields.append(int(raw[start:pos]))
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise MalformedHeader(f"{path}: missing whitespace after maxval")
    pos += 1

    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeader(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedDepth(f"{path}: maxval {maxval} is not 8-bit (255)")
    payload = raw[pos:pos + width * height]
    if len(payload) != width * height:
        raise MalformedHeader(
            f"{path}: expected {width * height} pixel bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def _read_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise MalformedHeader(f"{path}: not a PNG file")
            mode = im.mode
            if mode in ("RGB", "RGBA", "P", "LA", "PA", "CMYK", "YCbCr"):
                raise UnsupportedColor(f"{path}: color PNG (mode {mode}) is not supported")
            if mode != "L":
                raise UnsupportedDepth(f"{path}: PNG mode {mode} is not 8-bit grayscale")
            return np.asarray(im, dtype=np.uint8).copy()
    except (UnidentifiedImageError, SyntaxError) as exc:
        raise MalformedHeader(f"{path}: unreadable PNG ({exc})") from exc


def read_bytes(path, fmt: str | None = None) -> np.ndarray:
    """Read an 8-bit grayscale file and return its raw ``uint8`` pixels."""
    path = Path(path)
    fmt = _format_for(path, fmt)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    if fmt == "PGM":
        return _read_pgm(path.read_bytes(), path)
    return _read_png(path)


def load_image(path, fmt: str | None = None) -> GrayImage:
    """Load an 8-bit PGM (P5) or PNG file, mapping 0..255 linearly onto [0, 1].

    The format defaults to the file extension.

    Raises:
        FileNotFoundError: the path does not exist.
        MalformedHeader, UnsupportedDepth, UnsupportedColor: rejected content.
    """
    return GrayImage(read_bytes(path, fmt) / 255.0)


def load_mask(path, fmt: str | None = None, inverted: bool = False) -> BinaryMask:
    """Load a mask written by :func:`save_image`.

    Dark pixels are ridges (``inverted=True`` when ridges were written white).
    """
    pixels = read_bytes(path, fmt)
    ridge = pixels >= 128 if inverted else pixels < 128
    return BinaryMask(ridge, Polarity.RIDGE)


def to_bytes(img: GrayImage | BinaryMask, invert: bool = False) -> np.ndarray:
    """Quantize a raster to ``uint8`` exactly as :func:`save_image` writes it."""
    if isinstance(img, BinaryMask):
        # ridge pixels render dark, like a raw scan
        bright = ~img.ridges()
        if invert:
            bright = ~bright
        return np.where(bright, 255, 0).astype(np.uint8)
    # round half up: round(0.5 * 255) must give 128, not numpy's banker's 128/127 mix
    out = np.floor(img.data * 255.0 + 0.5).astype(np.uint8)
    return 255 - out if invert else out


def save_image(img: GrayImage | BinaryMask, path, fmt: str | None = None,
               invert: bool = False) -> None:
    """Write ``img`` as 8-bit PGM (P5, no comments) or 8-bit grayscale PNG.

    Intensities are quantized by ``round(v * 255)``. Masks are written 0/255
    with ridge pixels dark unless ``invert`` is set.
    """
    path = Path(path)
    fmt = _format_for(path, fmt)
    pixels = to_bytes(img, invert)
    h, w = pixels.shape
    try:
        if fmt == "PGM":
            with open(path, "wb") as fh:
                fh.write(b"P5\n%d %d\n255\n" % (w, h))
                fh.write(pixels.tobytes())
        else:
            Image.fromarray(pixels, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# Geometry / polarity
# --------------------------------------------------------------------------

def _axis_weights(n_in: int, n_out: int):
    # half-pixel centers: src = (dst + 0.5) * n_in / n_out - 0.5
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def _resize_array(arr: np.ndarray, new_height: int, new_width: int) -> np.ndarray:
    h, w = arr.shape
    lo, hi, t = _axis_weights(h, new_height)
    rows = arr[lo, :] * (1.0 - t)[:, None] + arr[hi, :] * t[:, None]
    lo, hi, t = _axis_weights(w, new_width)
    return rows[:, lo] * (1.0 - t)[None, :] + rows[:, hi] * t[None, :]


def resize_bilinear(img: GrayImage, new_width: int, new_height: int) -> GrayImage:
    """Bilinear resize using the half-pixel-center convention."""
    if new_width < 1 or new_height < 1:
        raise ValueError("target dimensions must be >= 1")
    if (new_height, new_width) == img.shape:
        return img
    return GrayImage(_resize_array(img.data, new_height, new_width))


def resize_mask(mask: BinaryMask, new_width: int, new_height: int) -> BinaryMask:
    """Resize a mask by bilinear interpolation of its 0/1 field, cut at 0.5."""
    if (new_height, new_width) == mask.shape:
        return mask
    field = _resize_array(mask.data.astype(np.float64), new_height, new_width)
    return BinaryMask(field >= 0.5, mask.foreground)


def invert_mask(mask: BinaryMask) -> BinaryMask:
    """Toggle every pixel and the foreground tag."""
    return BinaryMask(~mask.data, mask.foreground.flipped())


def as_ridge_mask(mask: BinaryMask) -> BinaryMask:
    return mask if mask.foreground is Polarity.RIDGE else invert_mask(mask)
