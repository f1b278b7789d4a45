"""The enhancement contract ``f(M) -> C`` shared by every classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from ..errors import DimensionMismatch
from ..image import BinaryMask, GrayImage, Polarity, resize_bilinear


@dataclass(frozen=True)
class AnyShape:
    pass


@dataclass(frozen=True)
class FixedShape:
    """The classifier only accepts ``width x height`` inputs."""

    width: int
    height: int


@dataclass(frozen=True)
class PreferredShape:
    """The classifier accepts anything but works best at ``width x height``."""

    width: int
    height: int


InputPolicy = Union[AnyShape, FixedShape, PreferredShape]


@dataclass(frozen=True)
class ClassifierSpec:
    """A named enhancement function with its declared output semantics.

    ``enhance`` must be a pure, picklable callable (a module-level function or
    a ``functools.partial`` of one) so specs can cross process boundaries.
    ``output_polarity`` names the class that ``enhance`` marks True.
    """

    name: str
    output_polarity: Polarity
    input_policy: InputPolicy
    enhance: Callable[[GrayImage], BinaryMask]

    def classify(self, img: GrayImage) -> BinaryMask:
        """Run ``enhance`` on an already policy-conformed image."""
        out = self.enhance(img)
        if out.shape != img.shape:
            raise DimensionMismatch(
                f"classifier {self.name!r} returned {out.shape} for input {img.shape}")
        if out.foreground is not self.output_polarity:
            raise ValueError(
                f"classifier {self.name!r} declared {self.output_polarity.value} "
                f"output but produced {out.foreground.value}")
        return out

    def __call__(self, img: GrayImage) -> BinaryMask:
        return self.classify(apply_input_policy(img, self))


def apply_input_policy(img: GrayImage, spec: ClassifierSpec) -> GrayImage:
    """Resize ``img`` to the shape the classifier's policy asks for."""
    policy = spec.input_policy
    if isinstance(policy, (FixedShape, PreferredShape)):
        return resize_bilinear(img, policy.width, policy.height)
    return img
