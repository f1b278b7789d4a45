from .base import (AnyShape, ClassifierSpec, FixedShape, InputPolicy, PreferredShape,
                   apply_input_policy)
from .fft import Fixed, FftParams, Otsu, fft_classifier, fft_enhance
from .gabor import (GaborParams, OrientationField, estimate_orientation_field,
                    gabor_classifier, gabor_enhance)
from .stub import Dilating, FixedMask, Threshold, stub_classifier

__all__ = [
    "AnyShape", "ClassifierSpec", "FixedShape", "InputPolicy", "PreferredShape",
    "apply_input_policy", "Fixed", "FftParams", "Otsu", "fft_classifier", "fft_enhance",
    "GaborParams", "OrientationField", "estimate_orientation_field", "gabor_classifier",
    "gabor_enhance", "Dilating", "FixedMask", "Threshold", "stub_classifier",
]
