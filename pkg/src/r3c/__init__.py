"""Recursive class connectivity refinement for binary segmentation."""

from .classifiers import (ClassifierSpec, Dilating, FftParams, FixedMask, GaborParams, Threshold,
                          fft_classifier, gabor_classifier, stub_classifier)
from .errors import DataError, R3CError
from .evaluation import (Connectivity, MetricsRow, SuiteCase, SweepReport, alpha_sweep,
                         count_components, overlap_metrics, select_alpha, skeleton_recall)
from .image import (BinaryMask, GrayImage, Polarity, invert_mask, load_image, load_mask,
                    resize_bilinear, save_image)
from .recursion import (IterationRecord, R3CConfig, R3CResult, R3CTrace, Termination,
                        blend_composite, diff_rate, regularize_for_blend, run_r3c, should_stop)
from .synth import Arch, Constant, DegradeParams, SynthParams, degrade, generate_ridge_pattern
from .thinning import zhang_suen_thin

__version__ = "0.1.0"

__all__ = [
    "ClassifierSpec", "Dilating", "FftParams", "FixedMask", "GaborParams", "Threshold",
    "fft_classifier", "gabor_classifier", "stub_classifier", "DataError", "R3CError",
    "Connectivity", "MetricsRow", "SuiteCase", "SweepReport", "alpha_sweep", "count_components",
    "overlap_metrics", "select_alpha", "skeleton_recall", "BinaryMask", "GrayImage", "Polarity",
    "invert_mask", "load_image", "load_mask", "resize_bilinear", "save_image",
    "IterationRecord", "R3CConfig", "R3CResult", "R3CTrace", "Termination", "blend_composite",
    "diff_rate", "regularize_for_blend", "run_r3c", "should_stop", "Arch", "Constant",
    "DegradeParams", "SynthParams", "degrade", "generate_ridge_pattern", "zhang_suen_thin",
]
