import functools
import pickle

import numpy as np
import pytest

from oracles import angle_error_deg, block_truth_angles, iou
from r3c.classifiers import (AnyShape, ClassifierSpec, Dilating, Fixed, FftParams, FixedMask,
                             FixedShape, GaborParams, Otsu, PreferredShape, Threshold,
                             apply_input_policy, estimate_orientation_field, fft_classifier,
                             fft_enhance, gabor_classifier, gabor_enhance, stub_classifier)
from r3c.classifiers.gabor import (gabor_kernel, normalize_blocks, orientation_from_array,
                                   ridge_frequency_from_array)
from r3c.errors import DimensionMismatch, ImageTooSmall
from r3c.image import BinaryMask, GrayImage, Polarity
from r3c.synth import Arch, Constant, SynthParams, generate_ridge_pattern

PARAMS = GaborParams()


@functools.lru_cache(maxsize=None)
def pattern(theta=30.0, freq=0.1, size=256, arch=None, seed=0):
    mode = Arch(arch) if arch else Constant(theta)
    return generate_ridge_pattern(SynthParams(size, size, freq, mode, seed=seed))


def interior(a):
    return a[1:-1, 1:-1]


# --------------------------------------------------------------------------
# Input policy
# --------------------------------------------------------------------------

def test_gabor_policy_resizes_to_350():
    img = GrayImage(np.random.default_rng(0).random((512, 512)))
    assert apply_input_policy(img, gabor_classifier()).shape == (350, 350)


def test_fft_policy_identity_at_500():
    img = GrayImage(np.random.default_rng(0).random((500, 500)))
    assert apply_input_policy(img, fft_classifier()) is img


def test_stub_policy_passes_through():
    img = GrayImage(np.zeros((13, 7)))
    assert apply_input_policy(img, stub_classifier(Threshold())) is img


def test_policy_types():
    assert isinstance(gabor_classifier().input_policy, PreferredShape)
    assert isinstance(gabor_classifier(preferred_shape=None).input_policy, AnyShape)
    assert fft_classifier().input_policy == FixedShape(500, 500)


def test_spec_checks_output_shape_and_polarity():
    bad_shape = ClassifierSpec("bad", Polarity.RIDGE, AnyShape(),
                               lambda img: BinaryMask(np.zeros((2, 2), bool)))
    with pytest.raises(DimensionMismatch):
        bad_shape(GrayImage(np.zeros((3, 3))))
    bad_tag = ClassifierSpec("bad", Polarity.RIDGE, AnyShape(),
                             lambda img: BinaryMask(np.zeros(img.shape, bool), Polarity.VALLEY))
    with pytest.raises(ValueError):
        bad_tag(GrayImage(np.zeros((3, 3))))


def test_specs_pickle():
    for spec in (gabor_classifier(), fft_classifier(), stub_classifier(Dilating(2))):
        clone = pickle.loads(pickle.dumps(spec))
        assert clone.name == spec.name and clone.input_policy == spec.input_policy


def test_param_validation():
    with pytest.raises(ValueError):
        GaborParams(block_size=4)
    with pytest.raises(ValueError):
        GaborParams(freq_min=0.3, freq_max=0.2)
    with pytest.raises(ValueError):
        FftParams(overlap=32)
    with pytest.raises(ValueError):
        FftParams(power_exponent=0)


# --------------------------------------------------------------------------
# Orientation field
# --------------------------------------------------------------------------

@pytest.mark.parametrize("theta", [0.0, 30.0, 75.0, 135.0])
def test_orientation_of_parallel_ridges(theta):
    field = estimate_orientation_field(pattern(theta).image)
    err = angle_error_deg(interior(field.angles), np.radians(theta))
    assert err.max() <= 5.0
    assert interior(field.coherence).min() > 0.9


def test_orientation_of_arch_against_block_truth():
    res = pattern(arch=0.01, freq=0.1)
    field = estimate_orientation_field(res.image)
    truth = block_truth_angles(res.orientation, PARAMS.block_size)
    assert angle_error_deg(interior(field.angles), interior(truth)).mean() <= 5.0


def test_orientation_rotates_with_the_image():
    img = pattern(30.0).image
    rotated = GrayImage(np.rot90(img.data))
    a = estimate_orientation_field(img).angles
    b = estimate_orientation_field(rotated).angles
    # block grids line up because 256 is a multiple of the block size
    err = angle_error_deg(interior(np.rot90(a)) + np.pi / 2, interior(b))
    assert err.max() <= 5.0


def test_constant_image_has_zero_coherence():
    field = estimate_orientation_field(GrayImage(np.full((64, 80), 0.4)))
    assert field.angles.shape == (4, 5)
    assert np.all(field.coherence == 0)
    assert np.all((field.angles >= 0) & (field.angles < np.pi))


def test_too_small():
    with pytest.raises(ImageTooSmall):
        estimate_orientation_field(GrayImage(np.zeros((10, 40))))
    with pytest.raises(ImageTooSmall):
        gabor_enhance(GrayImage(np.zeros((40, 10))))
    with pytest.raises(ImageTooSmall):
        fft_enhance(GrayImage(np.zeros((20, 64))))


# --------------------------------------------------------------------------
# Frequency and filtering
# --------------------------------------------------------------------------

@pytest.mark.parametrize("freq", [1 / 8, 1 / 10, 1 / 12])
@pytest.mark.parametrize("mode", [{"theta": 30.0}, {"theta": 100.0}, {"arch": 0.008}])
def test_ridge_frequency_within_ten_percent(freq, mode):
    img = pattern(freq=freq, size=350, **mode).image
    norm, fg = normalize_blocks(img.data, PARAMS)
    field = orientation_from_array(norm, PARAMS)
    est, _ = ridge_frequency_from_array(norm, field, fg, PARAMS)
    close = np.abs(est[fg] - freq) <= 0.1 * freq
    assert close.mean() >= 0.9


def test_gabor_kernel_is_zero_mean_and_even():
    k = gabor_kernel(0.7, 0.1, 4.0, 4.0)
    assert abs(k.sum()) < 1e-9
    np.testing.assert_allclose(k, k[::-1, ::-1], atol=1e-12)


@pytest.mark.parametrize("mode", [{"theta": 30.0}, {"theta": 100.0}, {"arch": 0.01}])
def test_gabor_segments_clean_ridges(mode):
    res = pattern(size=350, **mode)
    mask = gabor_classifier()(res.image)
    assert mask.foreground is Polarity.RIDGE
    assert iou(mask.data, res.ground_truth.data) >= 0.7


@pytest.mark.parametrize("mode", [{"theta": 30.0}, {"arch": 0.01}])
def test_fft_segments_clean_ridges(mode):
    res = pattern(size=500, **mode)
    mask = fft_classifier()(res.image)
    assert iou(mask.data, res.ground_truth.data) >= 0.6


@pytest.mark.parametrize("enhance", [gabor_enhance, fft_enhance])
def test_constant_image_gives_empty_mask(enhance):
    assert enhance(GrayImage(np.full((128, 128), 0.6))).count() == 0


@pytest.mark.parametrize("spec", [gabor_classifier(), fft_classifier()])
def test_deterministic(spec):
    img = pattern(theta=60.0, size=200, seed=4).image
    assert spec(img) == spec(img)


def stripe_period(row: np.ndarray) -> float:
    rises = np.nonzero(~row[:-1] & row[1:])[0]
    return float(np.diff(rises).mean())


@pytest.mark.parametrize("period", [6.0, 9.0, 12.5])
def test_fft_sinusoid_period(period):
    x = np.arange(256)
    arr = np.tile(0.5 + 0.4 * np.sin(2 * np.pi * x / period), (256, 1))
    mask = fft_enhance(GrayImage(arr))
    for r in (40, 128, 200):
        assert abs(stripe_period(mask.data[r]) - period) <= 1.0


def test_fft_fixed_threshold_rule():
    img = pattern(size=128).image
    a = fft_enhance(img, FftParams(binarize_threshold=Fixed(0.5)))
    b = fft_enhance(img, FftParams(binarize_threshold=Otsu()))
    assert abs(a.count() - b.count()) < 0.1 * img.data.size


# --------------------------------------------------------------------------
# Stubs
# --------------------------------------------------------------------------

def test_fixed_mask_stub():
    m = BinaryMask(np.eye(5, dtype=bool))
    spec = stub_classifier(FixedMask(m))
    assert spec(GrayImage(np.random.default_rng(1).random((5, 5)))) == m
    with pytest.raises(DimensionMismatch):
        spec(GrayImage(np.zeros((4, 5))))


def test_fixed_mask_stub_keeps_valley_tag():
    m = BinaryMask(np.eye(3, dtype=bool), Polarity.VALLEY)
    spec = stub_classifier(FixedMask(m))
    assert spec.output_polarity is Polarity.VALLEY
    assert spec(GrayImage(np.zeros((3, 3)))).foreground is Polarity.VALLEY


def test_threshold_stub():
    out = stub_classifier(Threshold(0.5))(GrayImage([[0.2, 0.8]]))
    np.testing.assert_array_equal(out.data, [[True, False]])
    out = stub_classifier(Threshold(0.5, above=True))(GrayImage([[0.2, 0.8]]))
    np.testing.assert_array_equal(out.data, [[False, True]])


def test_dilating_stub_grows_monotonically():
    arr = np.ones((9, 9))
    arr[4, 4] = 0.0
    spec = stub_classifier(Dilating(1))
    once = spec(GrayImage(arr))
    assert once.count() == 9
    twice = spec(GrayImage(np.where(once.data, 0.0, arr)))
    assert twice.count() == 25 and not (once.data & ~twice.data).any()
