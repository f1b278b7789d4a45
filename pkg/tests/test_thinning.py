import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from r3c.evaluation import count_components
from r3c.image import BinaryMask, Polarity
from r3c.thinning import thin_array, zhang_suen_thin


# --------------------------------------------------------------------------
# Independent reference: the published rules, pixel by pixel in plain Python.
# --------------------------------------------------------------------------

def _px(img, r, c):
    h, w = len(img), len(img[0])
    return 1 if 0 <= r < h and 0 <= c < w and img[r][c] else 0


def _ring(img, r, c):
    # p2..p9 clockwise from north
    offsets = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]
    return [_px(img, r + dr, c + dc) for dr, dc in offsets]


def _components(img):
    h, w = len(img), len(img[0])
    seen, comps = set(), []
    for r in range(h):
        for c in range(w):
            if img[r][c] and (r, c) not in seen:
                stack, comp = [(r, c)], []
                seen.add((r, c))
                while stack:
                    y, x = stack.pop()
                    comp.append((y, x))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            q = (y + dy, x + dx)
                            if q not in seen and _px(img, *q):
                                seen.add(q)
                                stack.append(q)
                comps.append(comp)
    return comps


def reference_thin(arr, guard=False):
    img = [[bool(v) for v in row] for row in np.asarray(arr)]
    h, w = len(img), len(img[0])
    while True:
        changed = False
        for step in (0, 1):
            flagged = set()
            for r in range(h):
                for c in range(w):
                    if not img[r][c]:
                        continue
                    p2, p3, p4, p5, p6, p7, p8, p9 = nb = _ring(img, r, c)
                    b = sum(nb)
                    seq = nb + [p2]
                    a = sum(1 for k in range(8) if seq[k] == 0 and seq[k + 1] == 1)
                    if not (2 <= b <= 6 and a == 1):
                        continue
                    if step == 0 and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0:
                        flagged.add((r, c))
                    if step == 1 and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0:
                        flagged.add((r, c))
            if guard:
                for comp in _components(img):
                    if all(q in flagged for q in comp):
                        flagged.discard(min(comp))
            for r, c in flagged:
                img[r][c] = False
            changed |= bool(flagged)
        if not changed:
            return np.array(img, dtype=bool)


def random_blobs(rng, shape=(40, 40), count=None):
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    out = np.zeros(shape, dtype=bool)
    for _ in range(count or rng.integers(1, 6)):
        cy, cx = rng.uniform(-3, h + 3), rng.uniform(-3, w + 3)
        ry, rx = rng.uniform(1, 9, size=2)
        t = rng.uniform(0, np.pi)
        dy, dx = y - cy, x - cx
        u = dx * np.cos(t) + dy * np.sin(t)
        v = -dx * np.sin(t) + dy * np.cos(t)
        out |= (u / rx) ** 2 + (v / ry) ** 2 <= 1
    return out


BLOBS = [random_blobs(np.random.default_rng(seed)) for seed in range(200)]


# --------------------------------------------------------------------------
# Examples
# --------------------------------------------------------------------------

def test_empty_mask():
    out = zhang_suen_thin(BinaryMask(np.zeros((6, 6), bool)))
    assert out.count() == 0


def test_horizontal_line_unchanged():
    arr = np.zeros((5, 14), bool)
    arr[2, 2:12] = True
    assert np.array_equal(zhang_suen_thin(BinaryMask(arr)).data, arr)


def test_solid_square_pinned():
    arr = np.zeros((7, 7), bool)
    arr[1:6, 1:6] = True
    expected = np.zeros((7, 7), bool)
    expected[3, 3] = True  # pinned from the reference implementation
    np.testing.assert_array_equal(reference_thin(arr), expected)
    np.testing.assert_array_equal(zhang_suen_thin(BinaryMask(arr)).data, expected)
    np.testing.assert_array_equal(thin_array(arr, preserve_components=False)[0], expected)


def test_square_at_border_uses_background_padding():
    arr = np.ones((5, 5), bool)
    np.testing.assert_array_equal(thin_array(arr, False)[0], reference_thin(arr))


def test_classic_rules_erase_two_by_two_square():
    arr = np.zeros((4, 4), bool)
    arr[1:3, 1:3] = True
    assert not reference_thin(arr).any()
    assert not thin_array(arr, preserve_components=False)[0].any()
    kept = zhang_suen_thin(BinaryMask(arr)).data
    assert kept.sum() == 1 and kept[1, 1]


def test_tag_preserved():
    m = BinaryMask(np.ones((4, 6), bool), Polarity.VALLEY)
    assert zhang_suen_thin(m).foreground is Polarity.VALLEY


# --------------------------------------------------------------------------
# Oracle agreement
# --------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(0, 200, 10))
def test_matches_reference_on_blobs(seed):
    arr = BLOBS[seed][:24, :24]
    np.testing.assert_array_equal(thin_array(arr, False)[0], reference_thin(arr))
    np.testing.assert_array_equal(thin_array(arr, True)[0], reference_thin(arr, guard=True))


@settings(max_examples=60, deadline=None)
@given(arr=arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_matches_reference_on_random_masks(arr):
    np.testing.assert_array_equal(thin_array(arr, False)[0], reference_thin(arr))
    np.testing.assert_array_equal(thin_array(arr, True)[0], reference_thin(arr, guard=True))


# --------------------------------------------------------------------------
# Properties over the blob suite
# --------------------------------------------------------------------------

def check_thinning_properties(arr):
    m = BinaryMask(arr)
    skel, passes = thin_array(arr)
    assert not (skel & ~arr).any(), "subset"
    assert np.array_equal(thin_array(skel)[0], skel), "idempotence"
    assert count_components(BinaryMask(skel)) == count_components(m), "components"
    assert passes <= m.count() + 1, "termination"


@pytest.mark.parametrize("seed", range(200))
def test_blob_properties(seed):
    check_thinning_properties(BLOBS[seed])


@settings(max_examples=100, deadline=None)
@given(arr=arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16))))
def test_properties_on_arbitrary_masks(arr):
    check_thinning_properties(arr)


def test_guard_only_acts_when_classic_rules_lose_a_component():
    changed = 0
    for arr in BLOBS:
        classic = thin_array(arr, False)[0]
        if count_components(BinaryMask(classic)) == count_components(BinaryMask(arr)):
            assert np.array_equal(classic, thin_array(arr)[0])
        else:
            changed += 1
    assert changed < len(BLOBS)
