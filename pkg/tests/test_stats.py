import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sodbench.maps import BinaryMask
from sodbench.stats import EmptyMaskError, component_stats, dataset_summary, distribution, mask_stats


def square(h, w, top, left, side):
    m = np.zeros((h, w), bool)
    m[top:top + side, left:left + side] = True
    return BinaryMask(m)


def test_centered_object_has_zero_r_o():
    s = mask_stats(square(11, 11, 4, 4, 3))
    assert s.r_o == 0.0
    assert s.components == 1


def test_full_frame():
    s = mask_stats(BinaryMask(np.ones((6, 9), bool)))
    assert s.size == 1.0
    assert s.r_m == 1.0
    assert s.r_o == 0.0


def test_single_corner_pixel_closed_form():
    m = np.zeros((10, 10), bool)
    m[0, 0] = True
    s = mask_stats(BinaryMask(m))
    expected = math.hypot(4.5, 4.5) / math.hypot(4.5, 4.5)
    assert s.r_o == pytest.approx(expected) and s.r_m == pytest.approx(expected)
    assert s.size == 0.01


def test_off_center_pixel_closed_form():
    m = np.zeros((10, 20), bool)
    m[3, 15] = True
    s = mask_stats(BinaryMask(m))
    assert s.r_o == pytest.approx(math.hypot(3 - 4.5, 15 - 9.5) / math.hypot(4.5, 9.5))


def test_empty_mask_flagged():
    with pytest.raises(EmptyMaskError):
        mask_stats(BinaryMask(np.zeros((3, 3), bool)))


def test_translation_toward_center_decreases_r_o():
    values = [mask_stats(square(40, 40, off, off, 6)).r_o for off in range(0, 18)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_components_and_union_centroid():
    m = np.zeros((10, 10), bool)
    m[0:2, 0:2] = True
    m[8:10, 8:10] = True
    s = mask_stats(BinaryMask(m))
    assert s.components == 2
    assert s.r_o == pytest.approx(0.0)  # union centroid is the image center
    comps = component_stats(BinaryMask(m))
    assert len(comps) == 2 and all(c.size == 0.04 for c in comps)


@given(st.integers(1, 12), st.integers(1, 12), st.data())
def test_stats_in_unit_range(h, w, data):
    bits = np.array(data.draw(st.lists(st.booleans(), min_size=h * w, max_size=h * w))).reshape(h, w)
    if not bits.any():
        bits[0, 0] = True
    s = mask_stats(BinaryMask(bits))
    for v in (s.r_o, s.r_m, s.size):
        assert 0.0 <= v <= 1.0
    assert s.r_m >= s.r_o - 1e-12  # centroid is a convex combination of pixels


def test_distribution_examples():
    np.testing.assert_array_equal(distribution([0.37], 5), [0, 1, 0, 0, 0])
    np.testing.assert_array_equal(distribution([0.1, 0.9], 2), [0.5, 0.5])
    d = distribution([1.0, 0.0], 4)
    assert d[-1] == 0.5 and d[0] == 0.5
    with pytest.raises(ValueError):
        distribution([], 3)
    with pytest.raises(ValueError):
        distribution([0.5], 0)


def test_distribution_uniform_samples():
    d = distribution(np.random.default_rng(11).random(1000), 10)
    assert d.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.abs(d - 0.1) <= 0.04)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(1, 20), st.randoms())
def test_distribution_permutation_invariant(values, bins, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    d = distribution(values, bins)
    np.testing.assert_array_equal(d, distribution(shuffled, bins))
    assert d.sum() == pytest.approx(1.0, abs=1e-9)


def test_dataset_summary():
    one = square(4, 4, 0, 0, 2)  # size 0.25
    s = dataset_summary([one])
    assert s.size.mean == s.size.min == s.size.max == 0.25

    a = np.zeros((10, 10), bool)
    a[:1, :] = True  # 0.1
    b = np.zeros((10, 10), bool)
    b[:3, :] = True  # 0.3
    s = dataset_summary([BinaryMask(a), BinaryMask(b), BinaryMask(np.zeros((10, 10), bool))])
    assert s.size.mean == pytest.approx(0.2)
    assert s.count == 2 and s.empty == 1
    assert set(s.to_dict()) == {"count", "empty", "size", "r_o", "r_m"}
    with pytest.raises(ValueError):
        dataset_summary([])
