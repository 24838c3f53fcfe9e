import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from sodbench.maps import (
    BinaryMask,
    MapError,
    SaliencyMap,
    binarize,
    load_map,
    load_mask,
    normalize,
    resize_to,
    save_map,
)

from conftest import write_png

unit_maps = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                   elements=st.floats(0.0, 1.0, allow_nan=False))


def test_map_rejects_out_of_range():
    with pytest.raises(MapError):
        SaliencyMap(np.array([[1.2]]))
    with pytest.raises(MapError):
        SaliencyMap(np.zeros((0, 3)))


def test_mask_rejects_non_binary():
    with pytest.raises(MapError):
        BinaryMask(np.array([[0, 2]]))


def test_maps_are_immutable():
    m = SaliencyMap(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_load_map_zero_and_saturation(tmp_path):
    assert np.all(load_map(write_png(tmp_path / "z.png", np.zeros((3, 4), np.uint8))).values == 0.0)
    assert np.all(load_map(write_png(tmp_path / "s.png", np.full((3, 4), 255, np.uint8))).values == 1.0)


def test_load_map_quotient(tmp_path):
    m = load_map(write_png(tmp_path / "a.png", np.full((2, 5), 128, np.uint8)))
    assert m.width == 5 and m.height == 2
    assert m.values[0, 0] == 128 / 255
    assert m.values[0, 0] == pytest.approx(0.50196, abs=1e-5)


def test_load_map_16bit(tmp_path):
    a = np.array([[0, 65535, 32768]], dtype=np.uint16)
    m = load_map(write_png(tmp_path / "d.png", a))
    np.testing.assert_array_equal(m.values, a / 65535.0)


def test_load_map_rgb_luma(tmp_path):
    rgb = np.zeros((1, 3, 3), np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (0, 255, 0)
    rgb[0, 2] = (10, 20, 30)
    m = load_map(write_png(tmp_path / "c.png", rgb))
    expected = np.array([0.299 * 255, 0.587 * 255, 0.299 * 10 + 0.587 * 20 + 0.114 * 30]) / 255
    np.testing.assert_allclose(m.values[0], expected, rtol=1e-12)


def test_load_map_errors(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(MapError):
        load_map(bad)
    with pytest.raises(MapError):
        load_map(tmp_path / "missing.png")
    p = tmp_path / "f.tif"
    Image.fromarray(np.zeros((2, 2), np.float32)).save(p)
    with pytest.raises(MapError):
        load_map(p)


def test_load_mask_midpoint(tmp_path):
    a = np.array([[0, 127, 128, 255]], dtype=np.uint8)
    mask = load_mask(write_png(tmp_path / "m.png", a))
    np.testing.assert_array_equal(mask.bits, [[False, False, True, True]])
    assert load_mask(write_png(tmp_path / "o.png", np.full((2, 2), 255, np.uint8))).bits.all()
    assert not load_mask(write_png(tmp_path / "z.png", np.zeros((2, 2), np.uint8))).bits.any()


def test_save_load_roundtrip_every_level(tmp_path):
    a = np.arange(256, dtype=np.uint8).reshape(16, 16)
    m = load_map(write_png(tmp_path / "in.png", a))
    save_map(m, tmp_path / "out.png")
    np.testing.assert_array_equal(np.asarray(Image.open(tmp_path / "out.png")), a)


def test_normalize_examples():
    np.testing.assert_array_equal(normalize(SaliencyMap(np.array([[0.2, 0.6]]))).values, [[0.0, 1.0]])
    np.testing.assert_array_equal(normalize(SaliencyMap(np.full((2, 2), 0.7))).values, np.zeros((2, 2)))
    m = SaliencyMap(np.array([[0.0, 1.0, 0.5]]))
    assert normalize(m) == m


@given(unit_maps)
def test_normalize_idempotent(v):
    once = normalize(SaliencyMap(v))
    assert normalize(once) == once


def test_resize_identity_and_constant():
    m = SaliencyMap(np.array([[0.1, 0.2], [0.3, 0.4]]))
    assert resize_to(m, 2, 2) == m
    c = SaliencyMap(np.full((3, 5), 0.3))
    for w, h in ((1, 1), (7, 2), (13, 11)):
        r = resize_to(c, w, h)
        assert r.shape == (h, w)
        assert np.all(r.values == 0.3)


def test_resize_row_hand_computed():
    # pixel-centre sampling: targets map to source x = -0.25, 0.25, 0.75, 1.25 (clamped)
    r = resize_to(SaliencyMap(np.array([[0.0, 1.0]])), 4, 1)
    np.testing.assert_allclose(r.values, [[0.0, 0.25, 0.75, 1.0]])
    assert np.all(np.diff(r.values[0]) >= 0)


@given(unit_maps, st.integers(1, 20), st.integers(1, 20))
def test_resize_stays_in_unit_range(v, w, h):
    r = resize_to(SaliencyMap(v), w, h)
    assert r.shape == (h, w)
    assert r.values.min() >= v.min() - 1e-12 and r.values.max() <= v.max() + 1e-12


@given(unit_maps)
def test_resize_same_size_bitwise(v):
    m = SaliencyMap(v)
    assert np.array_equal(resize_to(m, m.width, m.height).values, m.values)


def test_binarize_examples():
    m = SaliencyMap(np.array([[0.0, 0.5, 0.2]]))
    assert binarize(m, 0).bits.all()
    assert not binarize(SaliencyMap(np.full((2, 2), 0.5)), 255).bits.any()
    half = SaliencyMap(np.array([[0.5]]))
    assert binarize(half, 128).bits[0, 0]
    assert not binarize(half, 129).bits[0, 0]
    with pytest.raises(MapError):
        binarize(m, 256)


@settings(max_examples=50)
@given(unit_maps, st.integers(0, 255), st.integers(0, 255))
def test_binarize_monotone(v, a, b):
    lo, hi = min(a, b), max(a, b)
    m = SaliencyMap(v)
    assert not np.any(binarize(m, hi).bits & ~binarize(m, lo).bits)
