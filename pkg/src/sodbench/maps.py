"""Saliency map and mask containers, PNG decoding, resizing and binarization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

PathLike = Union[str, Path]

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class MapError(ValueError):
    """Raised when an image cannot be turned into a map or mask."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """Real-valued H x W map with every value in [0, 1], stored as float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise MapError(f"saliency map must be a non-empty 2-D array, got shape {v.shape}")
        if not np.all((v >= 0.0) & (v <= 1.0)):
            raise MapError("saliency map values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, SaliencyMap):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.shape, self.values.tobytes()))

    def to_uint8(self) -> np.ndarray:
        return scale255(self.values).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """H x W mask whose elements are exactly 0 or 1 (stored as bool)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise MapError(f"mask must be a non-empty 2-D array, got shape {b.shape}")
        if b.dtype != np.bool_:
            if not np.all((b == 0) | (b == 1)):
                raise MapError("mask elements must be 0 or 1")
            b = b.astype(np.bool_)
        object.__setattr__(self, "bits", _frozen(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.shape, self.bits.tobytes()))

    def complement(self) -> "BinaryMask":
        return BinaryMask(~self.bits)

    def as_map(self) -> SaliencyMap:
        return SaliencyMap(self.bits.astype(np.float64))


def scale255(values: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] reals to integer levels 0..255 with round-half-up."""
    return np.floor(np.asarray(values, dtype=np.float64) * 255.0 + 0.5).astype(np.int64)


def _decode(path: PathLike) -> tuple[np.ndarray, float]:
    """Return (gray levels as float64, full-scale value) for an image file."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode == "1":
                im = im.convert("L")
                mode = "L"
            arr = np.asarray(im)
    except (OSError, UnidentifiedImageError) as exc:
        raise MapError(f"cannot read image {path}: {exc}") from exc

    if arr.ndim < 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise MapError(f"zero-dimension image: {path}")

    if mode == "L":
        return arr.astype(np.float64), 255.0
    if mode == "LA":
        return arr[..., 0].astype(np.float64), 255.0
    if mode in ("RGB", "RGBA"):
        return arr[..., :3].astype(np.float64) @ _LUMA, 255.0
    if mode.startswith("I;16"):
        return arr.astype(np.float64), 65535.0
    if mode == "I":
        # newer Pillow may hand 16-bit PNGs back as 32-bit ints
        if arr.min() >= 0 and arr.max() <= 65535:
            return arr.astype(np.float64), 65535.0
    raise MapError(f"unsupported image mode {mode!r} in {path}")


def load_map(path: PathLike) -> SaliencyMap:
    """Read a grayscale (or RGB, collapsed to luma) image as a saliency map.

    8-bit pixels p become p / 255 exactly; 16-bit pixels are scaled by 1/65535.
    """
    levels, full = _decode(path)
    return SaliencyMap(np.clip(levels / full, 0.0, 1.0))


def load_mask(path: PathLike) -> BinaryMask:
    """Read a ground-truth image; pixels at or above the midpoint (128 of 255) are foreground."""
    levels, full = _decode(path)
    mid = 128.0 if full == 255.0 else 32768.0
    return BinaryMask(levels >= mid)


def save_map(m: SaliencyMap | BinaryMask, path: PathLike) -> None:
    """Write an 8-bit grayscale PNG (masks as 0/255)."""
    if isinstance(m, BinaryMask):
        data = m.bits.astype(np.uint8) * 255
    else:
        data = m.to_uint8()
    Image.fromarray(data).save(path, format="PNG")


def normalize(m: SaliencyMap) -> SaliencyMap:
    """Stretch values affinely onto [0, 1]; a constant map becomes all zeros."""
    v = m.values
    lo, hi = v.min(), v.max()
    if hi == lo:
        return SaliencyMap(np.zeros_like(v))
    if lo == 0.0 and hi == 1.0:
        return m
    return SaliencyMap(np.clip((v - lo) / (hi - lo), 0.0, 1.0))


def _lerp_axis(v: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = v.shape[axis]
    if n_in == n_out:
        return v
    # pixel-centre alignment, source coordinate clamped to the valid range
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    a = np.take(v, i0, axis=axis)
    b = np.take(v, i1, axis=axis)
    shape = [1, 1]
    shape[axis] = n_out
    # a + f*(b-a) keeps constant regions exactly constant
    return a + frac.reshape(shape) * (b - a)


def resize_to(m: SaliencyMap, w: int, h: int) -> SaliencyMap:
    """Bilinear resize to width ``w`` and height ``h``."""
    if w < 1 or h < 1:
        raise MapError(f"target size must be positive, got {w}x{h}")
    if (h, w) == m.shape:
        return m
    v = _lerp_axis(m.values, h, axis=0)
    v = _lerp_axis(v, w, axis=1)
    return SaliencyMap(np.clip(v, 0.0, 1.0))


def binarize(m: SaliencyMap, threshold: int) -> BinaryMask:
    """Foreground where round(v * 255) >= threshold; threshold 0 gives the all-ones mask."""
    if not 0 <= threshold <= 255:
        raise MapError(f"threshold must be in [0, 255], got {threshold}")
    return BinaryMask(scale255(m.values) >= threshold)
