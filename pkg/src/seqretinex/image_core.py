"""Raster types, color-space conversion, and image file I/O.

Internal dynamic range is [0,1]. Parameters quoted in 8-bit units
elsewhere in the package are converted at the module boundary that
consumes them, never here.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import ImageIOError, InvalidImageError


def _validated_array(data, ndim, what):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidImageError(f"{what}: expected {ndim}-d data, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidImageError(f"{what}: zero-sized raster {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidImageError(f"{what}: non-finite values present")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImagePlane:
    """Single-channel raster, row-major float64, nominal range [0,1]."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validated_array(self.data, 2, "ImagePlane"))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def __array__(self, dtype=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class ImageRGB:
    """Three-channel raster stored as an (H, W, 3) float64 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = _validated_array(self.data, 3, "ImageRGB")
        if arr.shape[2] != 3:
            raise InvalidImageError(f"ImageRGB: expected 3 channels, got {arr.shape[2]}")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_planes(cls, r, g, b):
        r, g, b = (np.asarray(p, dtype=np.float64) for p in (r, g, b))
        if not (r.shape == g.shape == b.shape):
            raise InvalidImageError("ImageRGB channels differ in shape")
        return cls(np.stack([r, g, b], axis=-1))

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def planes(self):
        return tuple(ImagePlane(self.data[:, :, c]) for c in range(3))

    def __array__(self, dtype=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class PixelCoord:
    """Row/column address into a raster."""

    row: int
    col: int

    def validate(self, height, width):
        if not (0 <= self.row < height and 0 <= self.col < width):
            raise InvalidImageError(
                f"pixel ({self.row},{self.col}) outside {height}x{width} raster"
            )


_SUPPORTED_EXT = {".png", ".ppm"}


def load_image(path) -> ImageRGB:
    """Decode an 8/16-bit PNG or binary PPM into a [0,1] ImageRGB.

    Grayscale inputs are replicated across the three channels.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext not in _SUPPORTED_EXT:
        raise ImageIOError(f"unsupported format {ext!r} for {path}")
    if not os.path.exists(path):
        raise ImageIOError(f"file not found: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"unreadable image: {path}")
    if raw.size == 0:
        raise ImageIOError(f"zero-sized image: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageIOError(f"unsupported sample type {raw.dtype} in {path}")
    arr = raw.astype(np.float64) / scale
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    elif arr.shape[2] == 3:
        arr = arr[:, :, ::-1]  # BGR -> RGB
    else:
        raise ImageIOError(f"unsupported channel count {arr.shape[2]} in {path}")
    return ImageRGB(arr)


def quantize8(values) -> np.ndarray:
    """Normative 8-bit quantization: clamp to [0,1], then round(v*255)."""
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.round(arr * 255.0).astype(np.uint8)


def quantize16(values) -> np.ndarray:
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.round(arr * 65535.0).astype(np.uint16)


def _write(path, bgr):
    path = os.fspath(path)
    ok = False
    try:
        ok = cv2.imwrite(path, bgr)
    except cv2.error as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
    if not ok:
        raise ImageIOError(f"cannot write {path}")


def save_image(img: ImageRGB, path) -> None:
    """Write an 8-bit PNG (or PPM), clamping and quantizing round(v*255)."""
    _write(path, quantize8(np.asarray(img))[:, :, ::-1])


def save_image_16bit(img: ImageRGB, path) -> None:
    """16-bit PNG writer used by the external-denoiser file exchange."""
    _write(path, quantize16(np.asarray(img))[:, :, ::-1])


def save_plane(plane, path) -> None:
    """Write a single plane as an 8-bit grayscale PNG."""
    _write(path, quantize8(np.asarray(plane)))


def rgb_to_hsv(img: ImageRGB):
    """Hexcone RGB -> HSV. H in [0,360), S and V in [0,1].

    Achromatic pixels get H = 0 and S = 0 by convention.
    """
    rgb = np.asarray(img, dtype=np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    v = rgb.max(axis=2)
    c = v - rgb.min(axis=2)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    h = np.zeros_like(v)
    nz = c > 0
    cc = np.where(nz, c, 1.0)
    rmax = nz & (v == r)
    gmax = nz & (v == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    h = np.where(rmax, (g - b) / cc, h)
    h = np.where(gmax, (b - r) / cc + 2.0, h)
    h = np.where(bmax, (r - g) / cc + 4.0, h)
    h = (h * 60.0) % 360.0
    return ImagePlane(h), ImagePlane(s), ImagePlane(v)


def hsv_to_rgb(h, s, v) -> ImageRGB:
    """Inverse of :func:`rgb_to_hsv`."""
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    hp = (h % 360.0) / 60.0
    c = v * s
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    m = v - c
    zeros = np.zeros_like(c)
    sector = np.floor(hp).astype(int) % 6
    r = np.choose(sector, [c, x, zeros, zeros, x, c])
    g = np.choose(sector, [x, c, c, x, zeros, zeros])
    b = np.choose(sector, [zeros, zeros, x, c, c, x])
    return ImageRGB(np.stack([r + m, g + m, b + m], axis=-1))
