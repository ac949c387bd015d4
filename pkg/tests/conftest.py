"""Shared fixtures: deterministic synthetic image corpora.

The desk corpus is 12 varied 256x256 images (gradients, shapes, a few
dark, a couple mildly noisy). The BSD-style corpus is 30 brighter
structured images used for the end-to-end improvement check.
"""

import numpy as np
import pytest


def _lowpass(rng, shape, cutoff=8.0):
    """Smooth random field in [0,1] via Fourier low-pass of white noise."""
    noise = rng.standard_normal(shape)
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    mask = np.exp(-((fy * shape[0]) ** 2 + (fx * shape[1]) ** 2) / (2 * cutoff**2))
    field = np.real(np.fft.ifft2(np.fft.fft2(noise) * mask))
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo + 1e-12)


def _add_shapes(rng, base, count=4):
    h, w = base.shape
    out = base.copy()
    for _ in range(count):
        kind = rng.integers(0, 2)
        value = rng.uniform(-0.3, 0.3)
        if kind == 0:
            r0, c0 = rng.integers(0, h // 2), rng.integers(0, w // 2)
            r1, c1 = r0 + rng.integers(h // 8, h // 2), c0 + rng.integers(w // 8, w // 2)
            out[r0:r1, c0:c1] += value
        else:
            cy, cx = rng.integers(0, h), rng.integers(0, w)
            rad = rng.integers(h // 10, h // 4)
            yy, xx = np.ogrid[:h, :w]
            out[(yy - cy) ** 2 + (xx - cx) ** 2 <= rad**2] += value
    return out


def make_synthetic_image(seed, size=256, brightness=(0.2, 0.8), noise=0.0):
    """Deterministic structured RGB image with the given brightness span."""
    rng = np.random.Generator(np.random.Philox(seed))
    lum = _lowpass(rng, (size, size), cutoff=rng.uniform(4, 10))
    lum = _add_shapes(rng, lum, count=int(rng.integers(3, 6)))
    lum = np.clip(lum, 0.0, 1.0)
    lo, hi = brightness
    lum = lo + (hi - lo) * lum
    tint = rng.uniform(0.75, 1.0, size=3)
    chroma = np.stack(
        [_lowpass(rng, (size, size), cutoff=3.0) for _ in range(3)], axis=-1
    )
    img = lum[:, :, None] * tint[None, None, :] + 0.08 * (chroma - 0.5)
    if noise > 0:
        img = img + rng.normal(0.0, noise, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def make_desk_corpus(size=256):
    """12 varied desk images; indices 8-11 are dark (mean < 0.3)."""
    images = []
    for i in range(8):
        noise = 0.02 if i >= 6 else 0.0
        images.append(make_synthetic_image(1000 + i, size=size,
                                           brightness=(0.15, 0.85), noise=noise))
    for i in range(4):
        images.append(make_synthetic_image(2000 + i, size=size,
                                           brightness=(0.02, 0.25)))
    return images


def make_bsd_corpus(size=256, count=30):
    return [
        make_synthetic_image(3000 + i, size=size, brightness=(0.25, 0.95))
        for i in range(count)
    ]


@pytest.fixture(scope="session")
def desk_corpus():
    return make_desk_corpus(size=256)


@pytest.fixture(scope="session")
def desk_corpus_small():
    return make_desk_corpus(size=64)


@pytest.fixture(scope="session")
def bsd_corpus():
    return make_bsd_corpus(size=256, count=30)
