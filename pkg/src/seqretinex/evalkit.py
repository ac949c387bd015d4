"""Full-reference metrics and the synthetic low-light dataset generator.

Metrics are computed on quantized 8-bit values (the normative
round(v*255)) so that reported numbers are stable across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidImageError
from .image_core import ImageRGB, hsv_to_rgb, quantize8, rgb_to_hsv

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    mse: float


@dataclass(frozen=True)
class SynthSpec:
    """V-channel darkening plus seeded Gaussian noise, 8-bit sigma units."""

    darken_factor: float = 0.2
    noise_sigma: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.darken_factor <= 1.0:
            raise ValueError(f"darken_factor must be in (0,1], got {self.darken_factor}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


def _quantized_pair(a, b):
    qa = quantize8(np.asarray(a)).astype(np.float64)
    qb = quantize8(np.asarray(b)).astype(np.float64)
    if qa.shape != qb.shape:
        raise InvalidImageError(f"image shapes differ: {qa.shape} vs {qb.shape}")
    return qa, qb


def mse(a, b) -> float:
    """Mean squared byte difference over all channels and pixels."""
    qa, qb = _quantized_pair(a, b)
    return float(np.mean((qa - qb) ** 2))


def psnr(a, b) -> float:
    """10*log10(255^2 / mse); +inf when the quantized images coincide."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(DYNAMIC_RANGE**2 / err)


def _gaussian_window(size, sigma):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _filter_valid(plane, window):
    # separable would be faster; plain FFT convolution keeps it simple
    h, w = plane.shape
    k = window.shape[0]
    out = np.real(np.fft.ifft2(np.fft.fft2(plane) * np.fft.fft2(window, s=plane.shape)))
    # full periodic convolution; keep only positions where the window fits
    return out[k - 1:h, k - 1:w]


def ssim(a, b) -> float:
    """Single-scale SSIM on quantized values, averaged over channels."""
    qa, qb = _quantized_pair(a, b)
    if min(qa.shape[0], qa.shape[1]) < SSIM_WINDOW:
        raise InvalidImageError(
            f"image {qa.shape[:2]} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    scores = []
    for c in range(3):
        x, y = qa[:, :, c], qb[:, :, c]
        mu_x = _filter_valid(x, window)
        mu_y = _filter_valid(y, window)
        xx = _filter_valid(x * x, window) - mu_x**2
        yy = _filter_valid(y * y, window) - mu_y**2
        xy = _filter_valid(x * y, window) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
        den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


def metric_report(a, b) -> MetricReport:
    return MetricReport(psnr=psnr(a, b), ssim=ssim(a, b), mse=mse(a, b))


def synthesize_lowlight(clean: ImageRGB, spec: SynthSpec) -> ImageRGB:
    """Darken the HSV V-channel, then add seeded white Gaussian noise.

    Uses the counter-based Philox generator so regeneration from the
    same seed is byte-identical.
    """
    h, s, v = rgb_to_hsv(clean)
    dark = hsv_to_rgb(h, s, np.asarray(v) * spec.darken_factor)
    rng = np.random.Generator(np.random.Philox(spec.rng_seed))
    noisy = np.asarray(dark) + rng.normal(
        0.0, spec.noise_sigma / 255.0, size=np.asarray(dark).shape
    )
    return ImageRGB(np.clip(noisy, 0.0, 1.0))
