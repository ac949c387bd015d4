"""Plug-and-play denoiser contract and the bundled implementations.

Every denoiser maps an (H, W, 3) array plus a noise level in [0,1] units
to an array of the same shape. Bundled kinds are pure and deterministic;
the external kind shells out to another process through a file exchange.
"""

from __future__ import annotations

import math
import os
import subprocess
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import image_core
from .errors import ConfigError, DenoiserError, ExternalDenoiserError
from .gradfft import GradientField, divergence, gradient
from .illumination import soft_shrink
from .image_core import ImageRGB

KINDS = ("identity", "wavelet_shrinkage", "total_variation", "external")

DEFAULT_EXCHANGE_TIMEOUT = 120.0


@dataclass(frozen=True)
class DenoiserSpec:
    """Identification plus parameters of a pluggable denoiser."""

    kind: str = "wavelet_shrinkage"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown denoiser kind {self.kind!r}; choose from {KINDS}")
        if self.kind == "external" and "command" not in self.params:
            raise ConfigError("external denoiser requires a 'command' parameter")
        for key, value in self.params.items():
            if isinstance(value, (int, float)) and not math.isfinite(value):
                raise ConfigError(f"denoiser parameter {key}={value} is not finite")

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"kind", "params"}
        if unknown:
            raise ConfigError(f"unknown denoiser spec keys: {sorted(unknown)}")
        return cls(kind=d.get("kind", "wavelet_shrinkage"), params=dict(d.get("params", {})))


def wavelet_threshold(noise_sigma, n) -> float:
    """Universal (VisuShrink) threshold noise_sigma * sqrt(2 ln n)."""
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if n < 1:
        raise ValueError(f"pixel count must be positive, got {n}")
    return float(noise_sigma) * math.sqrt(2.0 * math.log(n))


def _haar_forward(a):
    # orthonormal single-level split along both axes
    s = 1.0 / math.sqrt(2.0)
    lo_r = (a[0::2, :] + a[1::2, :]) * s
    hi_r = (a[0::2, :] - a[1::2, :]) * s
    ll = (lo_r[:, 0::2] + lo_r[:, 1::2]) * s
    lh = (lo_r[:, 0::2] - lo_r[:, 1::2]) * s
    hl = (hi_r[:, 0::2] + hi_r[:, 1::2]) * s
    hh = (hi_r[:, 0::2] - hi_r[:, 1::2]) * s
    return ll, lh, hl, hh


def _haar_inverse(ll, lh, hl, hh):
    s = 1.0 / math.sqrt(2.0)
    lo_r = np.empty((ll.shape[0], ll.shape[1] * 2))
    hi_r = np.empty_like(lo_r)
    lo_r[:, 0::2] = (ll + lh) * s
    lo_r[:, 1::2] = (ll - lh) * s
    hi_r[:, 0::2] = (hl + hh) * s
    hi_r[:, 1::2] = (hl - hh) * s
    out = np.empty((lo_r.shape[0] * 2, lo_r.shape[1]))
    out[0::2, :] = (lo_r + hi_r) * s
    out[1::2, :] = (lo_r - hi_r) * s
    return out


def _pad_to_multiple(a, multiple):
    h, w = a.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        a = np.pad(a, ((0, ph), (0, pw)), mode="symmetric")
    return a


def wavelet_shrink(plane, noise_sigma, levels=3) -> np.ndarray:
    """Multi-level Haar soft-thresholding with symmetric padding.

    Detail bands at every level are shrunk at the universal threshold;
    the final approximation band is left untouched.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    p = np.asarray(plane, dtype=np.float64)
    h, w = p.shape
    if 2**levels > 2 * min(h, w):
        raise ValueError(f"{levels} levels too deep for a {h}x{w} plane")
    padded = _pad_to_multiple(p, 2**levels)
    thr = wavelet_threshold(noise_sigma, h * w)

    details = []
    ll = padded
    for _ in range(levels):
        ll, lh, hl, hh = _haar_forward(ll)
        details.append((soft_shrink(lh, thr), soft_shrink(hl, thr), soft_shrink(hh, thr)))
    for lh, hl, hh in reversed(details):
        ll = _haar_inverse(ll, lh, hl, hh)
    return ll[:h, :w]


def tv_denoise(plane, weight, iters=50) -> np.ndarray:
    """Dual-projection minimization of 0.5*||x - plane||^2 + weight*TV(x)."""
    if weight < 0:
        raise ValueError(f"weight must be non-negative, got {weight}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    p = np.asarray(plane, dtype=np.float64)
    if weight == 0.0:
        return p.copy()
    px = np.zeros_like(p)
    py = np.zeros_like(p)
    tau = 0.25
    for _ in range(iters):
        g = gradient(divergence(GradientField(px, py)) - p / weight)
        mag = np.sqrt(g.gx**2 + g.gy**2)
        px = (px + tau * g.gx) / (1.0 + tau * mag)
        py = (py + tau * g.gy) / (1.0 + tau * mag)
    return p - weight * divergence(GradientField(px, py))


def total_variation(plane) -> float:
    """Isotropic TV used by tests and the denoising-efficacy checks."""
    g = gradient(plane)
    return float(np.sum(np.sqrt(g.gx**2 + g.gy**2)))


def external_denoise(command, workdir, img, noise_level,
                     timeout=DEFAULT_EXCHANGE_TIMEOUT) -> np.ndarray:
    """Run an out-of-process denoiser through the file-exchange protocol.

    Writes ``in.png`` (16-bit) and ``sigma.txt`` into workdir, invokes
    ``command workdir``, and reads back ``out.png`` (16-bit, same size).
    """
    arr = np.asarray(img, dtype=np.float64)
    os.makedirs(workdir, exist_ok=True)
    in_path = os.path.join(workdir, "in.png")
    out_path = os.path.join(workdir, "out.png")
    if os.path.exists(out_path):
        os.remove(out_path)
    image_core.save_image_16bit(ImageRGB(arr), in_path)
    with open(os.path.join(workdir, "sigma.txt"), "w") as fh:
        fh.write(f"{noise_level:.10g}\n")
    try:
        proc = subprocess.run(
            command.split() + [workdir],
            capture_output=True, text=True, timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise ExternalDenoiserError(f"denoiser timed out after {timeout}s") from exc
    except OSError as exc:
        raise ExternalDenoiserError(f"cannot invoke {command!r}: {exc}") from exc
    if proc.returncode != 0:
        raise ExternalDenoiserError(
            f"denoiser exited with {proc.returncode}: {proc.stderr.strip()}"
        )
    if not os.path.exists(out_path):
        raise ExternalDenoiserError("denoiser produced no out.png")
    out = image_core.load_image(out_path)
    if (out.height, out.width) != (arr.shape[0], arr.shape[1]):
        raise ExternalDenoiserError(
            f"out.png is {out.height}x{out.width}, expected {arr.shape[0]}x{arr.shape[1]}"
        )
    return np.asarray(out)


def denoise(spec: DenoiserSpec, img, noise_level) -> np.ndarray:
    """Apply the denoiser named by ``spec`` to a three-channel image."""
    if noise_level < 0:
        raise ValueError(f"noise_level must be non-negative, got {noise_level}")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DenoiserError(f"expected (H,W,3) image, got shape {arr.shape}")
    if spec.kind == "identity":
        return arr
    if spec.kind == "wavelet_shrinkage":
        levels = int(spec.params.get("levels", 3))
        return np.stack(
            [wavelet_shrink(arr[:, :, c], noise_level, levels) for c in range(3)],
            axis=-1,
        )
    if spec.kind == "total_variation":
        weight = float(spec.params.get("weight", noise_level))
        iters = int(spec.params.get("iters", 50))
        return np.stack(
            [tv_denoise(arr[:, :, c], weight, iters) for c in range(3)], axis=-1
        )
    if spec.kind == "external":
        workdir = spec.params.get("workdir") or os.environ.get("RETINEX_WORKDIR")
        if workdir is None:
            workdir = tempfile.mkdtemp(prefix="seqretinex-exchange-")
        timeout = float(spec.params.get("timeout", DEFAULT_EXCHANGE_TIMEOUT))
        return external_denoise(spec.params["command"], workdir, arr, noise_level,
                                timeout=timeout)
    raise ConfigError(f"unknown denoiser kind {spec.kind!r}")
