"""Discrete gradient/divergence operators and FFT screened-Poisson solves.

Forward differences with periodic wrap, so that the composite operator
grad_transpose(gradient(.)) is diagonal in the discrete Fourier basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidImageError, InvalidSystemError


@dataclass(frozen=True)
class GradientField:
    """Paired horizontal (gx) and vertical (gy) difference planes."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        gx = np.asarray(self.gx, dtype=np.float64)
        gy = np.asarray(self.gy, dtype=np.float64)
        if gx.shape != gy.shape:
            raise InvalidImageError(f"gx shape {gx.shape} != gy shape {gy.shape}")
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)

    @property
    def shape(self):
        return self.gx.shape

    def frobenius(self):
        return float(np.sqrt(np.sum(self.gx**2) + np.sum(self.gy**2)))


def zero_field(shape) -> GradientField:
    return GradientField(np.zeros(shape), np.zeros(shape))


def gradient(plane) -> GradientField:
    p = np.asarray(plane, dtype=np.float64)
    gx = np.roll(p, -1, axis=1) - p
    gy = np.roll(p, -1, axis=0) - p
    return GradientField(gx, gy)


def divergence(field: GradientField) -> np.ndarray:
    """Backward-difference divergence; the negative adjoint of gradient."""
    gx, gy = field.gx, field.gy
    return (gx - np.roll(gx, 1, axis=1)) + (gy - np.roll(gy, 1, axis=0))


def grad_transpose(field: GradientField) -> np.ndarray:
    return -divergence(field)


def adjusted_gradient(s_plane, eps, kappa, sigma) -> GradientField:
    """Thresholded and exponentially amplified gradient map.

    ``eps`` and ``sigma`` are given in 8-bit units; internal values live
    in [0,1], so the threshold is eps/255 and the decay argument is
    rescaled by 255.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    g = gradient(s_plane)

    def adjust(comp):
        kept = np.where(np.abs(comp) < eps / 255.0, 0.0, comp)
        return (1.0 + kappa * np.exp(-np.abs(kept) * 255.0 / sigma)) * kept

    return GradientField(adjust(g.gx), adjust(g.gy))


@dataclass(frozen=True)
class FftSolverPlan:
    """Per-size cache of the Fourier eigenvalues of grad_transpose(grad)."""

    height: int
    width: int
    laplacian_spectrum: np.ndarray

    @classmethod
    def for_shape(cls, height, width):
        ky = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(height) / height)
        kx = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(width) / width)
        spectrum = ky[:, None] + kx[None, :]
        spectrum[0, 0] = 0.0  # exact DC mode, no rounding residue
        return cls(height, width, spectrum)


_PLAN_CACHE: dict[tuple[int, int], FftSolverPlan] = {}


def get_plan(height, width) -> FftSolverPlan:
    key = (height, width)
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = FftSolverPlan.for_shape(height, width)
        _PLAN_CACHE[key] = plan
    return plan


def solve_screened_poisson(plan: FftSolverPlan, a, b, rhs) -> np.ndarray:
    """Solve (a*I + b*grad_transpose(grad)) x = rhs in the Fourier basis."""
    if a <= 0:
        raise InvalidSystemError(f"identity weight a={a} makes the DC mode singular")
    if b < 0:
        raise InvalidSystemError(f"negative operator weight b={b}")
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (plan.height, plan.width):
        raise InvalidImageError(
            f"rhs shape {rhs.shape} does not match plan {(plan.height, plan.width)}"
        )
    if b == 0.0:
        return rhs / a
    spectrum = np.fft.fft2(rhs) / (a + b * plan.laplacian_spectrum)
    return np.real(np.fft.ifft2(spectrum))
