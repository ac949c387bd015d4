"""Reflectance estimation by half-quadratic splitting.

Alternates a closed-form FFT update of the auxiliary variable z with a
denoiser applied to the illumination-weighted data average, per RGB
channel. The penalty mu stays fixed across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoisers import DenoiserSpec, denoise
from .errors import DenoiserError
from .gradfft import FftSolverPlan, get_plan, grad_transpose, solve_screened_poisson
from .image_core import ImageRGB


@dataclass
class HqsState:
    R: np.ndarray
    z: np.ndarray
    mu: float
    iter: int = 0


def init_reflectance(s, L) -> np.ndarray:
    """R0 = S / L per channel. Values above 1 are kept; clamping is the
    pipeline's job, not the decomposition's."""
    s = np.asarray(s, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    return s / L[:, :, None]


def hqs_update_z(R, G_fields, beta, mu, plan: FftSolverPlan) -> np.ndarray:
    """z-step: solve (2*beta*gradT grad + mu*I) z = 2*beta*gradT G + mu*R."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    R = np.asarray(R, dtype=np.float64)
    if beta == 0.0:
        return R.copy()  # the system collapses to mu*z = mu*R
    out = np.empty_like(R)
    for c in range(3):
        rhs = 2.0 * beta * grad_transpose(G_fields[c]) + mu * R[:, :, c]
        out[:, :, c] = solve_screened_poisson(plan, mu, 2.0 * beta, rhs)
    return out


def denoiser_argument(s, L, z, mu) -> np.ndarray:
    """Illumination-weighted average (2*S*L + mu*z) / (2*L^2 + mu)."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    s = np.asarray(s, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)[:, :, None]
    z = np.asarray(z, dtype=np.float64)
    return (2.0 * s * L + mu * z) / (2.0 * L**2 + mu)


def hqs_step(R, s, L, G_fields, cfg, plan, iteration=0) -> np.ndarray:
    """One z-update followed by one denoiser R-update."""
    z = hqs_update_z(R, G_fields, cfg.beta, cfg.mu, plan)
    arg = denoiser_argument(s, L, z, cfg.mu)
    try:
        return denoise(cfg.denoiser, arg, cfg.noise_level)
    except DenoiserError as exc:
        exc.iteration = iteration
        raise


def estimate_reflectance(s, L, G_fields, cfg, record_iterates=None, trace=None):
    """Run the HQS loop until the relative change in R falls below cfg.r_tol.

    Returns (ImageRGB, iterations). The final R is clamped to
    [0, cfg.r_ceil]. If ``record_iterates`` is a list, the unclamped R of
    every iterate (including R0) is appended, for post-hoc probing. If
    ``trace`` is a list, (iteration, relative change) rows are appended.
    """
    s = np.asarray(s, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    plan = get_plan(*L.shape)
    R = init_reflectance(s, L)
    if record_iterates is not None:
        record_iterates.append(R)
    iterations = 0
    for k in range(cfg.max_iter_r):
        R_new = hqs_step(R, s, L, G_fields, cfg, plan, iteration=k)
        iterations = k + 1
        if record_iterates is not None:
            record_iterates.append(R_new)
        change = np.linalg.norm(R_new - R) / max(np.linalg.norm(R), 1e-12)
        R = R_new
        if trace is not None:
            trace.append((iterations, change))
        if change <= cfg.r_tol:
            break
    return ImageRGB(np.clip(R, 0.0, cfg.r_ceil)), iterations
