"""Illumination estimation: meanRGB initialization and the ADMM loop.

The illumination objective is ||L - Lhat||_F^2 + alpha*||grad L||_1 with
an anisotropic l1 norm, split via grad L = v and driven by an increasing
penalty theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidImageError
from .gradfft import (
    FftSolverPlan,
    GradientField,
    get_plan,
    grad_transpose,
    gradient,
    solve_screened_poisson,
    zero_field,
)
from .image_core import ImagePlane


def soft_shrink(x, c):
    """Component-wise soft shrinkage sign(x)*max(|x|-c, 0)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - c, 0.0)


def mean_rgb(img, mode="mean") -> np.ndarray:
    """Initial illumination: per-pixel mean (or max) over RGB channels."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImageError(f"expected (H,W,3) image, got shape {arr.shape}")
    if mode == "mean":
        return arr.mean(axis=2)
    if mode == "max":
        return arr.max(axis=2)
    raise ValueError(f"unknown illumination initializer {mode!r}")


@dataclass
class AdmmState:
    """Mutable loop state: primal L, split variable v, multiplier Z."""

    L: np.ndarray
    v: GradientField
    Z: GradientField
    theta: float
    iter: int = 0


@dataclass(frozen=True)
class AdmmReport:
    iterations: int
    residual: float
    converged: bool


def admm_update_L(state: AdmmState, l_hat, plan: FftSolverPlan) -> np.ndarray:
    """L-step: (2*I + theta*gradT grad)^{-1} (2*Lhat + theta*gradT v - gradT Z)."""
    if state.theta <= 0:
        raise ValueError(f"theta must be positive, got {state.theta}")
    rhs = 2.0 * np.asarray(l_hat) + state.theta * grad_transpose(state.v) - grad_transpose(state.Z)
    return solve_screened_poisson(plan, 2.0, state.theta, rhs)


def admm_update_v(L, Z: GradientField, theta, alpha) -> GradientField:
    """v-step: soft shrinkage of grad L + Z/theta at level alpha/theta."""
    g = gradient(L)
    c = alpha / theta
    return GradientField(
        soft_shrink(g.gx + Z.gx / theta, c),
        soft_shrink(g.gy + Z.gy / theta, c),
    )


def admm_update_multipliers(state: AdmmState, L_new, v_new: GradientField, rho) -> AdmmState:
    """Multiplier/penalty step: Z += theta*(grad L - v); theta *= rho."""
    if rho <= 1:
        raise ValueError(f"rho must exceed 1, got {rho}")
    g = gradient(L_new)
    Z = GradientField(
        state.Z.gx + state.theta * (g.gx - v_new.gx),
        state.Z.gy + state.theta * (g.gy - v_new.gy),
    )
    return AdmmState(L=np.asarray(L_new), v=v_new, Z=Z, theta=state.theta * rho,
                     iter=state.iter + 1)


def illumination_objective(L, l_hat, alpha) -> float:
    """||L - Lhat||_F^2 + alpha * (|gx| + |gy|) summed; used by tests."""
    g = gradient(L)
    return float(np.sum((np.asarray(L) - np.asarray(l_hat)) ** 2)
                 + alpha * (np.sum(np.abs(g.gx)) + np.sum(np.abs(g.gy))))


def estimate_illumination(s, cfg, trace=None):
    """Run meanRGB + ADMM for the illumination layer.

    Returns (ImagePlane, AdmmReport). The result is clamped to
    [cfg.l_floor, 1] so the later reflectance division is well defined.
    Non-convergence within cfg.max_iter_l is reported, not raised.
    If ``trace`` is a list, (iteration, residual, theta) rows are appended.
    """
    l_hat = mean_rgb(s, mode=cfg.illum_init)
    plan = get_plan(*l_hat.shape)
    l_hat_norm = float(np.linalg.norm(l_hat))
    tol = cfg.iota * l_hat_norm
    # alpha is quoted in 8-bit units like eps and sigma; gradients here
    # live in [0,1], so the l1 weight is rescaled at the solver boundary.
    alpha = cfg.alpha / 255.0

    state = AdmmState(L=l_hat, v=gradient(l_hat), Z=zero_field(l_hat.shape),
                      theta=cfg.theta0)
    residual = np.inf
    converged = False
    while state.iter < cfg.max_iter_l:
        L_new = admm_update_L(state, l_hat, plan)
        v_new = admm_update_v(L_new, state.Z, state.theta, alpha)
        residual = GradientField(
            gradient(L_new).gx - v_new.gx,
            gradient(L_new).gy - v_new.gy,
        ).frobenius()
        state = admm_update_multipliers(state, L_new, v_new, cfg.rho)
        if trace is not None:
            trace.append((state.iter, residual, state.theta))
        if residual <= tol:
            converged = True
            break

    L = np.clip(state.L, cfg.l_floor, 1.0)
    return ImagePlane(L), AdmmReport(iterations=state.iter, residual=residual,
                                     converged=converged)
