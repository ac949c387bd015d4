"""End-to-end enhancement: decomposition, denoising, gamma correction.

Clamping to [0,1] happens only at the gamma-correction stage; the
intermediate algebra is left unclamped apart from the l_floor/r_ceil
guards that keep the division and the final product bounded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .denoisers import DenoiserSpec
from .errors import ConfigError, SeqRetinexError, StageError
from .gradfft import adjusted_gradient
from .illumination import AdmmReport, estimate_illumination
from .image_core import ImagePlane, ImageRGB
from .reflectance import estimate_reflectance

GAMMA_MODES = ("single", "dual")
ILLUM_INITS = ("mean", "max")

# Dataset-tuned gamma presets; set12 is the default profile.
PROFILES = {
    "set12": {"gamma_mode": "single", "gamma1": 1.0, "gamma2": 2.2},
    "lol": {"gamma_mode": "dual", "gamma1": 1.5, "gamma2": 4.0},
}


@dataclass(frozen=True)
class EnhanceConfig:
    """Every scalar hyperparameter of the enhancement loop.

    eps, sigma, and alpha are quoted in 8-bit units and rescaled where
    consumed; noise_level is the denoiser level in [0,1] units.
    """

    alpha: float = 0.1
    beta: float = 0.001
    mu: float = 0.001
    theta0: float = 0.0045
    rho: float = 1.08
    iota: float = 1e-5
    eps: float = 1.0
    kappa: float = 2.5
    sigma: float = 10.0
    noise_level: float = 25.0 / 255.0
    gamma1: float = 1.0
    gamma2: float = 2.2
    gamma_mode: str = "single"
    max_iter_l: int = 100
    max_iter_r: int = 10
    r_tol: float = 1e-3
    l_floor: float = 1e-4
    r_ceil: float = 3.0
    illum_init: str = "mean"
    denoiser: DenoiserSpec = field(default_factory=DenoiserSpec)

    def __post_init__(self):
        checks = [
            (self.rho > 1, f"rho must exceed 1, got {self.rho}"),
            (self.theta0 > 0, f"theta0 must be positive, got {self.theta0}"),
            (self.mu > 0, f"mu must be positive, got {self.mu}"),
            (self.iota > 0, f"iota must be positive, got {self.iota}"),
            (self.alpha >= 0, f"alpha must be non-negative, got {self.alpha}"),
            (self.beta >= 0, f"beta must be non-negative, got {self.beta}"),
            (self.eps > 0, f"eps must be positive, got {self.eps}"),
            (self.kappa >= 0, f"kappa must be non-negative, got {self.kappa}"),
            (self.sigma > 0, f"sigma must be positive, got {self.sigma}"),
            (self.noise_level >= 0, f"noise_level must be non-negative, got {self.noise_level}"),
            (self.gamma1 > 0, f"gamma1 must be positive, got {self.gamma1}"),
            (self.gamma2 > 0, f"gamma2 must be positive, got {self.gamma2}"),
            (self.gamma_mode in GAMMA_MODES, f"gamma_mode must be one of {GAMMA_MODES}"),
            (self.illum_init in ILLUM_INITS, f"illum_init must be one of {ILLUM_INITS}"),
            (self.max_iter_l >= 1, "max_iter_l must be >= 1"),
            (self.max_iter_r >= 1, "max_iter_r must be >= 1"),
            (self.r_tol > 0, "r_tol must be positive"),
            (self.l_floor > 0, "l_floor must be positive"),
            (self.r_ceil > 0, "r_ceil must be positive"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def with_profile(self, profile):
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        return replace(self, **PROFILES[profile])

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["denoiser"] = self.denoiser.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "denoiser" in d and not isinstance(d["denoiser"], DenoiserSpec):
            d["denoiser"] = DenoiserSpec.from_dict(d["denoiser"])
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class DecompositionResult:
    L: ImagePlane
    R: ImageRGB
    enhanced: ImageRGB
    illumination_report: AdmmReport
    reflectance_iterations: int


def gamma_correct(R, L, mode, gamma1, gamma2) -> ImageRGB:
    """Recombine reflectance and gamma-lifted illumination, clamped to [0,1].

    single: S' = R * L^(1/gamma2); dual: S' = R^(1/gamma1) * L^(1/gamma2).
    """
    if mode not in GAMMA_MODES:
        raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}")
    R = np.asarray(R, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    l_lift = np.power(L, 1.0 / gamma2)[:, :, None]
    r_part = R if mode == "single" else np.power(R, 1.0 / gamma1)
    return ImageRGB(np.clip(r_part * l_lift, 0.0, 1.0))


def enhance(s: ImageRGB, cfg: EnhanceConfig, illum_trace=None,
            reflect_trace=None, record_iterates=None) -> DecompositionResult:
    """Run the full enhancement: G map, illumination ADMM, reflectance
    HQS with the configured denoiser, then gamma correction.

    Failures are re-raised as StageError tagged with the stage name.
    """
    arr = np.asarray(s, dtype=np.float64)

    def stage(name, fn):
        try:
            return fn()
        except SeqRetinexError as exc:
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc

    G_fields = stage("gradient-map", lambda: [
        adjusted_gradient(arr[:, :, c], cfg.eps, cfg.kappa, cfg.sigma)
        for c in range(3)
    ])
    L, report = stage("illumination", lambda: estimate_illumination(
        s, cfg, trace=illum_trace))
    R, r_iters = stage("reflectance", lambda: estimate_reflectance(
        arr, L, G_fields, cfg, record_iterates=record_iterates,
        trace=reflect_trace))
    enhanced = stage("gamma", lambda: gamma_correct(
        R, L, cfg.gamma_mode, cfg.gamma1, cfg.gamma2))
    return DecompositionResult(L=L, R=R, enhanced=enhanced,
                               illumination_report=report,
                               reflectance_iterations=r_iters)
