"""Sequential Retinex decomposition for low-light image enhancement.

The observed image S is decomposed as S = R * L: an ADMM loop smooths
the meanRGB illumination estimate, a half-quadratic-splitting loop with
a pluggable denoiser recovers the reflectance, and gamma correction
recombines the layers.
"""

from .denoisers import DenoiserSpec, denoise, tv_denoise, wavelet_shrink
from .errors import (
    ConfigError,
    DenoiserError,
    ExternalDenoiserError,
    ImageIOError,
    InvalidImageError,
    InvalidSystemError,
    SeqRetinexError,
    StageError,
)
from .evalkit import MetricReport, SynthSpec, mse, psnr, ssim, synthesize_lowlight
from .gradfft import FftSolverPlan, GradientField, adjusted_gradient, gradient
from .illumination import AdmmReport, estimate_illumination, mean_rgb
from .image_core import ImagePlane, ImageRGB, PixelCoord, load_image, save_image
from .pipeline import DecompositionResult, EnhanceConfig, enhance, gamma_correct
from .posthoc import InfluenceEdge, InfluenceGraph, build_influence_graph
from .reflectance import estimate_reflectance, init_reflectance

__version__ = "0.1.0"
