"""Pixel-masking influence analysis across reflectance iterations.

Masking a reflectance pixel at iteration t, rerunning a single HQS step,
and ranking the per-pixel deviations at t+1 yields a directed influence
graph over (iteration, pixel) nodes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidImageError
from .gradfft import adjusted_gradient, get_plan
from .image_core import ImagePlane, PixelCoord, save_plane
from .pipeline import EnhanceConfig, enhance
from .reflectance import hqs_step

DEFAULT_TOP_K = 5
DEFAULT_MIN_MAGNITUDE = 1e-4


@dataclass(frozen=True)
class InfluenceEdge:
    iteration: int  # t of the masked pixel; the target lives at t+1
    source: PixelCoord
    target: PixelCoord
    magnitude: float


@dataclass(frozen=True)
class InfluenceGraph:
    image_id: str
    config_hash: str
    edges: tuple

    def to_dict(self):
        return {
            "image": self.image_id,
            "config_hash": self.config_hash,
            "edges": [
                {
                    "t": e.iteration,
                    "from": [e.source.row, e.source.col],
                    "to": [e.target.row, e.target.col],
                    "mag": e.magnitude,
                }
                for e in self.edges
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_dot(self):
        lines = ["digraph influence {"]
        for e in self.edges:
            src = f"t{e.iteration}_{e.source.row}_{e.source.col}"
            dst = f"t{e.iteration + 1}_{e.target.row}_{e.target.col}"
            lines.append(f'  {src} -> {dst} [label="{e.magnitude:.3e}"];')
        lines.append("}")
        return "\n".join(lines)


def _config_hash(cfg: EnhanceConfig) -> str:
    return hashlib.sha256(cfg.to_json().encode()).hexdigest()[:16]


def probe_pixel(snapshots, t, coord: PixelCoord, s, L, G_fields, cfg,
                top_k=DEFAULT_TOP_K, min_magnitude=DEFAULT_MIN_MAGNITUDE,
                include_self=True, delta_out=None):
    """Mask one reflectance pixel at iteration t and rank the fallout at t+1.

    ``snapshots`` holds the recorded per-iteration reflectance arrays
    (index 0 is R0). Returns the top_k InfluenceEdges with deviation
    magnitude >= min_magnitude. If ``delta_out`` is a list, the raw
    per-pixel deviation plane is appended (for heat-map export).
    """
    if not 0 <= t < len(snapshots) - 1:
        raise InvalidImageError(f"iteration {t} has no recorded successor")
    R_t = snapshots[t]
    coord.validate(R_t.shape[0], R_t.shape[1])
    plan = get_plan(R_t.shape[0], R_t.shape[1])

    masked = R_t.copy()
    masked[coord.row, coord.col, :] = 0.0
    R_next_masked = hqs_step(masked, s, L, G_fields, cfg, plan, iteration=t)
    delta = np.abs(R_next_masked - snapshots[t + 1]).sum(axis=2)
    if delta_out is not None:
        delta_out.append(delta)
    if not include_self:
        delta = delta.copy()
        delta[coord.row, coord.col] = 0.0

    flat = delta.ravel()
    order = np.argsort(flat)[::-1][:top_k]
    edges = []
    for idx in order:
        mag = float(flat[idx])
        if mag < min_magnitude:
            break
        r, c = divmod(int(idx), delta.shape[1])
        edges.append(InfluenceEdge(iteration=t, source=coord,
                                   target=PixelCoord(r, c), magnitude=mag))
    return edges


def build_influence_graph(s, cfg: EnhanceConfig, probes, iterations,
                          image_id="image", top_k=DEFAULT_TOP_K,
                          min_magnitude=DEFAULT_MIN_MAGNITUDE,
                          include_self=True, heatmaps=None):
    """Record the pipeline's reflectance iterates once, then probe.

    ``probes`` is a list of PixelCoord, ``iterations`` the list of t
    values to probe at. If ``heatmaps`` is a dict it is filled with
    (t, row, col) -> deviation plane.
    """
    if not probes:
        raise InvalidImageError("probe list is empty")
    arr = np.asarray(s, dtype=np.float64)
    snapshots = []
    result = enhance(s, cfg, record_iterates=snapshots)
    L = np.asarray(result.L)
    G_fields = [
        adjusted_gradient(arr[:, :, c], cfg.eps, cfg.kappa, cfg.sigma)
        for c in range(3)
    ]
    edges = []
    for t in iterations:
        for coord in probes:
            sink = [] if heatmaps is not None else None
            edges.extend(probe_pixel(
                snapshots, t, coord, arr, L, G_fields, cfg,
                top_k=top_k, min_magnitude=min_magnitude,
                include_self=include_self, delta_out=sink))
            if heatmaps is not None:
                heatmaps[(t, coord.row, coord.col)] = sink[0]
    return InfluenceGraph(image_id=image_id, config_hash=_config_hash(cfg),
                          edges=tuple(edges)), result


def save_heatmap(delta, path):
    """Write a deviation plane as a grayscale PNG, max-normalized."""
    peak = float(delta.max())
    scaled = delta / peak if peak > 0 else delta
    save_plane(ImagePlane(scaled), path)
