"""Command-line entry points.

Subcommands: enhance, decompose, synth, eval, ablate, probe. Exit codes:
0 success, 1 runtime failure, 2 usage error. Logs are key=value lines.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import evalkit, image_core, pipeline, posthoc
from .denoisers import KINDS, DenoiserSpec
from .errors import ConfigError, SeqRetinexError
from .image_core import PixelCoord


def _log(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()))


def _parse_override(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, value = text.split("=", 1)
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _resolve_config(args):
    cfg = pipeline.EnhanceConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = pipeline.EnhanceConfig.from_json(fh.read())
    if getattr(args, "profile", None):
        cfg = cfg.with_profile(args.profile)
    if getattr(args, "denoiser", None):
        cfg = cfg.with_overrides(denoiser=DenoiserSpec(kind=args.denoiser))
    overrides = {}
    for item in getattr(args, "set", None) or []:
        key, value = _parse_override(item)
        overrides[key] = value
    if overrides:
        if "denoiser" in overrides:
            overrides["denoiser"] = DenoiserSpec.from_dict(overrides["denoiser"])
        cfg = cfg.with_overrides(**overrides)
    return cfg


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path, cfg, inputs, extra=None):
    manifest = {
        "config": cfg.to_dict(),
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _gather_inputs(paths):
    files = []
    for p in paths:
        if os.path.isdir(p):
            files.extend(
                os.path.join(p, name) for name in sorted(os.listdir(p))
                if os.path.splitext(name)[1].lower() in (".png", ".ppm")
            )
        else:
            files.append(p)
    if not files:
        raise ConfigError("no input images found")
    return files


def _out_path(in_path, out, many, suffix=""):
    if out is None:
        base, ext = os.path.splitext(in_path)
        return f"{base}{suffix}_out{ext}"
    if many or os.path.isdir(out):
        os.makedirs(out, exist_ok=True)
        base, ext = os.path.splitext(os.path.basename(in_path))
        return os.path.join(out, f"{base}{suffix}{ext}")
    base, ext = os.path.splitext(out)
    return f"{base}{suffix}{ext}"


def _enhance_one(path, cfg, args, layers_only=False):
    img = image_core.load_image(path)
    illum_trace = [] if args.trace else None
    result = pipeline.enhance(img, cfg, illum_trace=illum_trace)
    many = len(args.inputs) > 1 or os.path.isdir(args.inputs[0])
    if not layers_only:
        out = _out_path(path, args.output, many)
        image_core.save_image(result.enhanced, out)
        _log(event="enhanced", input=path, output=out,
             admm_iters=result.illumination_report.iterations,
             admm_converged=result.illumination_report.converged,
             hqs_iters=result.reflectance_iterations,
             gamma1=cfg.gamma1, gamma2=cfg.gamma2, gamma_mode=cfg.gamma_mode)
    else:
        out = _out_path(path, args.output, many)
    if layers_only or args.emit_l:
        image_core.save_plane(result.L, _out_path(path, args.output, many, "_L"))
    if layers_only or args.emit_r:
        r_vis = np.clip(np.asarray(result.R), 0.0, 1.0)
        image_core.save_image(image_core.ImageRGB(r_vis),
                              _out_path(path, args.output, many, "_R"))
    if args.trace and illum_trace is not None:
        trace_path = os.path.splitext(out)[0] + "_trace.csv"
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "residual", "theta"])
            writer.writerows(illum_trace)
    return out


def cmd_enhance(args, layers_only=False):
    cfg = _resolve_config(args)
    files = _gather_inputs(args.inputs)
    workers = args.workers or os.cpu_count() or 1
    if workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(
                lambda p: _enhance_one(p, cfg, args, layers_only), files))
    else:
        outs = [_enhance_one(p, cfg, args, layers_only) for p in files]
    manifest = (os.path.splitext(outs[0])[0] + ".manifest.json"
                if len(outs) == 1 else
                os.path.join(os.path.dirname(outs[0]) or ".", "manifest.json"))
    _write_manifest(manifest, cfg, files)
    return 0


def cmd_decompose(args):
    return cmd_enhance(args, layers_only=True)


def cmd_synth(args):
    files = _gather_inputs(args.inputs)
    os.makedirs(args.output, exist_ok=True)
    seed = args.seed or 0
    for i, path in enumerate(files):
        clean = image_core.load_image(path)
        spec = evalkit.SynthSpec(darken_factor=args.darken,
                                 noise_sigma=args.noise_sigma,
                                 rng_seed=seed + i)
        low = evalkit.synthesize_lowlight(clean, spec)
        base = os.path.splitext(os.path.basename(path))[0]
        low_path = os.path.join(args.output, f"{base}_low.png")
        gt_path = os.path.join(args.output, f"{base}_gt.png")
        image_core.save_image(low, low_path)
        image_core.save_image(clean, gt_path)
        _log(event="synthesized", input=path, low=low_path, gt=gt_path,
             darken=args.darken, noise_sigma=args.noise_sigma, seed=seed + i)
    return 0


def _fmt(value):
    return "inf" if math.isinf(value) else f"{value:.6f}"


def _metric_rows(enhanced_dir, reference_dir):
    enhanced = {os.path.basename(p): p for p in _gather_inputs([enhanced_dir])}
    reference = {os.path.basename(p): p for p in _gather_inputs([reference_dir])}
    unpaired = set(enhanced) ^ set(reference)
    if unpaired:
        raise ConfigError(f"unpaired files: {sorted(unpaired)}")
    rows = []
    for name in sorted(enhanced):
        a = image_core.load_image(enhanced[name])
        b = image_core.load_image(reference[name])
        rows.append((name, evalkit.metric_report(a, b)))
    return rows


def _write_metric_outputs(rows, csv_path, json_path):
    psnrs = [r.psnr for _, r in rows]
    ssims = [r.ssim for _, r in rows]
    mses = [r.mse for _, r in rows]
    finite_psnr = [p for p in psnrs if math.isfinite(p)]
    summary = {
        "psnr_mean": float(np.mean(finite_psnr)) if finite_psnr else math.inf,
        "psnr_std": float(np.std(finite_psnr)) if finite_psnr else 0.0,
        "ssim_mean": float(np.mean(ssims)),
        "ssim_std": float(np.std(ssims)),
        "mse_mean": float(np.mean(mses)),
        "mse_std": float(np.std(mses)),
    }
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image", "psnr", "ssim", "mse"])
            for name, r in rows:
                writer.writerow([name, _fmt(r.psnr), _fmt(r.ssim), _fmt(r.mse)])
            writer.writerow(["mean±std",
                             f"{summary['psnr_mean']:.4f}±{summary['psnr_std']:.4f}",
                             f"{summary['ssim_mean']:.4f}±{summary['ssim_std']:.4f}",
                             f"{summary['mse_mean']:.4f}±{summary['mse_std']:.4f}"])
    if json_path:
        payload = {
            "images": {name: {"psnr": r.psnr, "ssim": r.ssim, "mse": r.mse}
                       for name, r in rows},
            "summary": summary,
        }
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2, default=str)
    return summary


def cmd_eval(args):
    rows = _metric_rows(args.enhanced, args.reference)
    summary = _write_metric_outputs(rows, args.csv, args.json)
    _log(event="evaluated", pairs=len(rows), **{k: f"{v:.4f}" for k, v in summary.items()})
    return 0


def cmd_ablate(args):
    cfg = _resolve_config(args)
    img = image_core.load_image(args.input)
    gt = image_core.load_image(args.gt)
    values = [json.loads(v) for v in args.values.split(",")]
    rows = []
    for value in values:
        if args.param == "denoiser":
            run_cfg = cfg.with_overrides(denoiser=DenoiserSpec(kind=value))
        else:
            run_cfg = cfg.with_overrides(**{args.param: value})
        result = pipeline.enhance(img, run_cfg)
        report = evalkit.metric_report(result.enhanced, gt)
        rows.append((value, report))
        _log(event="ablate", param=args.param, value=value,
             psnr=_fmt(report.psnr), ssim=_fmt(report.ssim), mse=_fmt(report.mse))
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([args.param, "psnr", "ssim", "mse"])
        for value, r in rows:
            writer.writerow([value, _fmt(r.psnr), _fmt(r.ssim), _fmt(r.mse)])
    return 0


def _parse_coords(text):
    coords = []
    for part in text.split(";"):
        r, c = part.split(",")
        coords.append(PixelCoord(int(r), int(c)))
    return coords


def cmd_probe(args):
    cfg = _resolve_config(args)
    img = image_core.load_image(args.input)
    probes = _parse_coords(args.probes)
    iterations = [int(t) for t in args.iterations.split(",")]
    heatmaps = {} if args.heatmap_dir else None
    graph, _ = posthoc.build_influence_graph(
        img, cfg, probes, iterations, image_id=os.path.basename(args.input),
        top_k=args.top_k, min_magnitude=args.min_magnitude, heatmaps=heatmaps)
    with open(args.output, "w") as fh:
        fh.write(graph.to_json())
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(graph.to_dot())
    if heatmaps:
        os.makedirs(args.heatmap_dir, exist_ok=True)
        for (t, r, c), delta in heatmaps.items():
            posthoc.save_heatmap(
                delta, os.path.join(args.heatmap_dir, f"probe_t{t}_{r}_{c}.png"))
    _log(event="probed", probes=len(probes), iterations=len(iterations),
         edges=len(graph.edges), output=args.output)
    return 0


def _add_config_flags(p):
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--profile", choices=sorted(pipeline.PROFILES),
                   help="dataset gamma preset")
    p.add_argument("--denoiser", choices=KINDS, help="denoiser kind")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="config override, repeatable; flags win over --config")
    p.add_argument("--seed", type=int, help="RNG seed where applicable")
    p.add_argument("--workers", type=int,
                   help="worker pool size (default: logical CPU count)")
    p.add_argument("--trace", action="store_true",
                   help="emit per-iteration solver trace CSVs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seqretinex",
        description="Sequential Retinex decomposition for low-light enhancement")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance low-light image(s)")
    p.add_argument("inputs", nargs="+", help="input image(s) or directory")
    p.add_argument("-o", "--output", help="output file or directory")
    p.add_argument("--emit-l", action="store_true", help="also write the illumination layer")
    p.add_argument("--emit-r", action="store_true", help="also write the reflectance layer")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_enhance)

    p = sub.add_parser("decompose", help="write only the L and R layers")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_decompose, emit_l=True, emit_r=True)

    p = sub.add_parser("synth", help="generate synthetic low-light pairs")
    p.add_argument("inputs", nargs="+", help="clean image(s) or directory")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--darken", type=float, default=0.2)
    p.add_argument("--noise-sigma", type=float, default=5.0,
                   help="Gaussian sigma in 8-bit units")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("eval", help="full-reference metrics over paired dirs")
    p.add_argument("enhanced", help="directory of enhanced images")
    p.add_argument("reference", help="directory of ground-truth images")
    p.add_argument("--csv", default="metrics.csv")
    p.add_argument("--json", default="metrics.json")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="sweep one parameter, emit a metrics CSV")
    p.add_argument("input", help="low-light input image")
    p.add_argument("--gt", required=True, help="ground-truth image")
    p.add_argument("--param", required=True, help="config field to sweep")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("-o", "--output", default="ablation.csv")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("probe", help="post-hoc pixel-masking influence graph")
    p.add_argument("input")
    p.add_argument("--probes", required=True, metavar="R,C;R,C", help="probe pixels")
    p.add_argument("--iterations", default="0", help="comma-separated t values")
    p.add_argument("--top-k", type=int, default=posthoc.DEFAULT_TOP_K)
    p.add_argument("--min-magnitude", type=float, default=posthoc.DEFAULT_MIN_MAGNITUDE)
    p.add_argument("-o", "--output", default="influence.json")
    p.add_argument("--dot", help="also write a DOT file")
    p.add_argument("--heatmap-dir", help="write per-probe deviation heat maps")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_probe)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SeqRetinexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
