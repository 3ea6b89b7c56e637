"""Command-line surface: estimate / synth / eval / viz subcommands.

Configuration precedence is flags > config file > defaults.  The config file
is plain ``key = value`` lines (``#`` comments allowed) using the same keys
as the long flag names with underscores, e.g. ``sigma_spatial = 4``.  Every
run report echoes the fully resolved configuration plus its hash so a run
can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import flowio, metrics, synth
from .estimator import SkeletalFlowEstimator
from .imaging import read_image, threshold_mask, warp_backward, write_png

_ESTIMATE_DEFAULTS = {
    "scales": "2,4,8,16,32",
    "epsilon": 1.0,
    "sigma_spatial": 4.0,
    "eta": 0.1,
    "sigma_v": None,
    "min_weight": None,
    "neighbor_radius": None,
    "frame_radius": 5,
    "lam": 1.0,
    "tensor_variant": "garcia",
    "interp_tol": 1e-6,
    "interp_max_iters": 500,
    "no_refine": False,
    "alpha": 1.0,
    "gamma": 0.05,
    "penalizer_eps": 1e-3,
    "outer_iters": 40,
    "sor_iters": 30,
    "sor_omega": 1.98,
}


def _parse_scales(text):
    return tuple(float(s) for s in str(text).split(",") if s.strip())


def read_config_file(path) -> dict:
    """Parse a ``key = value`` config file into a string-valued dict."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _coerce(key, value):
    if value is None or key not in _ESTIMATE_DEFAULTS:
        return value
    if key == "scales":
        return str(value)
    if key == "tensor_variant":
        return str(value).replace("-", "_")
    if key == "no_refine":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if key in ("frame_radius", "interp_max_iters", "outer_iters", "sor_iters"):
        return int(float(value))
    return float(value)


def resolve_config(cli_values: dict, file_values: dict) -> dict:
    """Merge flag values over config-file values over defaults."""
    resolved = {}
    for key, default in _ESTIMATE_DEFAULTS.items():
        if cli_values.get(key) is not None:
            resolved[key] = _coerce(key, cli_values[key])
        elif key in file_values:
            resolved[key] = _coerce(key, file_values[key])
        else:
            resolved[key] = default
    return resolved


def config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _estimator_from_config(cfg: dict) -> SkeletalFlowEstimator:
    return SkeletalFlowEstimator(
        scales=_parse_scales(cfg["scales"]),
        epsilon=cfg["epsilon"],
        sigma_spatial=cfg["sigma_spatial"],
        eta=cfg["eta"],
        sigma_v=cfg["sigma_v"],
        min_weight=cfg["min_weight"],
        neighbor_radius=cfg["neighbor_radius"],
        frame_radius=cfg["frame_radius"],
        lam=cfg["lam"],
        tensor_variant=cfg["tensor_variant"],
        interp_tol=cfg["interp_tol"],
        interp_max_iters=cfg["interp_max_iters"],
        refine=not cfg["no_refine"],
        alpha=cfg["alpha"],
        gamma=cfg["gamma"],
        penalizer_eps=cfg["penalizer_eps"],
        outer_iters=cfg["outer_iters"],
        sor_iters=cfg["sor_iters"],
        sor_omega=cfg["sor_omega"],
    )


def _emit_report(report: dict, path):
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_estimate(args) -> int:
    f1 = read_image(args.frame1)
    f2 = read_image(args.frame2)
    if f1.shape != f2.shape:
        print(json.dumps({"error": "frame dimensions differ"}), file=sys.stderr)
        return 2
    file_cfg = read_config_file(args.config) if args.config else {}
    cfg = resolve_config(vars(args), file_cfg)
    est = _estimator_from_config(cfg).fit()
    flow = est.predict(f1, f2)
    flowio.write_flo(flow, args.out)

    report = dict(est.report_)
    report["config"] = cfg
    report["config_hash"] = config_hash(cfg)
    report["flo"] = str(args.out)
    if report["status"] != "ok":
        print(json.dumps({"warning": report.get("warning", "")}), file=sys.stderr)
    if args.viz:
        write_png(flowio.colorize(flow), args.viz)
        report["viz"] = str(args.viz)
    if args.warped:
        write_png(warp_backward(f1, -flow), args.warped)
        report["warped"] = str(args.warped)
    if args.dump_skeleton:
        for i, sk in enumerate(est.skeletons_, start=1):
            write_png(sk.stability, f"{args.dump_skeleton}{i}.png")
        report["skeleton_dumps"] = [f"{args.dump_skeleton}{i}.png" for i in (1, 2)]
    if args.dump_sparse:
        _dump_sparse_csv(est.sparse_, args.dump_sparse)
        report["sparse_dump"] = str(args.dump_sparse)
    _emit_report(report, args.report)
    return 0


def _dump_sparse_csv(sparse, path):
    with open(path, "w") as fh:
        fh.write("x,y,u,v,stability\n")
        if sparse is None:
            return
        for (x, y), (u, v), h in zip(
            sparse.anchors, sparse.displacements, sparse.stabilities
        ):
            fh.write(f"{x:.1f},{y:.1f},{u:.6f},{v:.6f},{h:.3f}\n")


def cmd_synth(args) -> int:
    spec = synth.FlowSpec(
        kind=args.kind,
        tx=args.tx,
        ty=args.ty,
        angle=np.deg2rad(args.angle),
        strength=args.strength,
        radius=args.radius,
        rate=args.rate,
        diffusion=args.diffusion,
        steps=args.steps,
    )
    density = synth.make_density(args.width, args.height, args.seed, args.blobs)
    case = synth.advect(density, spec)
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    write_png(case.f1, os.path.join(outdir, "f1.png"))
    write_png(case.f2, os.path.join(outdir, "f2.png"))
    flowio.write_flo(case.gt, os.path.join(outdir, "gt.flo"))
    descriptor = dict(case.descriptor)
    descriptor.update({"seed": args.seed, "blobs": args.blobs,
                       "width": args.width, "height": args.height})
    with open(os.path.join(outdir, "descriptor.json"), "w") as fh:
        json.dump(descriptor, fh, indent=2, sort_keys=True)
    print(json.dumps({"outdir": outdir, **descriptor}, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    flow = flowio.read_flo(args.flow).astype(np.float64)
    report = {"region": args.region, "params_hash": ""}
    region = None
    f1 = f2 = None
    if args.frame1 and args.frame2:
        f1 = read_image(args.frame1)
        f2 = read_image(args.frame2)
        if args.region == "mask":
            region = threshold_mask(f1, args.epsilon) | threshold_mask(f2, args.epsilon)
        report["ie"] = metrics.interpolation_error(f1, f2, flow, region)
    elif args.region == "mask":
        print(json.dumps({"error": "mask region needs --frame1/--frame2"}), file=sys.stderr)
        return 2
    if args.gt:
        gt = flowio.read_flo(args.gt).astype(np.float64)
        ee_mean, ee_max = metrics.endpoint_error(flow, gt, region)
        report["ee_mean"] = ee_mean
        report["ee_max"] = ee_max
        report["ae_mean"] = metrics.angular_error(flow, gt, region)
    report["params_hash"] = config_hash(
        {k: str(v) for k, v in vars(args).items() if k != "func"}
    )
    _emit_report(report, args.report)
    return 0


def cmd_viz(args) -> int:
    flow = flowio.read_flo(args.flow)
    write_png(flowio.colorize(flow.astype(np.float64), args.max_mag), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smokeflow",
                                description="Skeletal dense motion estimation for smoke")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate dense flow for a frame pair")
    e.add_argument("--frame1", required=True)
    e.add_argument("--frame2", required=True)
    e.add_argument("--out", required=True, help="output .flo path")
    e.add_argument("--config", help="key = value config file")
    e.add_argument("--scales", help="comma-separated blur scales, e.g. 2,4,8,16,32")
    e.add_argument("--epsilon", type=float, help="segmentation threshold (8-bit scale)")
    e.add_argument("--sigma-spatial", dest="sigma_spatial", type=float)
    e.add_argument("--eta", type=float)
    e.add_argument("--sigma-v", dest="sigma_v", type=float)
    e.add_argument("--min-weight", dest="min_weight", type=float)
    e.add_argument("--neighbor-radius", dest="neighbor_radius", type=float)
    e.add_argument("--frame-radius", dest="frame_radius", type=int)
    e.add_argument("--lambda", dest="lam", type=float, help="interpolation smoothness")
    e.add_argument("--tensor-variant", dest="tensor_variant",
                   choices=["garcia", "paper-literal", "paper_literal"])
    e.add_argument("--interp-tol", dest="interp_tol", type=float)
    e.add_argument("--interp-max-iters", dest="interp_max_iters", type=int)
    e.add_argument("--no-refine", dest="no_refine", action="store_const", const=True,
                   help="skip variational refinement (noEF mode)")
    e.add_argument("--alpha", type=float)
    e.add_argument("--gamma", type=float)
    e.add_argument("--penalizer-eps", dest="penalizer_eps", type=float)
    e.add_argument("--outer-iters", dest="outer_iters", type=int)
    e.add_argument("--sor-iters", dest="sor_iters", type=int)
    e.add_argument("--sor-omega", dest="sor_omega", type=float)
    e.add_argument("--viz", help="write a colorized PNG of the flow")
    e.add_argument("--warped", help="write the flow-warped first frame as PNG")
    e.add_argument("--dump-skeleton", dest="dump_skeleton",
                   help="prefix for stability-map PNG dumps")
    e.add_argument("--dump-sparse", dest="dump_sparse",
                   help="CSV path for the sparse flow (x,y,u,v,stability)")
    e.add_argument("--report", help="write the JSON run report here instead of stdout")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("synth", help="generate a synthetic frame pair with ground truth")
    s.add_argument("--kind", required=True, choices=list(synth.KINDS))
    s.add_argument("--tx", type=float, default=0.0)
    s.add_argument("--ty", type=float, default=0.0)
    s.add_argument("--angle", type=float, default=0.0, help="rotation angle in degrees")
    s.add_argument("--strength", type=float, default=0.0, help="vortex peak angle (radians)")
    s.add_argument("--radius", type=float, default=60.0, help="vortex radius (px)")
    s.add_argument("--rate", type=float, default=0.0, help="shear rate")
    s.add_argument("--diffusion", type=float, default=0.0)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--blobs", type=int, default=5)
    s.add_argument("--outdir", required=True)
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("eval", help="score a flow field")
    v.add_argument("--flow", required=True, help=".flo to evaluate")
    v.add_argument("--gt", help="ground-truth .flo (enables EE/AE)")
    v.add_argument("--frame1", help="first frame (enables IE)")
    v.add_argument("--frame2", help="second frame (enables IE)")
    v.add_argument("--region", choices=["full", "mask"], default="full")
    v.add_argument("--epsilon", type=float, default=1.0)
    v.add_argument("--report", help="write the JSON report here instead of stdout")
    v.set_defaults(func=cmd_eval)

    z = sub.add_parser("viz", help="render a .flo file as a color-wheel PNG")
    z.add_argument("flow")
    z.add_argument("out")
    z.add_argument("--max-mag", dest="max_mag", type=float)
    z.set_defaults(func=cmd_viz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
