"""``lodsketch`` command line: synth, sketch, reduce, eval, validate, capture-plan, contact-sheet.

Exit codes: 0 all entries succeeded, 1 failures or violations present,
2 configuration error before any work was done.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import pipeline
from .capture import OrbitPlan, export_plan_json, generate_orbit_plan
from .contact_sheet import contact_sheet
from .dataset import Manifest, simulate_manifest, validate
from .imagecore import StructuringElement
from .metrics import SsimConfig
from .pngio import write_png
from .reduce import ReducerError
from .sketchpipe import Lod1SketchParams, SketchParams, parse_level

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--manifest", help="manifest.jsonl or the dataset root holding it")
    p.add_argument("--out", help="output location (meaning depends on the subcommand)")
    return p


def _sketch_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--blackhat-size", type=int, default=3)
    p.add_argument("--blackhat-shape", choices=("square", "cross"), default="square")
    p.add_argument("--blackhat-gain", type=float, default=1.0)
    p.add_argument("--canny-sigma", type=float, default=1.4)
    p.add_argument("--canny-low", type=float, default=50)
    p.add_argument("--canny-high", type=float, default=150)
    p.add_argument("--min-area", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    ap = argparse.ArgumentParser(prog="lodsketch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="render synthetic multi-LoD groups")
    p.add_argument("--groups", type=int, default=1)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--fov", type=float, default=50.0)

    p = sub.add_parser("sketch", parents=[common], help="extract sketches for one LoD")
    p.add_argument("--level", required=True)
    _sketch_flags(p)

    p = sub.add_parser("reduce", parents=[common], help="run a detail-reduction stage")
    p.add_argument("--stage", choices=("3to2", "2to1"), required=True)
    p.add_argument("--backend", choices=("proxy", "remote"), default="proxy")
    p.add_argument("--reducer-url", default=None)
    p.add_argument("--depth-provider", choices=("rendered", "remote", "planar"), default="rendered")
    p.add_argument("--depth-url", default=None)
    p.add_argument("--prompt", default=None)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--backoff", type=float, default=0.5)
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--max-failures", type=int, default=0, help="exit 1 when failures exceed this")
    _sketch_flags(p)

    p = sub.add_parser("eval", parents=[common], help="SSIM/MSE/HD reports for a stage")
    p.add_argument("--stage", choices=("3to2", "2to1", "self"), required=True)
    p.add_argument("--compare", choices=("consecutive", "groundtruth"), default="consecutive")
    p.add_argument("--bin-thr", type=int, default=128)
    p.add_argument("--level", default="3", help="LoD for --stage self")
    p.add_argument("--modality", default="sketch", help="modality for --stage self")

    p = sub.add_parser("validate", parents=[common], help="check dataset count laws")
    p.add_argument("root", nargs="?", help="dataset root (alternative to --manifest)")
    p.add_argument("--simulate-groups", type=int, default=None,
                   help="validate a manifest-only simulation of N complete groups")

    p = sub.add_parser("capture-plan", parents=[common], help="export the orbit plan as JSON")
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--azimuth-step", type=float, default=10.0)
    p.add_argument("--azimuth-end", type=float, default=350.0)
    p.add_argument("--elevation-step", type=float, default=10.0)
    p.add_argument("--elevation-end", type=float, default=60.0)

    p = sub.add_parser("contact-sheet", parents=[common], help="montage of the LoD progression")
    p.add_argument("--group", required=True)
    p.add_argument("--view", type=int, required=True)
    return ap


def _load_manifest(args) -> Manifest:
    path = args.manifest or getattr(args, "root", None)
    if not path:
        raise ConfigError("--manifest is required")
    try:
        return Manifest.read(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc


def _params(args) -> tuple[SketchParams, Lod1SketchParams]:
    try:
        sp = SketchParams(args.alpha, args.beta, StructuringElement(args.blackhat_shape, args.blackhat_size),
                          args.blackhat_gain)
        lp = Lod1SketchParams(args.canny_sigma, args.canny_low, args.canny_high, args.min_area)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return sp, lp


def _report(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_synth(args) -> int:
    if not args.out:
        raise ConfigError("synth needs --out")
    if args.groups < 0 or args.size < 1 or args.jobs < 1:
        raise ConfigError("groups >= 0, size >= 1 and jobs >= 1 required")
    man, res = pipeline.synth(args.out, args.groups, args.seed, args.size, args.jobs, args.fov)
    _report({"command": "synth", "entries": len(man), "written": res.written, "failures": res.failures})
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_sketch(args) -> int:
    man = _load_manifest(args)
    try:
        level = parse_level(args.level)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sp, lp = _params(args)
    res = pipeline.sketch(man, level, sp, lp, args.jobs)
    _report({"command": "sketch", "level": level, "written": res.written, "skipped": res.skipped,
             "failures": res.failures})
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_reduce(args) -> int:
    man = _load_manifest(args)
    sp, lp = _params(args)
    cfg = pipeline.ReduceConfig(
        stage=args.stage, backend=args.backend, reducer_url=args.reducer_url,
        depth_provider=args.depth_provider, depth_url=args.depth_url, prompt=args.prompt, seed=args.seed,
        sketch_params=sp, lod1_params=lp, timeout=args.timeout, retries=args.retries, backoff=args.backoff,
        max_in_flight=args.max_in_flight)
    try:
        res = pipeline.reduce(man, cfg, args.jobs)
    except (ReducerError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    _report({"command": "reduce", "stage": args.stage, "written": res.written, "skipped": res.skipped,
             "failures": res.failures, **res.notes})
    return EXIT_OK if len(res.failures) <= args.max_failures else EXIT_FAIL


def cmd_eval(args) -> int:
    man = _load_manifest(args)
    reports, rows, skipped, paths = pipeline.evaluate(
        man, args.stage, args.compare, args.out, args.bin_thr, SsimConfig(), args.jobs,
        lod=parse_level(args.level), modality=args.modality)
    _report({"command": "eval", "stage": args.stage, "compare": args.compare, "pairs": len(reports),
             "skipped": skipped, "reports": paths[0], "summary": paths[1], "rows": rows})
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.simulate_groups is not None:
        man = simulate_manifest(args.simulate_groups)
    else:
        man = _load_manifest(args)
    rep = validate(man)
    out = rep.to_dict()
    out["counts"] = {
        "total": len(man),
        "rgb": sum(1 for e in man if e.modality == "rgb"),
        "depth": sum(1 for e in man if e.modality == "depth"),
    }
    text = json.dumps(out, sort_keys=True, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_capture_plan(args) -> int:
    try:
        plan = OrbitPlan(azimuth_end=args.azimuth_end, azimuth_step=args.azimuth_step,
                         elevation_end=args.elevation_end, elevation_step=args.elevation_step, radius=args.radius)
        poses = generate_orbit_plan(plan)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = export_plan_json(poses, args.out)
    if not args.out:
        print(text)
    return EXIT_OK


def cmd_contact_sheet(args) -> int:
    man = _load_manifest(args)
    sheet, missing = contact_sheet(man, args.group, args.view)
    out = args.out or os.path.join(man.root, "reports", f"contact_{args.group}_{args.view:03d}.png")
    write_png(out, sheet)
    _report({"command": "contact-sheet", "out": out, "missing": missing})
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth, "sketch": cmd_sketch, "reduce": cmd_reduce, "eval": cmd_eval,
    "validate": cmd_validate, "capture-plan": cmd_capture_plan, "contact-sheet": cmd_contact_sheet,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"lodsketch {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
