"""Command-line front end: each pipeline stage plus the end-to-end forge.

Exit codes: 0 success, 1 runtime failure (one-line diagnostic on stderr),
2 usage error. Progress lines on stdout carry a ``[forge]`` prefix; reports
are written to files or printed after a ``---`` separator so they never mix
with progress output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import pipeline
from .errors import ForgeError
from .metrics import evaluate, parse_predictions, write_report_json
from .quality import accept_texture
from .render import render
from .stylize import StylizeParams, stylize
from .texture import RustClass, generate_rust_texture, import_textures, read_png, write_png


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rustforge",
        description="Synthesize annotated rust-detection training images and evaluate detector outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_forge = sub.add_parser("forge", help="generate a full annotated dataset from a config file")
    p_forge.add_argument("--config", required=True, help="path to forge.json")
    p_forge.add_argument("--out", help="override the configured output directory")
    p_forge.add_argument("--seed", type=int, help="override the configured seed")

    p_tex = sub.add_parser("textures", help="texture generation and filtering")
    tex_sub = p_tex.add_subparsers(dest="textures_command", required=True, metavar="SUBCOMMAND")

    p_gen = tex_sub.add_parser("gen", help="generate procedural rust textures")
    p_gen.add_argument("--class", dest="rust_class", required=True, help="default | rust streaks | complete rust")
    p_gen.add_argument("--base", required=True, help="base texture PNG")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--count", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)

    p_filter = tex_sub.add_parser("filter", help="score and filter a directory of textures")
    p_filter.add_argument("--in", dest="in_dir", required=True, help="directory of PNG textures")
    p_filter.add_argument("--class", dest="rust_class", required=True)
    p_filter.add_argument("--report", help="write the JSON report here instead of stdout")

    p_sty = sub.add_parser("stylize", help="transfer rust style onto a content texture")
    p_sty.add_argument("--content", required=True)
    p_sty.add_argument("--style", required=True)
    p_sty.add_argument("--out", required=True)
    p_sty.add_argument("--strength", type=float, default=1.0)
    p_sty.add_argument("--detail", type=float, default=0.6)

    p_render = sub.add_parser("render", help="debug-render a single configured scene")
    p_render.add_argument("--config", required=True)
    p_render.add_argument("--index", type=int, required=True)
    p_render.add_argument("--class", dest="rust_class", required=True)
    p_render.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="evaluate predictions against a generated dataset")
    p_eval.add_argument("--dataset", required=True, help="dataset directory (output of forge)")
    p_eval.add_argument("--preds", required=True, help="predictions file: stem class conf cx cy w h")
    p_eval.add_argument("--iou", type=float, default=0.5)
    p_eval.add_argument("--report", help="write report.json here")

    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    """Pure argv parsing; argparse handles --help (exit 0) and usage errors (exit 2)."""
    return build_parser().parse_args(argv)


def _load_config_with_overrides(args) -> pipeline.ForgeConfig:
    config = pipeline.load_config(args.config)
    overrides = {}
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _cmd_forge(args) -> int:
    config = _load_config_with_overrides(args)
    manifest = pipeline.generate_dataset(config, log=lambda line: print(f"[forge] {line}"))
    print(f"[forge] wrote {len(manifest.entries)} images to {manifest.output_dir}")
    return 0


def _cmd_textures_gen(args) -> int:
    rust_class = RustClass.from_name(args.rust_class)
    base = read_png(args.base)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = pipeline.derive_rng(args.seed, "textures-gen", i).next_u64()
        tex = generate_rust_texture(base, rust_class, seed)
        write_png(tex, out_dir / f"{rust_class.slug}_{i:04d}.png")
        print(f"[forge] generated {rust_class.slug}_{i:04d}.png")
    return 0


def _cmd_textures_filter(args) -> int:
    rust_class = RustClass.from_name(args.rust_class)
    items, failures = import_textures(args.in_dir, rust_class)
    results = []
    rejections = 0
    for tex, record in items:
        verdict = accept_texture(tex, rust_class)
        rejections += not verdict.accepted
        results.append(
            {
                "file": record.file_name,
                "accepted": verdict.accepted,
                "coverage": verdict.coverage,
                "clutter": verdict.clutter,
                "reasons": [r.value for r in verdict.reasons],
            }
        )
    report = {
        "directory": args.in_dir,
        "class": rust_class.canonical_name,
        "results": results,
        "errors": [{"file": f.file_name, "reason": f.reason} for f in failures],
        "rejections": rejections,
    }
    print(f"[forge] filtered {len(results)} textures, {rejections} rejected, {len(failures)} unreadable")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    else:
        print("---")
        print(json.dumps(report, indent=2))
    return 0


def _cmd_stylize(args) -> int:
    params = StylizeParams(strength=args.strength, detail_weight=args.detail)
    result = stylize(read_png(args.content), read_png(args.style), params)
    write_png(result, args.out)
    print(f"[forge] wrote {args.out}")
    return 0


def _cmd_render(args) -> int:
    config = pipeline.load_config(args.config)
    rust_class = RustClass.from_name(args.rust_class)
    sample = pipeline.sample_scene(config, rust_class, args.index)
    frame = render([sample.scene_object], sample.camera, sample.light, config.resolution, config.background)
    write_png(frame.color, args.out)
    print(f"[forge] wrote {args.out}")
    return 0


def _cmd_eval(args) -> int:
    gts = pipeline.load_ground_truth(args.dataset)
    with open(args.preds, "r", encoding="utf-8") as fh:
        dets = parse_predictions(fh)
    report = evaluate(gts, dets, iou_threshold=args.iou)
    print(f"[forge] evaluated {len(dets)} detections against {len(gts)} ground-truth boxes")
    if args.report:
        write_report_json(report, args.report)
        print(f"[forge] wrote {args.report}")
    print("---")
    print(report.format_table())
    return 0


_DISPATCH = {
    "forge": _cmd_forge,
    "stylize": _cmd_stylize,
    "render": _cmd_render,
    "eval": _cmd_eval,
}


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command; maps runtime failures to exit code 1."""
    try:
        if args.command == "textures":
            handler = _cmd_textures_gen if args.textures_command == "gen" else _cmd_textures_filter
            return handler(args)
        return _DISPATCH[args.command](args)
    except (ForgeError, OSError, ValueError) as exc:
        print(f"rustforge: error: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
