"""Batch command-line front end.

One subcommand per flow plus `run-all`. Each input image is processed
independently (optionally in parallel); output files land in the chosen
directory as `<stem>.<flow>.png`, with PGM/JSON intermediates on
request. Exit codes: 0 success, 1 input problem, 2 numerical or stage
failure. A per-stage timing table is printed for every processed image.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import (
    DegenerateInputError,
    DegenerateResultError,
    InvalidInputError,
    NprError,
    NumericalError,
    UnsupportedFormatError,
)
from .imgcore import load_png, mask_to_image, save_pgm, save_png
from .pipeline import (
    PipelineConfig,
    TargetRegion,
    _stage,
    render_abstracted,
    render_exaggerated,
    render_exaggerated_defocus,
    run_all,
    segment_salient,
)
from .saliency import saliency_map

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STAGE = 2

_INPUT_ERRORS = (InvalidInputError, DegenerateInputError, UnsupportedFormatError)
_STAGE_ERRORS = (NumericalError, DegenerateResultError)

_COMMANDS = (
    ("saliency", "compute and save the saliency map"),
    ("segment", "extract the salient object mask and bounding box"),
    ("exaggerate", "boost detail in the salient region"),
    ("defocus-exaggerate", "boost salient detail over a defocused background"),
    ("abstract", "cartoon-abstract the chosen region"),
    ("run-all", "produce every flow's output in one pass"),
)


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems as input errors."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nprkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in _COMMANDS:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("inputs", nargs="+", metavar="IMAGE", help="input PNG file")
        cmd.add_argument(
            "-o",
            "--output",
            required=True,
            metavar="DIR",
            help="output directory, created if absent",
        )
        cmd.add_argument("--config", metavar="PATH", help="JSON config file")
        cmd.add_argument(
            "--seed",
            type=int,
            default=None,
            help="override the segmentation seed from the config",
        )
        cmd.add_argument(
            "--threads", type=int, default=1, help="parallel image workers"
        )
        cmd.add_argument(
            "--dump-intermediates",
            action="store_true",
            help="also write saliency map, mask, and bounding box",
        )
        cmd.add_argument(
            "--dump-config",
            metavar="PATH",
            help="write the effective config as JSON",
        )
        if name == "abstract":
            cmd.add_argument(
                "--region",
                choices=[r.value for r in TargetRegion],
                default=TargetRegion.FOREGROUND.value,
                help="which side of the mask to abstract",
            )
    return parser


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config is None:
        cfg = PipelineConfig()
    else:
        cfg = PipelineConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, grabcut=dataclasses.replace(cfg.grabcut, seed=args.seed)
        )
    return cfg


def _save_intermediates(
    outdir: Path, stem: str, smap, box, mask
) -> None:
    save_pgm(smap, outdir / f"{stem}.saliency.pgm")
    save_pgm(mask_to_image(mask), outdir / f"{stem}.mask.pgm")
    body = {"x0": box.x0, "y0": box.y0, "x1": box.x1, "y1": box.y1}
    path = outdir / f"{stem}.bbox.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _process(
    command: str,
    in_path: str,
    outdir: Path,
    cfg: PipelineConfig,
    region: str,
    dump: bool,
) -> dict[str, float]:
    """Run one command on one image; returns the stage timing table."""
    img = load_png(in_path)
    stem = Path(in_path).stem
    timings: dict[str, float] = {}

    if command == "saliency":
        with _stage("saliency", timings):
            smap = saliency_map(img, cfg.saliency)
        save_pgm(smap, outdir / f"{stem}.saliency.pgm")
        return timings

    if command == "segment":
        smap, box, mask = segment_salient(img, cfg, timings)
        save_pgm(mask_to_image(mask), outdir / f"{stem}.mask.pgm")
        body = {"x0": box.x0, "y0": box.y0, "x1": box.x1, "y1": box.y1}
        bbox_path = outdir / f"{stem}.bbox.json"
        bbox_path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        if dump:
            save_pgm(smap, outdir / f"{stem}.saliency.pgm")
        return timings

    if command == "run-all":
        outs = run_all(img, cfg)
        save_png(outs.exaggerated, outdir / f"{stem}.exaggerated.png")
        save_png(outs.exaggerated_defocus, outdir / f"{stem}.defocus.png")
        save_png(outs.fg_abstracted, outdir / f"{stem}.abstract-fg.png")
        save_png(outs.bg_abstracted, outdir / f"{stem}.abstract-bg.png")
        if dump:
            _save_intermediates(outdir, stem, outs.saliency_map, outs.bbox, outs.mask)
        return outs.timings

    smap, box, mask = segment_salient(img, cfg, timings)
    if command == "exaggerate":
        out = render_exaggerated(img, mask, cfg, timings)
        save_png(out, outdir / f"{stem}.exaggerated.png")
    elif command == "defocus-exaggerate":
        out = render_exaggerated_defocus(img, mask, cfg, timings)
        save_png(out, outdir / f"{stem}.defocus.png")
    else:
        out = render_abstracted(img, mask, cfg, TargetRegion(region), timings)
        save_png(out, outdir / f"{stem}.abstract-{region}.png")
    if dump:
        _save_intermediates(outdir, stem, smap, box, mask)
    return timings


def _print_timings(in_path: str, timings: dict[str, float]) -> None:
    print(in_path)
    for stage, seconds in timings.items():
        print(f"  {stage:<14} {seconds:8.3f}s")
    print(f"  {'total':<14} {sum(timings.values()):8.3f}s")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NprError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.dump_config:
        Path(args.dump_config).write_text(cfg.to_json())

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    workers = max(1, args.threads)
    region = getattr(args, "region", TargetRegion.FOREGROUND.value)

    code = EXIT_OK
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _process,
                args.command,
                path,
                outdir,
                cfg,
                region,
                args.dump_intermediates,
            )
            for path in args.inputs
        ]
        for path, future in zip(args.inputs, futures):
            try:
                _print_timings(path, future.result())
            except _STAGE_ERRORS as exc:
                print(f"error: {path}: {exc}", file=sys.stderr)
                code = max(code, EXIT_STAGE)
            except (*_INPUT_ERRORS, OSError) as exc:
                print(f"error: {path}: {exc}", file=sys.stderr)
                code = max(code, EXIT_INPUT)
    return code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
