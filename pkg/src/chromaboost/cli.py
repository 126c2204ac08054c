"""Command-line interface: dataset prep, training, enhancement, evaluation.

Exit codes: 0 success, 1 usage error, 2 data/file error, 3 numeric error.
Every subcommand prints its effective configuration (defaults resolved)
before doing any work, so a run can be reproduced from its log.
Set CHROMABOOST_LOG=DEBUG|INFO|WARNING to control log verbosity.
"""

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .checkpoint import CheckpointError, load_params
from .color import quantize_plane, rgb_to_yuv444, subsample_420, upsample_420, yuv444_to_rgb
from .degrade import synth_degrade
from .enhance import enhance_frame
from .metrics import EvalReport, EvalRow, bd_rate, psnr, read_rd_csv
from .tensor import LEAKY_SLOPE, NumericError
from .training import TrainConfig, best_checkpoint_path, finetune, train
from .yuvio import YuvImage, frame_count, read_ppm, read_yuv420, write_ppm, write_yuv420

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def _print_config(command: str, values: dict) -> None:
    pairs = " ".join(f"{k}={values[k]}" for k in sorted(values))
    print(f"config: command={command} {pairs}")


def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--degraded-dir", help="directory of degraded .yuv files")
    sub.add_argument("--original-dir", help="directory of matching original .yuv files")
    sub.add_argument("--width", type=int)
    sub.add_argument("--height", type=int)
    sub.add_argument("--out", dest="out_checkpoint", help="output checkpoint path")
    sub.add_argument("--qp-label", type=int)
    sub.add_argument("--batch-size", type=int)
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--lr", dest="base_lr", type=float)
    sub.add_argument("--decay-factor", type=float)
    sub.add_argument("--decay-epoch", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--channels", type=int)
    sub.add_argument("--leaky-slope", type=float)
    sub.add_argument("--no-luma-guidance", action="store_true", default=None,
                     help="train the chroma-only ablation")
    sub.add_argument("--init-checkpoint")
    sub.add_argument("--config", help="key=value file; flags override it")


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _parse_config_value(name: str, raw: str):
    field = _CONFIG_FIELDS[name]
    text = raw.strip()
    if field.type in ("bool", bool) or name == "use_luma_guidance":
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise UsageError(f"config: bad boolean for {name}: {raw!r}")
    for caster in (int, float):
        if field.type in (caster.__name__, caster):
            try:
                return caster(text)
            except ValueError:
                raise UsageError(f"config: bad {caster.__name__} for {name}: {raw!r}")
    return text


def _build_train_config(args: argparse.Namespace) -> TrainConfig:
    values: dict = {}
    if args.config:
        for lineno, line in enumerate(Path(args.config).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{args.config}:{lineno}: expected key=value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise UsageError(f"{args.config}:{lineno}: unknown key {key!r}")
            values[key] = _parse_config_value(key, raw)
    for name in _CONFIG_FIELDS:
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            values[name] = cli_value
    if args.no_luma_guidance:
        values["use_luma_guidance"] = False
    missing = [k for k in ("degraded_dir", "original_dir", "width", "height", "out_checkpoint")
               if k not in values]
    if missing:
        raise UsageError(f"missing required settings: {', '.join(missing)}")
    return TrainConfig(**values)


def _cmd_convert(args) -> int:
    if args.mode == "rgb2yuv":
        rgb = read_ppm(args.input)
        if rgb.shape[0] % 2 or rgb.shape[1] % 2:
            raise ValueError(f"{args.input}: dims must be even for 4:2:0, got {rgb.shape[:2]}")
        y, u, v = rgb_to_yuv444(rgb)
        uu, vv = subsample_420(u, v)
        img = YuvImage(width=rgb.shape[1], height=rgb.shape[0],
                       y=quantize_plane(y), u=uu, v=vv)
        write_yuv420(img, args.output)
    else:
        if args.width is None or args.height is None:
            raise UsageError("yuv2rgb needs --width and --height")
        img = read_yuv420(args.input, args.width, args.height, args.frame)
        u, v = upsample_420(img.u, img.v)
        write_ppm(yuv444_to_rgb(img.y, u, v), args.output)
    return 0


def _cmd_degrade(args) -> int:
    frames = frame_count(args.input, args.width, args.height)
    for idx in range(frames):
        img = read_yuv420(args.input, args.width, args.height, idx)
        out = synth_degrade(img, args.severity, args.seed + idx)
        write_yuv420(out, args.output, append=idx > 0)
    log.info("degraded %d frame(s) at severity %d", frames, args.severity)
    return 0


def _cmd_train(args, base_checkpoint: str | None = None) -> int:
    cfg = _build_train_config(args)
    if base_checkpoint is not None:
        out = finetune(base_checkpoint, cfg)
    else:
        out = train(cfg)
    print(f"checkpoint: {out}")
    print(f"best checkpoint: {best_checkpoint_path(out)}")
    return 0


def _cmd_enhance(args) -> int:
    params = load_params(args.checkpoint, leaky_slope=args.leaky_slope,
                         use_luma_guidance=not args.no_luma_guidance)
    planes = ("u", "v") if args.plane == "both" else (args.plane,)
    frames = frame_count(args.input, args.width, args.height)
    for idx in range(frames):
        img = read_yuv420(args.input, args.width, args.height, idx)
        out = enhance_frame(img, params, planes)
        write_yuv420(out, args.output, append=idx > 0)
    log.info("enhanced %d frame(s), planes %s", frames, ",".join(planes))
    return 0


def _cmd_eval(args) -> int:
    counts = {frame_count(p, args.width, args.height)
              for p in (args.degraded, args.enhanced, args.original)}
    if len(counts) != 1:
        raise ValueError(f"frame counts differ across inputs: {sorted(counts)}")
    rows = []
    for idx in range(counts.pop()):
        deg = read_yuv420(args.degraded, args.width, args.height, idx)
        enh = read_yuv420(args.enhanced, args.width, args.height, idx)
        org = read_yuv420(args.original, args.width, args.height, idx)
        for plane in ("u", "v"):
            rows.append(EvalRow(
                frame=idx,
                plane=plane,
                psnr_baseline=psnr(deg.plane(plane), org.plane(plane)),
                psnr_enhanced=psnr(enh.plane(plane), org.plane(plane)),
            ))
    report = EvalReport(rows)
    print(report.to_text())
    if args.csv:
        report.to_csv(args.csv)
    return 0


def _cmd_bdrate(args) -> int:
    value = bd_rate(read_rd_csv(args.anchor), read_rd_csv(args.test))
    print(f"{value:+.6f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="chromaboost",
                     description="Chroma-plane enhancement for compressed YUV 4:2:0 images")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("convert", help="PPM <-> single-frame YUV 4:2:0")
    p.add_argument("--mode", choices=("rgb2yuv", "yuv2rgb"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--frame", type=int, default=0)
    p.set_defaults(func=_cmd_convert)

    p = subs.add_parser("degrade", help="synthetically degrade a YUV file")
    p.add_argument("--input", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--severity", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_degrade)

    p = subs.add_parser("train", help="train from scratch on U-plane patches")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("finetune", help="continue training from a base checkpoint")
    p.add_argument("--base-checkpoint", required=True)
    _add_train_flags(p)
    p.set_defaults(func=lambda a: _cmd_train(a, base_checkpoint=a.base_checkpoint))

    p = subs.add_parser("enhance", help="enhance chroma planes of a YUV file")
    p.add_argument("--input", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--plane", choices=("u", "v", "both"), default="both")
    p.add_argument("--output", required=True)
    p.add_argument("--leaky-slope", type=float, default=LEAKY_SLOPE)
    p.add_argument("--no-luma-guidance", action="store_true")
    p.set_defaults(func=_cmd_enhance)

    p = subs.add_parser("eval", help="PSNR / delta-PSNR report for file triples")
    p.add_argument("--degraded", required=True)
    p.add_argument("--enhanced", required=True)
    p.add_argument("--original", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("bdrate", help="Bjontegaard rate delta between two RD CSVs")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=_cmd_bdrate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("CHROMABOOST_LOG", "INFO").upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        shown = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
        shown.setdefault("seed", 0)
        _print_config(args.command, shown)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
