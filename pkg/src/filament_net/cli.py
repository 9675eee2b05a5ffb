"""``filament-net`` command line: synth, train, detect, eval.

Exit status: 0 success, 1 usage error, 2 data or format error, 3 numeric failure.
Any long option may also be given in a ``--config`` file of ``key=value``
lines; options on the command line win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import learning, metrics, network, pipeline, synthgen
from .errors import DegenerateTrainingSet, FormatError, NumericalError, ShapeError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _optional_float(text: str) -> float | None:
    return None if text.lower() in ("", "none", "auto") else float(text)


def _add_model_options(p: argparse.ArgumentParser, training: bool) -> None:
    p.add_argument("--robust", action=argparse.BooleanOptionalAction, default=None,
                   help="Huber IRLS background fit (default on for training)")
    p.add_argument("--huber-delta", type=_optional_float, default=None,
                   help="fixed Huber cutoff in window-sum units; default 1.345*MAD")
    p.add_argument("--bg-refit", action=argparse.BooleanOptionalAction, default=None,
                   help="refit the background on every detected image (default on)")
    if training:
        p.add_argument("--k", type=int, default=5, help="odd window side (default 5)")
        p.add_argument("--degree", type=int, choices=(1, 2), default=2)
        p.add_argument("--lr", type=float, default=0.1)
        p.add_argument("--epochs", type=int, default=200)
        p.add_argument("--seed", type=int, default=0, help="perceptron shuffle seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="filament-net", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=55)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--noise-sigma", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filaments", type=int, default=1, help="filaments per fragment")
    p.add_argument("--depth-min", type=float, default=40.0)
    p.add_argument("--depth-max", type=float, default=50.0)
    p.add_argument("--half-width-min", type=float, default=2.0)
    p.add_argument("--half-width-max", type=float, default=4.0)
    p.add_argument("--level-min", type=float, default=145.0)
    p.add_argument("--level-max", type=float, default=165.0)
    p.add_argument("--span-min", type=float, default=20.0, help="smallest |vertical gradient|")
    p.add_argument("--span-max", type=float, default=40.0, help="largest |vertical gradient|")

    p = sub.add_parser("train", help="train a model on one labelled fragment")
    p.add_argument("image")
    p.add_argument("mask")
    p.add_argument("model_out")
    _add_model_options(p, training=True)

    p = sub.add_parser("detect", help="classify an image, or every image in a directory")
    p.add_argument("image")
    p.add_argument("model")
    p.add_argument("mask_out")
    _add_model_options(p, training=False)
    p.add_argument("--pad", action=argparse.BooleanOptionalAction, default=False,
                   help="write a full-size mask with a non-filament border")
    p.add_argument("--exclude", action="append", default=[], help="fragment id to skip (directory mode)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="score predicted masks against ground truth as CSV")
    p.add_argument("pred")
    p.add_argument("truth")
    p.add_argument("--k", type=int, default=5)
    return parser


def _config_tokens(path: str, sub: argparse.ArgumentParser) -> list[str]:
    known = {s for a in sub._actions for s in a.option_strings}
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (x.strip() for x in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if flag not in known:
                continue  # keys for other subcommands
            if f"--no-{flag[2:]}" in known:
                v = value.lower()
                if v not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise UsageError(f"{path}:{lineno}: {key} needs a boolean, got {value!r}")
                tokens.append(flag if v in ("1", "true", "yes", "on") else f"--no-{flag[2:]}")
            else:
                tokens += [flag, value]
    return tokens


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub = subparsers.choices[args.command]
        idx = argv.index(args.command)
        # file values first so command-line flags override them
        argv = list(argv[: idx + 1]) + _config_tokens(args.config, sub) + list(argv[idx + 1:])
        args = parser.parse_args(argv)
    return args


def cmd_synth(args) -> int:
    base = synthgen.SynthParams(n=args.height, m=args.width, noise_sigma=args.noise_sigma)
    ranges = synthgen.CorpusRanges(
        level=(args.level_min, args.level_max),
        vertical_span=(args.span_min, args.span_max),
        depth=(args.depth_min, args.depth_max),
        half_width=(args.half_width_min, args.half_width_max),
        filaments=(args.filaments, args.filaments),
    )
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    ids = pipeline.write_corpus(args.out_dir, args.count, base, args.seed, ranges)
    print(f"wrote {len(ids)} fragments to {args.out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = pipeline.RunConfig(
        k=args.k,
        degree=args.degree,
        robust=True if args.robust is None else args.robust,
        huber_delta=args.huber_delta,
        perceptron=learning.PerceptronConfig(args.lr, args.epochs, args.seed),
        bg_refit=True if args.bg_refit is None else args.bg_refit,
    )
    out = pipeline.train_files(args.image, args.mask, cfg)
    network.save_model(out.model, args.model_out)
    print(f"training error: {out.training_error} of {out.examples}")
    print(f"background rms: {out.background_rms:.6g}")
    return EXIT_OK


def cmd_detect(args) -> int:
    model = network.load_model(args.model)
    model = pipeline.apply_overrides(model, args.bg_refit, args.robust, args.huber_delta)
    if pipeline.is_dir(args.image):
        results = pipeline.detect_directory(args.image, model, args.mask_out, args.pad,
                                            args.exclude, args.workers)
        for fid, det in results:
            print(f"{fid} filament pixels: {int(det.labels.sum())}")
    else:
        det = pipeline.detect_files(args.image, model, args.mask_out, args.pad)
        print(f"filament pixels: {int(det.labels.sum())}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if pipeline.is_dir(args.pred):
        rows = pipeline.eval_directory(args.pred, args.truth, args.k)
        sys.stdout.write(metrics.scores_to_csv(rows))
    else:
        s = pipeline.eval_files(args.pred, args.truth, args.k)
        sys.stdout.write(metrics.scores_to_csv([(Path(args.pred).stem, s)], mean_label=None))
        rows = [(Path(args.pred).stem, s)]
    for fid, s in rows:
        if s.undefined:
            print(f"warning: {fid}: zero denominator for {', '.join(s.undefined)}; reported as 0",
                  file=sys.stderr)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "detect": cmd_detect, "eval": cmd_eval}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, ShapeError, DegenerateTrainingSet, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
