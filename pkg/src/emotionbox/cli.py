"""Command-line entry point.

One executable, six subcommands: encode, decode, features, train, generate,
evaluate.  Defaults for any flag can live in an ``emotionbox.conf`` file in
the working directory as ``subcommand.flag = value`` lines; explicit flags
beat the config file, which beats built-in defaults.  Unknown config keys are
rejected by name.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import checkpoint as ckpt_io
from . import events as ev
from .errors import EmotionBoxError
from .evaluation import comparison_csv, compare
from .features import (
    Emotion,
    conditioning_track,
    mean_density,
    pitch_histogram,
)
from .generation import SamplerConfig, generate_to_midi
from .midi_io import parse_midi, write_midi
from .model import ModelConfig
from .training import FEATURES, LABELS, TrainingConfig, train
from .util import atomic_write_bytes, atomic_write_text

CONFIG_FILENAME = "emotionbox.conf"


@dataclass(frozen=True)
class _Opt:
    name: str
    type: Callable[[str], Any]
    default: Any = None
    help: str = ""
    required: bool = False
    choices: tuple[str, ...] | None = None


def _emotion(text: str) -> Emotion:
    try:
        return Emotion(text.lower())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown emotion {text!r}; choose from "
            + ", ".join(e.value for e in Emotion)
        ) from None


_SAMPLER_OPTS = [
    _Opt("threshold", float, 0.9, "probability of stochastic sampling per step"),
    _Opt("temperature", float, 1.0, "softmax temperature for stochastic steps"),
    _Opt("length", int, 600, "number of events to generate"),
    _Opt("seed", int, 0, "sampling seed"),
]

# flag tables per subcommand; positional arguments are declared separately
_SUBCOMMANDS: dict[str, tuple[str, list[_Opt], list[tuple[str, str]]]] = {
    "encode": (
        "encode a MIDI file as performance-event text",
        [_Opt("out", str, None, "output events path (default: stdout)")],
        [("input", "input MIDI file")],
    ),
    "decode": (
        "decode performance-event text back into a MIDI file",
        [_Opt("out", str, None, "output MIDI path", required=True)],
        [("input", "input events text file")],
    ),
    "features": (
        "per-event conditioning rows and a piece-level summary",
        [
            _Opt("out", str, None, "per-event rows CSV path", required=True),
            _Opt("summary", str, None, "summary CSV path (default: stdout)"),
        ],
        [("input", "input MIDI file")],
    ),
    "train": (
        "train a model on a directory of MIDI files",
        [
            _Opt("corpus", str, None, "directory of .mid files", required=True),
            _Opt("out", str, None, "checkpoint output path", required=True),
            _Opt("epochs", int, 100, "training epochs"),
            _Opt("batch", int, 64, "batch size"),
            _Opt("lr", float, 2e-4, "Adam learning rate"),
            _Opt("seed", int, 0, "training seed"),
            _Opt("mode", str, FEATURES, "conditioning mode", choices=(FEATURES, LABELS)),
            _Opt("hidden", int, 512, "GRU hidden size"),
            _Opt("window", int, 200, "training window length in events"),
            _Opt("stride", int, 10, "window stride in events"),
            _Opt("log", str, None, "loss log CSV path (default: <out>.loss.csv)"),
        ],
        [],
    ),
    "generate": (
        "sample a new piece with a requested emotion",
        [
            _Opt("ckpt", str, None, "checkpoint path", required=True),
            _Opt("emotion", _emotion, None, "happy|tensional|sad|peaceful", required=True),
            *_SAMPLER_OPTS,
            _Opt("tonic", int, 0, "tonic pitch class 0..11 (0 = C)"),
            _Opt("out", str, None, "output MIDI path", required=True),
        ],
        [],
    ),
    "evaluate": (
        "compare feature- and label-conditioned checkpoints",
        [
            _Opt("features-ckpt", str, None, "feature-conditioned checkpoint", required=True),
            _Opt("labels-ckpt", str, None, "label-conditioned checkpoint", required=True),
            _Opt("samples", int, 5, "samples per emotion per model"),
            *_SAMPLER_OPTS,
            _Opt("tonic", int, 0, "tonic pitch class 0..11"),
            _Opt("out", str, None, "comparison CSV path (default: stdout)"),
        ],
        [],
    ),
}


class _UsageError(Exception):
    pass


def _load_config(path: Path) -> dict[str, dict[str, str]]:
    """Read subcommand-scoped defaults; reject keys that match no flag."""
    values: dict[str, dict[str, str]] = {}
    if not path.is_file():
        return values
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
        sub, flag = key.split(".", 1)
        spec = _SUBCOMMANDS.get(sub)
        if spec is None or flag not in {o.name for o in spec[1]}:
            raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values.setdefault(sub, {})[flag] = value
    return values


def _build_parser(config: dict[str, dict[str, str]]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emotionbox",
        description="emotion-conditioned piano music toolkit",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, opts, positionals) in _SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        for pos_name, pos_help in positionals:
            sub.add_argument(pos_name, help=pos_help)
        overrides = config.get(name, {})
        for opt in opts:
            default = opt.default
            required = opt.required
            if opt.name in overrides:
                try:
                    default = opt.type(overrides[opt.name])
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise _UsageError(
                        f"config value for {name}.{opt.name}: {exc}"
                    ) from None
                required = False
            kwargs: dict[str, Any] = dict(
                type=opt.type, default=default, help=opt.help, required=required
            )
            if opt.choices:
                kwargs["choices"] = opt.choices
            sub.add_argument(f"--{opt.name}", **kwargs)
    return parser


def _cmd_encode(args: argparse.Namespace) -> int:
    notes = parse_midi(Path(args.input).read_bytes(), source_name=args.input)
    text = ev.format_events(ev.encode(notes))
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    events = ev.parse_events(Path(args.input).read_text())
    notes = ev.decode(events, source_name=args.input)
    atomic_write_bytes(args.out, write_midi(notes))
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    notes = parse_midi(Path(args.input).read_bytes(), source_name=args.input)
    rows = conditioning_track(notes, ev.encode(notes))
    header = (
        [f"h{i}" for i in range(12)] + [f"d{i}" for i in range(12)] + ["pad"]
    )
    lines = [",".join(header)]
    lines += [",".join(f"{value:.6g}" for value in row) for row in rows]
    atomic_write_text(args.out, "\n".join(lines) + "\n")

    whole = pitch_histogram(notes, 0.0, max(notes.duration, 1.0))
    density = mean_density(notes)
    summary_header = ",".join([f"pc{i}" for i in range(12)] + ["mean_density"])
    summary_row = ",".join([f"{int(c)}" for c in whole] + [f"{density:.6g}"])
    summary = f"{summary_header}\n{summary_row}\n"
    if args.summary:
        atomic_write_text(args.summary, summary)
    else:
        sys.stdout.write(summary)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainingConfig(
        window_len=args.window,
        stride=args.stride,
        batch_size=args.batch,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        conditioning_mode=args.mode,
    )
    conditioning_dim = 25 if args.mode == FEATURES else 4
    model_config = ModelConfig(
        hidden_size=args.hidden, conditioning_dim=conditioning_dim
    )
    log_path = args.log if args.log else f"{args.out}.loss.csv"
    train(args.corpus, cfg, args.out, model_config=model_config, loss_log_out=log_path)
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    ckpt = ckpt_io.load_checkpoint(args.ckpt)
    cfg = SamplerConfig(
        threshold=args.threshold,
        temperature=args.temperature,
        max_events=args.length,
        seed=args.seed,
    )
    generate_to_midi(ckpt, args.emotion, cfg, args.out, tonic_pitch_class=args.tonic)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = SamplerConfig(
        threshold=args.threshold,
        temperature=args.temperature,
        max_events=args.length,
        seed=args.seed,
    )
    rows = compare(
        ckpt_io.load_checkpoint(getattr(args, "features_ckpt")),
        ckpt_io.load_checkpoint(getattr(args, "labels_ckpt")),
        args.samples,
        cfg,
        tonic_pitch_class=args.tonic,
    )
    csv_text = comparison_csv(rows)
    if args.out:
        atomic_write_text(args.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    return 0


_HANDLERS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "features": _cmd_features,
    "train": _cmd_train,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
}


def run(argv: list[str] | None = None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        config = _load_config(Path.cwd() / CONFIG_FILENAME)
        parser = _build_parser(config)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (EmotionBoxError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    sys.exit(run())


if __name__ == "__main__":
    main()
