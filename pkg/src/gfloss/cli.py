"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable image, bad dimensions, corrupt file).
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GflError, InvalidConfig
from .harness import (
    LOSSES,
    TASKS,
    ExperimentConfig,
    derived_seed,
    make_pair,
    optimize_direct,
    psnr,
    ssim,
    train_linear_restorer,
)
from .imagecore import Image, load_image, save_image, to_grayscale
from .loss import DEFAULT_EPSILON, GflParams, gfl
from .pyramid import build_laplacian
from .scheduler import ScheduleConfig, trace
from .spectral import apply_highpass, highpass_mask, radial_power_spectrum

CONFIG_KEYS = {"task", "loss", "epsilon", "schedule", "steps", "learning_rate", "seed", "input", "output_dir"}
SCHEDULE_KEYS = {"omega0", "omegaF", "epochs", "stages", "mode", "loss_threshold", "interpretation"}
CONFIG_DEFAULTS = {
    "task": "denoising",
    "loss": "gfl",
    "epsilon": DEFAULT_EPSILON,
    "schedule": None,
    "steps": 2000,
    "learning_rate": 0.5,
    "seed": 0,
    "input": None,
    "output_dir": ".",
}
IMAGE_SUFFIXES = (".png", ".pgm", ".ppm")
MANIFEST_NAME = "run-manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("%s: %s" % (self.prog, message))


def fmt_num(x):
    """Positional text, 15 significant digits, no trailing zeros: 1e-6 -> '0.000001', 255.0 -> '255'."""
    text = np.format_float_positional(float(x), precision=15, unique=True, fractional=False, trim="-")
    return "0" if text == "-0" else text


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(directory, command, resolved):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "version": __version__, "config": resolved, "seed": resolved.get("seed")}
    (directory / MANIFEST_NAME).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def parse_config(doc):
    """Validate a config mapping strictly and fill in defaults.

    Returns the resolved plain dict; unknown keys raise InvalidConfig.
    """
    if not isinstance(doc, dict):
        raise InvalidConfig("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise InvalidConfig("unknown config keys: %s" % ", ".join(sorted(unknown)))
    resolved = dict(CONFIG_DEFAULTS)
    resolved.update(doc)
    sched = resolved["schedule"]
    if sched is not None:
        if not isinstance(sched, dict):
            raise InvalidConfig("schedule must be an object")
        unknown = set(sched) - SCHEDULE_KEYS
        if unknown:
            raise InvalidConfig("unknown schedule keys: %s" % ", ".join(sorted(unknown)))
        missing = {"omega0", "omegaF", "epochs", "stages"} - set(sched)
        if missing:
            raise InvalidConfig("schedule is missing: %s" % ", ".join(sorted(missing)))
        sched = dict({"mode": "static", "loss_threshold": None, "interpretation": "literal"}, **sched)
        resolved["schedule"] = sched
    if resolved["task"] not in TASKS:
        raise InvalidConfig("task must be one of %s" % (TASKS,))
    if resolved["loss"] not in LOSSES:
        raise InvalidConfig("loss must be one of %s" % (LOSSES,))
    for key in ("steps", "seed"):
        if isinstance(resolved[key], bool) or not isinstance(resolved[key], int):
            raise InvalidConfig("%s must be an integer" % key)
    for key in ("epsilon", "learning_rate"):
        if isinstance(resolved[key], bool) or not isinstance(resolved[key], (int, float)):
            raise InvalidConfig("%s must be a number" % key)
    return resolved


def schedule_from(resolved):
    s = resolved["schedule"]
    if s is None:
        return None
    try:
        return ScheduleConfig(
            omega0=float(s["omega0"]),
            omega_f=float(s["omegaF"]),
            epochs=s["epochs"],
            stages=s["stages"],
            mode=s["mode"],
            loss_threshold=s["loss_threshold"],
            interpretation=s["interpretation"],
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidConfig):
            raise
        raise InvalidConfig("bad schedule: %s" % exc) from None


def experiment_from(resolved):
    return ExperimentConfig(
        task=resolved["task"],
        loss=resolved["loss"],
        schedule=schedule_from(resolved),
        steps=resolved["steps"],
        learning_rate=float(resolved["learning_rate"]),
        seed=resolved["seed"],
        epsilon=float(resolved["epsilon"]),
    )


def load_config(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfig("config is not valid JSON: %s" % exc) from None
    return parse_config(doc)


def _display(grid):
    lo, hi = float(np.min(grid)), float(np.max(grid))
    if hi - lo <= 0:
        return Image(np.zeros_like(grid))
    return Image((grid - lo) / (hi - lo))


def cmd_loss_eval(args):
    a, b = load_image(args.a), load_image(args.b)
    mask = None
    if args.mask_omega is not None:
        mask = highpass_mask(a.height, a.width, args.mask_omega)
    parts = gfl(a, b, GflParams(epsilon=args.epsilon, mask=mask))
    print(",".join(fmt_num(v) for v in parts.as_row()))


def cmd_pyramid(args):
    img = load_image(args.input)
    pyr = build_laplacian(img, args.depth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n, level in enumerate(pyr.levels):
        save_image(_display(level), out / ("level_%d.png" % n))
    save_image(_display(pyr.base), out / "base.png")


def cmd_analyze_spectrum(args):
    img = to_grayscale(load_image(args.input))
    rows = [(r, fmt_num(p)) for r, p in radial_power_spectrum(img)]
    _write_csv(args.out, ("radius", "power"), rows)
    if args.keep_above is not None:
        filtered = apply_highpass(img, highpass_mask(img.height, img.width, args.keep_above))
        target = args.filtered or str(Path(args.out).with_name(Path(args.out).stem + "-filtered.png"))
        save_image(_display(filtered), target)


def _read_sequence(path):
    text = Path(path).read_text().replace(",", " ").split()
    try:
        return [float(t) for t in text]
    except ValueError:
        raise InvalidConfig("loss sequence must contain numbers only") from None


def cmd_schedule_trace(args):
    resolved = load_config(args.config)
    schedule = schedule_from(resolved)
    if schedule is None:
        raise InvalidConfig("config has no schedule")
    seq = _read_sequence(args.gfl_sequence) if args.gfl_sequence else None
    rows = [(e, fmt_num(w), "true" if f else "false") for e, w, f in trace(schedule, seq)]
    _write_csv(args.out, ("epoch", "omega", "frozen"), rows)
    _write_manifest(Path(args.out).parent, "schedule-trace", resolved)


def cmd_degrade(args):
    img = load_image(args.input)
    degraded, _ = make_pair(img, args.task, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_image(degraded, args.out)
    _write_manifest(Path(args.out).parent, "degrade",
                    {"task": args.task, "seed": args.seed, "input": args.input, "output": args.out})


def _history_rows(history):
    for h in history:
        omega = "" if h.omega is None else fmt_num(h.omega)
        yield (h.step, fmt_num(h.ch_c), fmt_num(h.pi_c), fmt_num(h.theta_c), fmt_num(h.total), omega, fmt_num(h.psnr))


HISTORY_HEADER = ("step", "ch_c", "pi_c", "theta_c", "total", "omega", "psnr")
REPORT_HEADER = ("image", "loss", "psnr_in", "psnr_out", "ssim_in", "ssim_out")


def cmd_optimize(args):
    resolved = load_config(args.config)
    config = experiment_from(resolved)
    if not resolved["input"]:
        raise InvalidConfig("config needs an input image")
    out = Path(resolved["output_dir"])
    img = load_image(resolved["input"])
    restored, report = optimize_direct(make_pair(img, config.task, config.seed), config)
    out.mkdir(parents=True, exist_ok=True)
    save_image(restored, out / "restored.png")
    _write_csv(out / "history.csv", HISTORY_HEADER, _history_rows(report.history))
    _write_csv(out / "report.csv", REPORT_HEADER, [(
        Path(resolved["input"]).name, config.loss, fmt_num(report.psnr_in), fmt_num(report.psnr),
        fmt_num(report.ssim_in), fmt_num(report.ssim))])
    _write_manifest(out, "optimize", resolved)


def cmd_train(args):
    resolved = load_config(args.config)
    config = experiment_from(resolved)
    if config.task != "denoising":
        raise InvalidConfig("train supports the denoising task only")
    files = sorted(p for p in Path(args.corpus).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise InvalidConfig("no images found in %s" % args.corpus)
    corpus = [make_pair(load_image(p), "denoising", derived_seed(config.seed, i)) for i, p in enumerate(files)]
    kernel, report = train_linear_restorer(corpus, config, args.kernel_size)
    out = Path(resolved["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "kernel.csv", ["k%d" % j for j in range(kernel.shape[1])],
               [[fmt_num(v) for v in row] for row in kernel])
    _write_csv(out / "history.csv", HISTORY_HEADER, _history_rows(report.history))
    _write_csv(out / "report.csv", REPORT_HEADER, [(
        "held-out-mean", config.loss, fmt_num(report.psnr_in), fmt_num(report.psnr),
        fmt_num(report.ssim_in), fmt_num(report.ssim))])
    _write_manifest(out, "train", dict(resolved, corpus=str(args.corpus), kernel_size=args.kernel_size))


def cmd_metrics(args):
    a, b = load_image(args.a), load_image(args.b)
    print("%.6f,%.6f" % (psnr(a, b), ssim(a, b)))


def build_parser():
    parser = _Parser(prog="gfloss", description="Guided Frequency Loss experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("loss-eval", help="print ch_c,pi_c,theta_c,total for an image pair")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--mask-omega", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.set_defaults(func=cmd_loss_eval)

    p = sub.add_parser("pyramid", help="write Laplacian pyramid levels as PNGs")
    p.add_argument("input")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pyramid)

    p = sub.add_parser("analyze-spectrum", help="radial power spectrum CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--keep-above", type=float, default=None)
    p.add_argument("--filtered", default=None)
    p.set_defaults(func=cmd_analyze_spectrum)

    p = sub.add_parser("schedule-trace", help="expand the band schedule to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gfl-sequence", default=None, help="file of per-epoch loss values (dynamic mode)")
    p.set_defaults(func=cmd_schedule_trace)

    p = sub.add_parser("degrade", help="make a degraded copy of an image")
    p.add_argument("input")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("optimize", help="direct pixel-space restoration")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("train", help="train the linear restorer on a corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kernel-size", type=int, default=5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("metrics", help="print psnr,ssim for an image pair")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_metrics)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        args.func(args)
    except (UsageError, InvalidConfig) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (GflError, FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
