"""Command-line front end: ``r3c {synth,enhance,r3c,sweep,eval}``.

Parameters come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags. The resolved configuration is logged to
standard error on every run.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .classifiers import (Dilating, Fixed, FftParams, FixedMask, GaborParams, Otsu, Threshold,
                          fft_classifier, gabor_classifier, stub_classifier)
from .errors import DataError
from .evaluation import DEFAULT_GRID, alpha_sweep, load_manifest, score
from .image import load_image, load_mask, save_image
from .recursion import R3CConfig, run_r3c

log = logging.getLogger("r3c")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
SEED_ENV = "R3C_SEED"
CLASSIFIERS = ("gabor", "fft", "stub")
STUB_BEHAVIORS = ("fixed", "threshold", "dilating")

DEFAULTS = {
    "seed": 0,
    "classifier": "gabor",
    "gabor": {**asdict(GaborParams()), "preferred_shape": [350, 350]},
    "fft": {"block_size": 32, "overlap": 8, "power_exponent": 1.4,
            "binarize_threshold": "otsu", "shape": [500, 500]},
    "r3c": asdict(R3CConfig()),
    "sweep": {"grid": list(DEFAULT_GRID), "jobs": 1, "recall_radius": 1},
    "stub": {"behavior": "fixed", "mask": None, "mask_inverted": False,
             "threshold": 0.5, "above": False, "radius": 1},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

def merge_config(base: dict, override: dict, where: str = "config") -> dict:
    """Overlay ``override`` onto a copy of ``base``; unknown keys are rejected."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise UsageError(f"{where}: unknown key {key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise UsageError(f"{where}: {key!r} must be an object")
            out[key] = merge_config(base[key], value, f"{where}.{key}")
        else:
            out[key] = value
    return out


def read_config(path) -> dict:
    """Parse a JSON config file without merging it."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise DataError(f"{path}: config must be a JSON object")
    return obj


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then ``R3C_SEED``, then flags."""
    raw = read_config(args.config) if args.config else {}
    cfg = merge_config(DEFAULTS, raw, str(args.config))
    env_seed = _env_seed()
    # the config file's own seed beats the environment
    if env_seed is not None and "seed" not in raw:
        cfg["seed"] = env_seed
    flags = {
        ("seed",): getattr(args, "seed", None),
        ("classifier",): getattr(args, "classifier", None),
        ("r3c", "alpha"): getattr(args, "alpha", None),
        ("r3c", "epsilon"): getattr(args, "epsilon", None),
        ("r3c", "gamma"): getattr(args, "gamma", None),
        ("r3c", "consecutive_stops_required"): getattr(args, "required", None),
        ("r3c", "max_iterations"): getattr(args, "max_iterations", None),
        ("sweep", "grid"): getattr(args, "grid", None),
        ("sweep", "jobs"): getattr(args, "jobs", None),
        ("sweep", "recall_radius"): getattr(args, "recall_radius", None),
        ("stub", "behavior"): getattr(args, "stub", None),
        ("stub", "mask"): getattr(args, "stub_mask", None),
        ("stub", "threshold"): getattr(args, "stub_threshold", None),
        ("stub", "radius"): getattr(args, "stub_radius", None),
    }
    for keys, value in flags.items():
        if value is None:
            continue
        target = cfg
        for k in keys[:-1]:
            target = target[k]
        target[keys[-1]] = value
    if getattr(args, "stub_above", False):
        cfg["stub"]["above"] = True
    return cfg


def build_r3c_config(cfg: dict) -> R3CConfig:
    try:
        return R3CConfig(**cfg["r3c"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"r3c: {exc}") from exc


def build_classifier(cfg: dict):
    name = cfg["classifier"]
    try:
        if name == "gabor":
            section = dict(cfg["gabor"])
            shape = section.pop("preferred_shape")
            return gabor_classifier(GaborParams(**section), None if shape is None else tuple(shape))
        if name == "fft":
            section = dict(cfg["fft"])
            shape = tuple(section.pop("shape"))
            rule = section.pop("binarize_threshold")
            rule = Otsu() if rule == "otsu" else Fixed(float(rule))
            return fft_classifier(FftParams(binarize_threshold=rule, **section), shape)
        if name == "stub":
            return _build_stub(cfg["stub"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{name}: {exc}") from exc
    raise UsageError(f"unknown classifier {name!r} (choose from {', '.join(CLASSIFIERS)})")


def _build_stub(section: dict):
    behavior = section["behavior"]
    if behavior == "fixed":
        if not section["mask"]:
            raise UsageError("the fixed stub needs a mask file (--stub-mask or stub.mask)")
        mask = load_mask(section["mask"], inverted=bool(section["mask_inverted"]))
        return stub_classifier(FixedMask(mask))
    if behavior == "threshold":
        return stub_classifier(Threshold(float(section["threshold"]), bool(section["above"])))
    if behavior == "dilating":
        return stub_classifier(Dilating(int(section["radius"]), float(section["threshold"]),
                                        bool(section["above"])))
    raise UsageError(f"unknown stub behavior {behavior!r} (choose from {', '.join(STUB_BEHAVIORS)})")


def _log_config(command: str, cfg: dict) -> None:
    log.info("%s config: %s", command, json.dumps(cfg, sort_keys=True))


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

@contextlib.contextmanager
def _blame(path):
    """Prefix data errors raised while processing ``path`` with its name."""
    try:
        yield
    except DataError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def cmd_synth(args, cfg) -> int:
    suite = load_manifest(args.manifest, default_seed=cfg["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for case in suite:
        try:
            img, gt = case.render()
        except (ValueError, DataError) as exc:
            raise DataError(f"case {case.id!r}: {exc}") from exc
        save_image(img, out / f"{case.id}.{args.format}")
        save_image(gt, out / f"{case.id}_gt.{args.format}")
        log.info("wrote case %s", case.id)
    return EXIT_OK


def cmd_enhance(args, cfg) -> int:
    classifier = build_classifier(cfg)
    img = load_image(args.input)
    with _blame(args.input):
        mask = classifier(img)
    save_image(mask, args.output)
    return EXIT_OK


def cmd_r3c(args, cfg) -> int:
    classifier = build_classifier(cfg)
    config = build_r3c_config(cfg)
    img = load_image(args.input)
    with _blame(args.input):
        mask, trace = run_r3c(img, classifier, config)
    save_image(mask, args.output)
    if args.trace:
        trace.write(args.trace)
    log.info("%s after %d classifier calls", trace.terminated_by.value, trace.classifier_calls)
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    classifier = build_classifier(cfg)
    config = build_r3c_config(cfg)
    suite = load_manifest(args.manifest, default_seed=cfg["seed"])
    sweep = cfg["sweep"]
    if any(not 0 <= float(a) <= 1 for a in sweep["grid"]):
        raise UsageError("sweep grid alphas must lie in [0, 1]")
    try:
        report = alpha_sweep(suite, classifier, sweep["grid"], config,
                             jobs=int(sweep["jobs"]), recall_radius=int(sweep["recall_radius"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    Path(args.output).write_text(report.to_csv(), encoding="utf-8")
    if args.summary:
        Path(args.summary).write_text(report.summary_json(), encoding="utf-8")
    log.info("chosen alpha: %s", report.chosen_alpha)
    if report.failures:
        for f in report.failures:
            print(f"error: case {f.case_id} (alpha={f.alpha}): {f.message}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    pred = load_mask(args.pred, inverted=args.pred_inverted)
    gt = load_mask(args.gt, inverted=args.gt_inverted)
    row = score(args.case_id or Path(args.pred).stem, "-", None, pred, gt, 0,
                int(cfg["sweep"]["recall_radius"]))
    print(row.describe())
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _grid(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise argparse.ArgumentTypeError("grid needs comma-separated alphas in [0, 1]")
    return values


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON config file (flags override it)")
    p.add_argument("--seed", type=int, help=f"global default seed (overrides ${SEED_ENV})")


def _classifier_flags(p: argparse.ArgumentParser, choices=CLASSIFIERS) -> None:
    p.add_argument("--classifier", choices=choices, help="classifier to run (default: gabor)")
    p.add_argument("--stub", choices=STUB_BEHAVIORS, help="stub behavior (classifier=stub)")
    p.add_argument("--stub-mask", metavar="MASK", help="mask file for the fixed stub")
    p.add_argument("--stub-threshold", type=float, metavar="T",
                   help="intensity cut for the threshold/dilating stubs")
    p.add_argument("--stub-radius", type=int, metavar="R", help="dilation radius of the dilating stub")
    p.add_argument("--stub-above", action="store_true",
                   help="stub selects pixels at or above the threshold")


def _r3c_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="blend weight in [0, 1]")
    p.add_argument("--epsilon", type=float, help="difference-rate stop threshold")
    p.add_argument("--gamma", type=float, help="per-iteration alpha decay in (0, 1]")
    p.add_argument("--required", type=int, metavar="N",
                   help="consecutive below-epsilon iterations needed to stop")
    p.add_argument("--max-iterations", type=int, metavar="N", help="classifier-call safety cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="r3c", description="Recursive class connectivity refinement.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth", help="render a suite manifest to images and ground truth")
    _common(p)
    p.add_argument("--manifest", required=True, help="JSON suite manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("pgm", "png"), default="pgm", help="image format")

    p = sub.add_parser("enhance", help="run a classifier once")
    _common(p)
    _classifier_flags(p)
    p.add_argument("--in", dest="input", required=True, metavar="IMG", help="input image")
    p.add_argument("--out", dest="output", required=True, metavar="MASK", help="output mask")

    p = sub.add_parser("r3c", help="run the recursive refinement loop")
    _common(p)
    _classifier_flags(p)
    _r3c_flags(p)
    p.add_argument("--in", dest="input", required=True, metavar="IMG", help="input image")
    p.add_argument("--out", dest="output", required=True, metavar="MASK", help="output mask")
    p.add_argument("--trace", metavar="FILE", help="write the iteration trace as JSON lines")

    p = sub.add_parser("sweep", help="score the baseline and an alpha grid over a suite")
    _common(p)
    _classifier_flags(p)
    _r3c_flags(p)
    p.add_argument("--manifest", required=True, help="JSON suite manifest")
    p.add_argument("--grid", type=_grid, help="comma-separated alphas (default 0.05,0.25,0.5,0.75,1.0)")
    p.add_argument("--out", dest="output", required=True, metavar="CSV", help="report CSV")
    p.add_argument("--summary", metavar="JSON", help="also write per-alpha means and the chosen alpha")
    p.add_argument("--jobs", type=int, help="worker processes (output is identical for any value)")
    p.add_argument("--recall-radius", type=int, metavar="R", help="skeleton recall tolerance in px")

    p = sub.add_parser("eval", help="score a predicted mask against ground truth")
    _common(p)
    p.add_argument("--pred", required=True, help="predicted mask")
    p.add_argument("--gt", required=True, help="ground-truth mask")
    p.add_argument("--pred-inverted", action="store_true", help="prediction draws ridges white")
    p.add_argument("--gt-inverted", action="store_true", help="ground truth draws ridges white")
    p.add_argument("--case-id", help="row label (default: prediction file stem)")
    p.add_argument("--recall-radius", type=int, metavar="R", help="skeleton recall tolerance in px")
    return parser


COMMANDS = {"synth": cmd_synth, "enhance": cmd_enhance, "r3c": cmd_r3c,
            "sweep": cmd_sweep, "eval": cmd_eval}


def run_command(argv=None) -> int:
    """Run one CLI invocation and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if getattr(args, "jobs", None) is not None and args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        _log_config(args.command, cfg)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"r3c: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        msg = f"no such file: {exc.filename}" if exc.filename else str(exc)
        print(f"r3c: error: {msg}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"r3c: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
