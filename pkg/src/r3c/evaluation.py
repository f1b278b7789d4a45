"""Segmentation metrics, synthetic suites and the alpha sweep.

The sweep scores every (case, alpha) pair plus a standalone baseline per
case, then picks the alpha with the highest mean IoU. Ties go to the higher
mean skeleton recall, then to the smaller alpha.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage as ndi

from .classifiers.base import ClassifierSpec
from .errors import DataError
from .image import BinaryMask, GrayImage, check_same_shape, resize_mask
from .recursion import R3CConfig, run_r3c
from .synth import Arch, Constant, DegradeParams, SynthParams, degrade, generate_ridge_pattern
from .thinning import zhang_suen_thin

log = logging.getLogger(__name__)

DEFAULT_GRID = (0.05, 0.25, 0.50, 0.75, 1.00)
SELECTION_RULE = ("max mean IoU; ties -> max mean skeleton_recall; "
                  "remaining ties -> smaller alpha")
CSV_HEADER = ("case_id", "classifier", "alpha", "iou", "dice", "component_count",
              "skeleton_recall", "classifier_calls")


class Connectivity(enum.IntEnum):
    FOUR = 4
    EIGHT = 8


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def overlap_metrics(pred: BinaryMask, gt: BinaryMask) -> tuple[float, float]:
    """IoU and Dice of the ridge pixels; both are 1 when neither has ridges."""
    check_same_shape(pred, gt)
    p, g = pred.ridges(), gt.ridges()
    inter = int(np.count_nonzero(p & g))
    union = int(np.count_nonzero(p | g))
    total = int(np.count_nonzero(p)) + int(np.count_nonzero(g))
    if total == 0:
        return 1.0, 1.0
    return inter / union, 2 * inter / total


def count_components(mask: BinaryMask, connectivity: Connectivity = Connectivity.EIGHT) -> int:
    """Number of connected foreground components."""
    structure = ndi.generate_binary_structure(2, 2 if connectivity == Connectivity.EIGHT else 1)
    return int(ndi.label(mask.data, structure=structure)[1])


def skeleton_recall(pred: BinaryMask, gt: BinaryMask, radius: int = 1) -> float:
    """Fraction of the ground-truth ridge skeleton with a predicted ridge pixel
    within Chebyshev distance ``radius``."""
    check_same_shape(pred, gt)
    skel = zhang_suen_thin(BinaryMask(gt.ridges())).data
    n = int(np.count_nonzero(skel))
    if n == 0:
        return 1.0
    near = pred.ridges()
    if radius > 0:
        near = ndi.binary_dilation(near, structure=np.ones((2 * radius + 1,) * 2, dtype=bool))
    return int(np.count_nonzero(skel & near)) / n


@dataclass(frozen=True)
class MetricsRow:
    case_id: str
    classifier: str
    alpha: float | None  # None for the standalone baseline
    iou: float
    dice: float
    component_count: int
    skeleton_recall: float
    classifier_calls: int

    def csv_fields(self) -> list[str]:
        return [self.case_id, self.classifier,
                "none" if self.alpha is None else f"{self.alpha:.6f}",
                f"{self.iou:.6f}", f"{self.dice:.6f}", str(self.component_count),
                f"{self.skeleton_recall:.6f}", str(self.classifier_calls)]

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in zip(CSV_HEADER, self.csv_fields()))


def score(case_id: str, classifier: str, alpha, pred: BinaryMask, gt: BinaryMask,
          calls: int, recall_radius: int = 1) -> MetricsRow:
    if pred.shape != gt.shape:
        pred = resize_mask(pred, gt.width, gt.height)
    iou, dice = overlap_metrics(pred, gt)
    ridges = BinaryMask(pred.ridges())
    return MetricsRow(case_id, classifier, alpha, iou, dice,
                      count_components(ridges, Connectivity.EIGHT),
                      skeleton_recall(pred, gt, recall_radius), calls)


# --------------------------------------------------------------------------
# Suites
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteCase:
    id: str
    synth: SynthParams
    degrade: DegradeParams | None = None

    def render(self) -> tuple[GrayImage, BinaryMask]:
        pattern = generate_ridge_pattern(self.synth)
        img = pattern.image if self.degrade is None else degrade(pattern.image, self.degrade)
        return img, pattern.ground_truth


def _mode_from_json(obj) -> Constant | Arch:
    if obj is None:
        return Constant()
    kind = obj.get("mode", "constant").lower()
    if kind == "constant":
        return Constant(float(obj.get("theta_deg", 0.0)))
    if kind == "arch":
        return Arch(float(obj["curvature"]))
    raise DataError(f"unknown orientation mode {kind!r}")


def _mode_to_json(mode) -> dict:
    if isinstance(mode, Constant):
        return {"mode": "constant", "theta_deg": mode.theta_deg}
    return {"mode": "arch", "curvature": mode.curvature}


_SYNTH_KEYS = {"width", "height", "ridge_frequency", "orientation_mode", "contrast", "seed"}
_DEGRADE_KEYS = {"gap_count", "gap_radius", "blur_sigma", "noise_sigma", "seed", "gap_strength",
                 "gap_level"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise DataError(f"{where}: unknown keys {sorted(extra)}")


def case_from_json(obj: dict, default_seed: int = 0) -> SuiteCase:
    try:
        _reject_unknown(obj, {"id", "synth", "degrade"}, "case")
        synth = dict(obj.get("synth", {}))
        _reject_unknown(synth, _SYNTH_KEYS, f"case {obj.get('id')!r} synth")
        synth["orientation_mode"] = _mode_from_json(synth.get("orientation_mode"))
        synth.setdefault("seed", default_seed)
        deg = obj.get("degrade")
        if deg is not None:
            _reject_unknown(deg, _DEGRADE_KEYS, f"case {obj.get('id')!r} degrade")
            deg = DegradeParams(**{"seed": default_seed, **deg})
        return SuiteCase(str(obj["id"]), SynthParams(**synth), deg)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"invalid suite case {obj.get('id', '?')!r}: {exc}") from exc


def case_to_json(case: SuiteCase) -> dict:
    synth = asdict(case.synth)
    synth["orientation_mode"] = _mode_to_json(case.synth.orientation_mode)
    out = {"id": case.id, "synth": synth}
    if case.degrade is not None:
        out["degrade"] = asdict(case.degrade)
    return out


def parse_manifest(obj, default_seed: int = 0) -> list[SuiteCase]:
    cases = obj.get("cases") if isinstance(obj, dict) else obj
    if not isinstance(cases, list):
        raise DataError("manifest must be a list of cases or an object with a 'cases' list")
    suite = [case_from_json(c, default_seed) for c in cases]
    ids = [c.id for c in suite]
    if len(set(ids)) != len(ids):
        raise DataError("manifest case ids must be unique")
    return suite


def load_manifest(path, default_seed: int = 0) -> list[SuiteCase]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return parse_manifest(obj, default_seed)


def write_manifest(suite: Iterable[SuiteCase], path) -> None:
    Path(path).write_text(json.dumps({"cases": [case_to_json(c) for c in suite]}, indent=2) + "\n",
                          encoding="utf-8")


# --------------------------------------------------------------------------
# Sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseFailure:
    case_id: str
    alpha: float | None
    message: str


@dataclass
class SweepReport:
    rows: list[MetricsRow]
    chosen_alpha: dict[str, float | None]
    selection_rule: str = SELECTION_RULE
    grid: tuple[float, ...] = DEFAULT_GRID
    failures: list[CaseFailure] = field(default_factory=list)

    def rows_at(self, alpha) -> list[MetricsRow]:
        return [r for r in self.rows if r.alpha == alpha]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def summary(self) -> dict:
        def means(rows):
            if not rows:
                return None
            return {
                "n": len(rows),
                "mean_iou": float(np.mean([r.iou for r in rows])),
                "mean_dice": float(np.mean([r.dice for r in rows])),
                "mean_component_count": float(np.mean([r.component_count for r in rows])),
                "mean_skeleton_recall": float(np.mean([r.skeleton_recall for r in rows])),
                "mean_classifier_calls": float(np.mean([r.classifier_calls for r in rows])),
            }
        return {
            "selection_rule": self.selection_rule,
            "chosen_alpha": self.chosen_alpha,
            "baseline": means(self.rows_at(None)),
            "per_alpha": [{"alpha": a, **(means(self.rows_at(a)) or {"n": 0})} for a in self.grid],
            "failures": [asdict(f) for f in self.failures],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def select_alpha(rows: Sequence[MetricsRow], grid: Sequence[float]) -> float | None:
    """Apply the selection rule to the non-baseline rows of ``grid`` alphas."""
    best_key, best = None, None
    for alpha in grid:
        sub = [r for r in rows if r.alpha == alpha]
        if not sub:
            continue
        key = (-float(np.mean([r.iou for r in sub])),
               -float(np.mean([r.skeleton_recall for r in sub])),
               alpha)
        if best_key is None or key < best_key:
            best_key, best = key, alpha
    return best


def _evaluate(task):
    case, classifier, alpha, config, recall_radius = task
    try:
        img, gt = case.render()
        if alpha is None:
            pred, calls = classifier(img), 1
        else:
            pred, trace = run_r3c(img, classifier, replace(config, alpha=alpha))
            calls = trace.classifier_calls
        return score(case.id, classifier.name, alpha, pred, gt, calls, recall_radius)
    except Exception as exc:  # a failed case is reported, not fatal
        return CaseFailure(case.id, alpha, f"{type(exc).__name__}: {exc}")


def _row_order(row: MetricsRow):
    return (row.case_id, row.alpha is not None, row.alpha or 0.0)


def alpha_sweep(suite: Sequence[SuiteCase], classifier: ClassifierSpec,
                grid: Sequence[float] = DEFAULT_GRID, config: R3CConfig = R3CConfig(),
                jobs: int = 1, recall_radius: int = 1) -> SweepReport:
    """Score the baseline and every grid alpha on every case.

    Rows are sorted by case id, then alpha with the baseline first, so the
    report does not depend on ``jobs`` or on manifest order.
    """
    if not suite:
        raise ValueError("suite is empty")
    if not grid:
        raise ValueError("grid is empty")
    grid = tuple(float(a) for a in grid)
    tasks = [(case, classifier, alpha, config, recall_radius)
             for case in suite for alpha in (None, *grid)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]

    rows = sorted((r for r in results if isinstance(r, MetricsRow)), key=_row_order)
    failures = [r for r in results if isinstance(r, CaseFailure)]
    for f in failures:
        log.error("case %s (alpha=%s) failed: %s", f.case_id, f.alpha, f.message)
    chosen = select_alpha(rows, grid)
    return SweepReport(rows, {classifier.name: chosen}, SELECTION_RULE, grid, failures)
