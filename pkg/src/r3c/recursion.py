"""The recursive refinement loop.

A classifier's prediction is thinned, turned into a valley overlay and
stacked onto its own input with weight ``alpha``; the composite is
re-classified until the fraction of newly segmented pixels stays at or below
``epsilon`` for ``consecutive_stops_required`` iterations in a row.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .classifiers.base import ClassifierSpec, apply_input_policy
from .errors import DimensionMismatch
from .image import BinaryMask, GrayImage, Polarity, check_same_shape, invert_mask
from .thinning import zhang_suen_thin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class R3CConfig:
    alpha: float = 0.25
    epsilon: float = 0.01
    gamma: float = 1.0
    consecutive_stops_required: int = 2
    max_iterations: int = 50

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must be in [0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.consecutive_stops_required < 1:
            raise ValueError("consecutive_stops_required must be >= 1")
        if self.max_iterations < self.consecutive_stops_required + 1:
            raise ValueError("max_iterations must exceed consecutive_stops_required")

    def alpha_at(self, i: int) -> float:
        return self.alpha * self.gamma ** i


class Termination(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class IterationRecord:
    index: int
    foreground_count: int
    diff_rate: float | None  # None at i = 0
    stop_vote: bool
    alpha_used: float  # 0.0 when the iteration ended without a blend

    @property
    def shrinking(self) -> bool:
        return self.diff_rate is not None and self.diff_rate < 0

    def to_json(self) -> dict:
        return {"i": self.index, "foreground_count": self.foreground_count,
                "diff_rate": self.diff_rate, "stop_vote": self.stop_vote,
                "alpha_used": self.alpha_used}


@dataclass(frozen=True)
class R3CTrace:
    records: tuple[IterationRecord, ...]
    classifier_calls: int
    terminated_by: Termination

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_json()) for r in self.records]
        lines.append(json.dumps({"classifier_calls": self.classifier_calls,
                                 "terminated_by": self.terminated_by.value}))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "R3CTrace":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        *records, summary = rows
        return cls(
            tuple(IterationRecord(r["i"], r["foreground_count"], r["diff_rate"],
                                  r["stop_vote"], r["alpha_used"]) for r in records),
            summary["classifier_calls"], Termination(summary["terminated_by"]))


class R3CResult(NamedTuple):
    mask: BinaryMask
    trace: R3CTrace


def regularize_for_blend(mask: BinaryMask, classifier_polarity: Polarity | None = None) -> BinaryMask:
    """Valley-foreground skeleton of a prediction, ready to be blended.

    Ridge-foreground predictions are inverted first, so the overlay brightens
    valleys the way they appear in a raw scan.
    """
    if classifier_polarity is not None and Polarity(classifier_polarity) is not mask.foreground:
        raise ValueError(f"mask is tagged {mask.foreground.value}, "
                         f"classifier declares {Polarity(classifier_polarity).value}")
    if mask.foreground is Polarity.RIDGE:
        mask = invert_mask(mask)
    return zhang_suen_thin(mask)


def blend_composite(previous: GrayImage, overlay: BinaryMask, alpha: float) -> GrayImage:
    """Brighten the overlay's valley pixels by ``alpha``, clamped to [0, 1]."""
    check_same_shape(previous, overlay)
    if overlay.foreground is not Polarity.VALLEY:
        raise ValueError("blend overlay must be valley-foreground")
    if alpha == 0:
        return previous
    return GrayImage(np.clip(previous.data + alpha * overlay.data, 0.0, 1.0))


def diff_rate_from_counts(current: int, previous: int) -> float:
    if current == 0:
        return 0.0
    return (current - previous) / current


def diff_rate(current: BinaryMask, previous: BinaryMask) -> float:
    """Fraction of the current segmentation that is new since the previous one.

    Returns 0 when the current segmentation is empty; negative values mean
    the segmentation shrank.
    """
    check_same_shape(current, previous)
    if current.foreground is not previous.foreground:
        raise DimensionMismatch("masks are tagged with different foreground classes")
    return diff_rate_from_counts(current.count(), previous.count())


def should_stop(history, epsilon: float, required: int) -> bool:
    """True iff the last ``required`` difference rates all are <= ``epsilon``."""
    if len(history) < required:
        return False
    return all(d <= epsilon for d in history[-required:])


def run_r3c(image: GrayImage, classifier: ClassifierSpec, config: R3CConfig) -> R3CResult:
    """Refine ``classifier``'s segmentation of ``image``.

    The returned mask is the newest prediction, in the classifier's own
    polarity and at its (policy-resized) input resolution.
    """
    composite = apply_input_policy(image, classifier)
    current = classifier.classify(composite)
    calls = 1
    alpha = config.alpha_at(0)
    records = [IterationRecord(0, current.count(), None, False, alpha)]
    composite = blend_composite(composite, regularize_for_blend(current), alpha)
    history: list[float] = []

    i = 0
    while True:
        i += 1
        newest = classifier.classify(composite)
        calls += 1
        count = newest.count()
        d = diff_rate_from_counts(count, current.count())
        history.append(d)
        vote = d <= config.epsilon
        if d < 0:
            log.debug("iteration %d: segmentation shrank (d=%.6f)", i, d)
        if should_stop(history, config.epsilon, config.consecutive_stops_required):
            records.append(IterationRecord(i, count, d, vote, 0.0))
            ending = Termination.CONVERGED
            break
        if calls >= config.max_iterations:
            records.append(IterationRecord(i, count, d, vote, 0.0))
            ending = Termination.MAX_ITERATIONS
            log.warning("stopped at the %d-call safety cap without converging", calls)
            break
        alpha = config.alpha_at(i)
        composite = blend_composite(composite, regularize_for_blend(newest), alpha)
        records.append(IterationRecord(i, count, d, vote, alpha))
        current = newest

    return R3CResult(newest, R3CTrace(tuple(records), calls, ending))
