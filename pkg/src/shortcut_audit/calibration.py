"""Expected calibration error and per-bin reliability statistics.

Predictions are grouped by confidence into M equal-width bins, where a
confidence c lands in bin ceil(c * M) and c = 0 falls into bin 1. The
calibration error is the bin-size-weighted mean absolute gap between each
bin's accuracy and its mean confidence. Bins also carry cue-type counts so
the same pass yields the data for a reliability diagram with a stacked
shortcut histogram.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .corpus import DataError
from .shortcut import ShortcutVerdict

__all__ = [
    "PredictionRecord",
    "make_record",
    "BinStats",
    "bin_records",
    "ece",
    "shortcut_distribution",
    "write_reliability_csv",
    "RELIABILITY_COLUMNS",
]


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    true_label: str
    predicted_label: str
    probs: tuple[float, ...]
    confidence: float  # max class probability
    correct: bool
    top_tokens: tuple[tuple[str, float], ...] = ()
    verdict: ShortcutVerdict | None = None

    def __post_init__(self):
        if not self.probs:
            raise ValueError(f"record {self.sample_id}: empty probability vector")
        total = sum(self.probs)
        if abs(total - 1.0) >= 1e-6:
            raise ValueError(f"record {self.sample_id}: probabilities sum to {total}")
        if abs(self.confidence - max(self.probs)) > 1e-9:
            raise ValueError(f"record {self.sample_id}: confidence is not the max probability")
        if self.correct != (self.predicted_label == self.true_label):
            raise ValueError(f"record {self.sample_id}: correct flag contradicts labels")


def make_record(
    sample_id: str,
    true_label: str,
    predicted_label: str,
    probs,
    top_tokens=(),
    verdict: ShortcutVerdict | None = None,
) -> PredictionRecord:
    probs = tuple(float(p) for p in probs)
    return PredictionRecord(
        sample_id=sample_id,
        true_label=true_label,
        predicted_label=predicted_label,
        probs=probs,
        confidence=max(probs),
        correct=predicted_label == true_label,
        top_tokens=tuple((str(t), float(s)) for t, s in top_tokens),
        verdict=verdict,
    )


@dataclass
class BinStats:
    index: int  # 1-based
    low: float  # interval (low, high], except bin 1 which also takes c = 0
    high: float
    count: int = 0
    accuracy: float = 0.0
    mean_confidence: float = 0.0
    lexicon_cued: int = 0
    grammar_cued: int = 0
    non_shortcut: int = 0


def _bin_index(confidence: float, n_bins: int) -> int:
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"confidence {confidence} outside [0, 1]")
    return max(1, math.ceil(confidence * n_bins))


def bin_records(records, n_bins: int = 10) -> list[BinStats]:
    """Assign every record to exactly one of n_bins equal-width bins."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    bins = [BinStats(index=m, low=(m - 1) / n_bins, high=m / n_bins) for m in range(1, n_bins + 1)]
    correct = [0] * n_bins
    confidences: list[list[float]] = [[] for _ in range(n_bins)]
    for rec in records:
        i = _bin_index(rec.confidence, n_bins) - 1
        b = bins[i]
        b.count += 1
        correct[i] += rec.correct
        confidences[i].append(rec.confidence)
        if rec.verdict is None or not rec.verdict.is_shortcut:
            b.non_shortcut += 1
        elif rec.verdict.cue_type == "lexicon":
            b.lexicon_cued += 1
        else:
            b.grammar_cued += 1
    for i, b in enumerate(bins):
        if b.count:
            b.accuracy = correct[i] / b.count
            # fsum is exactly rounded, so record order cannot move the mean
            b.mean_confidence = math.fsum(confidences[i]) / b.count
    return bins


def ece(records, n_bins: int = 10) -> float:
    """Bin-weighted mean |accuracy - mean confidence|; empty bins contribute 0."""
    records = list(records)
    if not records:
        raise ValueError("ece needs a non-empty record list")
    n = len(records)
    return sum(
        (b.count / n) * abs(b.accuracy - b.mean_confidence)
        for b in bin_records(records, n_bins)
        if b.count
    )


def shortcut_distribution(records, n_bins: int = 10) -> list[tuple[int, int, int]]:
    """Per-bin (lexicon_cued, grammar_cued, non_shortcut) counts."""
    records = list(records)
    for rec in records:
        if rec.verdict is None:
            raise DataError(f"record {rec.sample_id}: verdicts required")
    return [(b.lexicon_cued, b.grammar_cued, b.non_shortcut) for b in bin_records(records, n_bins)]


RELIABILITY_COLUMNS = (
    "bin_low",
    "bin_high",
    "count",
    "accuracy",
    "mean_confidence",
    "lexicon_cued",
    "grammar_cued",
    "non_shortcut",
)


def write_reliability_csv(bins, path) -> None:
    """Reliability diagram plus stacked cue histogram, one row per bin."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RELIABILITY_COLUMNS)
        for b in bins:
            writer.writerow(
                [
                    repr(b.low),
                    repr(b.high),
                    b.count,
                    repr(b.accuracy),
                    repr(b.mean_confidence),
                    b.lexicon_cued,
                    b.grammar_cued,
                    b.non_shortcut,
                ]
            )
