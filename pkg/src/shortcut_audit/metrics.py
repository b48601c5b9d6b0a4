"""Task performance, shortcut prevalence, and their trade-off ratio.

All three headline numbers live on a percentage scale: F1 in [0, 100], the
shortcut-cued share of predictions in [0, 100], and the trade-off as their
ratio. A higher trade-off means the same accuracy was reached while leaning
on fewer shortcut cues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .calibration import ece as _ece
from .corpus import DataError

__all__ = [
    "AVERAGING_MODES",
    "TradeoffSummary",
    "f1",
    "shortcut_rate",
    "shortcut_tradeoff",
    "summarize",
]

AVERAGING_MODES = ("macro", "micro")


@dataclass(frozen=True)
class TradeoffSummary:
    f1_percent: float  # [0, 100]
    p_sc_percent: float  # [0, 100], share of shortcut-cued predictions
    t_sc: float  # f1_percent / p_sc_percent; math.inf marks "no shortcut reliance"
    ece: float  # [0, 1]


def f1(records, averaging: str = "macro") -> float:
    """Percentage-scaled F1 over prediction records.

    Macro averages per-class F1 with equal class weight over every label
    seen in truth or prediction; micro pools the counts, which for
    single-label records equals plain accuracy.
    """
    records = list(records)
    if not records:
        raise ValueError("f1 needs a non-empty record list")
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging {averaging!r} (expected one of {AVERAGING_MODES})")
    labels = sorted({r.true_label for r in records} | {r.predicted_label for r in records})
    if averaging == "micro":
        correct = sum(r.correct for r in records)
        return 100.0 * correct / len(records)
    scores = []
    for label in labels:
        tp = sum(1 for r in records if r.predicted_label == label and r.true_label == label)
        fp = sum(1 for r in records if r.predicted_label == label and r.true_label != label)
        fn = sum(1 for r in records if r.predicted_label != label and r.true_label == label)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return 100.0 * sum(scores) / len(scores)


def shortcut_rate(records) -> float:
    """Percentage of predictions flagged shortcut-cued."""
    records = list(records)
    if not records:
        raise ValueError("shortcut_rate needs a non-empty record list")
    for rec in records:
        if rec.verdict is None:
            raise DataError(f"record {rec.sample_id}: verdicts required")
    return 100.0 * sum(r.verdict.is_shortcut for r in records) / len(records)


def shortcut_tradeoff(f1_percent: float, p_sc_percent: float) -> float:
    """F1 divided by the shortcut rate, both on the percent scale.

    A zero shortcut rate means no reliance to trade against; that is
    reported as math.inf rather than an error so summaries stay total.
    """
    for name, value in (("f1_percent", f1_percent), ("p_sc_percent", p_sc_percent)):
        if not 0.0 <= value <= 100.0:
            raise ValueError(f"{name} must be in [0, 100], got {value}")
    if p_sc_percent == 0.0:
        return math.inf
    return f1_percent / p_sc_percent


def summarize(records, n_bins: int = 10, averaging: str = "macro") -> TradeoffSummary:
    """All four headline metrics from one record list."""
    f1_percent = f1(records, averaging)
    p_sc_percent = shortcut_rate(records)
    return TradeoffSummary(
        f1_percent=f1_percent,
        p_sc_percent=p_sc_percent,
        t_sc=shortcut_tradeoff(f1_percent, p_sc_percent),
        ece=_ece(records, n_bins),
    )
