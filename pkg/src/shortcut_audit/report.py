"""Audit report assembly, diffing, and external-prediction ingestion.

A report bundles the headline metrics, per-bin reliability rows, cue-type
totals, the full prediction records, and the configuration that produced
them, so every embedded number can be recomputed from the report alone.
Serialization is canonical JSON: keys sorted, two-space indent, trailing
newline — byte-identical across runs for identical inputs.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

from . import __version__
from .attribution import attribute_sample
from .calibration import BinStats, PredictionRecord, bin_records, make_record
from .corpus import Corpus, DataError
from .lmi import LmiTable, NORMALIZERS
from .metrics import TradeoffSummary, summarize
from .model import OUTPUT_KINDS
from .shortcut import MATCH_MODES, CueLexicon, ShortcutVerdict, attach_verdicts

__all__ = [
    "AuditConfig",
    "AuditReport",
    "ReportDelta",
    "BinDelta",
    "audit_records",
    "assemble",
    "diff",
    "import_external",
    "to_json",
    "from_json",
    "save_report",
    "load_report",
    "save_delta",
    "write_summary_csv",
    "mean_over_reports",
]

SUMMARY_COLUMNS = ("model", "dataset", "P_sc", "T_sc", "ECE", "F1")


@dataclass(frozen=True)
class AuditConfig:
    bins: int = 10
    top_k: int = 3
    head_fraction: float = 0.05
    match_mode: str = "any"
    ig_steps: int = 50
    output_kind: str = "probability"
    normalizer: str = "total_tokens"
    averaging: str = "macro"
    stopwords: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.bins < 1 or self.top_k < 1 or self.ig_steps < 1:
            raise ValueError("bins, top_k and ig_steps must all be >= 1")
        if not 0.0 < self.head_fraction <= 1.0:
            raise ValueError(f"head_fraction must be in (0, 1], got {self.head_fraction}")
        if self.match_mode not in MATCH_MODES:
            raise ValueError(f"unknown match_mode {self.match_mode!r}")
        if self.output_kind not in OUTPUT_KINDS:
            raise ValueError(f"unknown output_kind {self.output_kind!r}")
        if self.normalizer not in NORMALIZERS:
            raise ValueError(f"unknown normalizer {self.normalizer!r}")


@dataclass
class AuditReport:
    dataset: str
    model: str
    n: int
    summary: TradeoffSummary
    bins: list[BinStats]
    cue_totals: dict[str, int]  # lexicon / grammar / non_shortcut
    config: AuditConfig
    version: str
    records: tuple[PredictionRecord, ...]


def audit_records(
    classifier,
    corpus: Corpus,
    table: LmiTable,
    config: AuditConfig,
    cues: CueLexicon | None = None,
    jobs: int = 1,
) -> list[PredictionRecord]:
    """Attribution plus shortcut verdict for every sample in the corpus.

    The per-sample work is pure, so it may fan out over ``jobs`` worker
    threads; records are sorted by sample id before any reduction, making
    the output independent of worker scheduling.
    """

    def one(sample) -> PredictionRecord:
        result, probs = attribute_sample(
            classifier, sample, config.top_k, config.ig_steps, config.output_kind
        )
        return make_record(
            sample.id,
            sample.label,
            classifier.labels[result.predicted_class],
            probs,
            top_tokens=result.top_tokens,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, corpus.samples))
    else:
        records = [one(s) for s in corpus.samples]
    records.sort(key=lambda r: r.sample_id)
    return attach_verdicts(records, table, config.match_mode, cues)


def assemble(records, config: AuditConfig, dataset: str = "", model: str = "") -> AuditReport:
    records = list(records)
    if not records:
        raise DataError("empty records: nothing to audit")
    for rec in records:
        if rec.verdict is None:
            raise DataError(f"record {rec.sample_id}: verdicts required")
    bins = bin_records(records, config.bins)
    return AuditReport(
        dataset=dataset,
        model=model,
        n=len(records),
        summary=summarize(records, config.bins, config.averaging),
        bins=bins,
        cue_totals={
            "lexicon": sum(b.lexicon_cued for b in bins),
            "grammar": sum(b.grammar_cued for b in bins),
            "non_shortcut": sum(b.non_shortcut for b in bins),
        },
        config=config,
        version=__version__,
        records=tuple(records),
    )


@dataclass
class BinDelta:
    index: int
    count: int
    accuracy: float
    mean_confidence: float
    lexicon_cued: int
    grammar_cued: int
    non_shortcut: int


@dataclass
class ReportDelta:
    """Fieldwise after minus before; t_sc is None when either side is infinite."""

    ece: float
    f1_percent: float
    p_sc_percent: float
    t_sc: float | None
    bins: list[BinDelta]


def diff(before: AuditReport, after: AuditReport) -> ReportDelta:
    if before.dataset != after.dataset:
        raise DataError(f"mismatched datasets: {before.dataset!r} vs {after.dataset!r}")
    if len(before.bins) != len(after.bins):
        raise DataError(
            f"mismatched bin counts: {len(before.bins)} vs {len(after.bins)}"
        )
    t_sc = None
    if math.isfinite(before.summary.t_sc) and math.isfinite(after.summary.t_sc):
        t_sc = after.summary.t_sc - before.summary.t_sc
    return ReportDelta(
        ece=after.summary.ece - before.summary.ece,
        f1_percent=after.summary.f1_percent - before.summary.f1_percent,
        p_sc_percent=after.summary.p_sc_percent - before.summary.p_sc_percent,
        t_sc=t_sc,
        bins=[
            BinDelta(
                index=b.index,
                count=a.count - b.count,
                accuracy=a.accuracy - b.accuracy,
                mean_confidence=a.mean_confidence - b.mean_confidence,
                lexicon_cued=a.lexicon_cued - b.lexicon_cued,
                grammar_cued=a.grammar_cued - b.grammar_cued,
                non_shortcut=a.non_shortcut - b.non_shortcut,
            )
            for b, a in zip(before.bins, after.bins)
        ],
    )


def import_external(path: str | Path) -> list[PredictionRecord]:
    """Prediction records from an external model's JSONL export.

    Each line needs id, true_label, predicted_label, probs and top_tokens
    ([{token, score}, ...]). Probability vectors must sum to 1 within 1e-3
    and are renormalized exactly so downstream invariants hold; supplied
    attributions are trusted as-is. Verdicts are attached separately once a
    matching head table exists.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such predictions file: {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(raw, dict):
                raise DataError(f"{path}: line {lineno}: record is not an object")
            missing = {"id", "true_label", "predicted_label", "probs", "top_tokens"} - raw.keys()
            if missing:
                raise DataError(f"{path}: line {lineno}: missing keys {sorted(missing)}")
            probs = raw["probs"]
            if not isinstance(probs, list) or not probs or not all(
                isinstance(p, (int, float)) for p in probs
            ):
                raise DataError(f"{path}: line {lineno}: probs must be a non-empty number list")
            total = float(sum(probs))
            if abs(total - 1.0) >= 1e-3:
                raise DataError(f"{path}: line {lineno}: probabilities sum to {total}")
            try:
                top_tokens = [(t["token"], float(t["score"])) for t in raw["top_tokens"]]
            except (TypeError, KeyError) as exc:
                raise DataError(
                    f"{path}: line {lineno}: top_tokens must be [{{token, score}}, ...]"
                ) from exc
            records.append(
                make_record(
                    str(raw["id"]),
                    str(raw["true_label"]),
                    str(raw["predicted_label"]),
                    [p / total for p in probs],
                    top_tokens=top_tokens,
                )
            )
    if not records:
        raise DataError(f"empty predictions file: {path}")
    return records


def _record_to_dict(rec: PredictionRecord) -> dict:
    out = {
        "id": rec.sample_id,
        "true_label": rec.true_label,
        "predicted_label": rec.predicted_label,
        "probs": list(rec.probs),
        "confidence": rec.confidence,
        "correct": rec.correct,
        "top_tokens": [{"token": t, "score": s} for t, s in rec.top_tokens],
    }
    if rec.verdict is not None:
        out["shortcut"] = rec.verdict.is_shortcut
        out["cue_type"] = rec.verdict.cue_type
        out["matched_tokens"] = list(rec.verdict.matched_tokens)
        out["match_mode"] = rec.verdict.match_mode
    return out


def _record_from_dict(raw: dict) -> PredictionRecord:
    verdict = None
    if "shortcut" in raw:
        verdict = ShortcutVerdict(
            is_shortcut=raw["shortcut"],
            matched_tokens=tuple(raw["matched_tokens"]),
            cue_type=raw["cue_type"],
            match_mode=raw["match_mode"],
        )
    return PredictionRecord(
        sample_id=raw["id"],
        true_label=raw["true_label"],
        predicted_label=raw["predicted_label"],
        probs=tuple(raw["probs"]),
        confidence=raw["confidence"],
        correct=raw["correct"],
        top_tokens=tuple((t["token"], t["score"]) for t in raw["top_tokens"]),
        verdict=verdict,
    )


def _summary_to_dict(s: TradeoffSummary) -> dict:
    return {
        "f1_percent": s.f1_percent,
        "p_sc_percent": s.p_sc_percent,
        "t_sc": None if math.isinf(s.t_sc) else s.t_sc,
        "ece": s.ece,
    }


def to_json(report: AuditReport) -> str:
    blob = {
        "version": report.version,
        "dataset": report.dataset,
        "model": report.model,
        "n": report.n,
        "summary": _summary_to_dict(report.summary),
        "config": asdict(report.config),
        "cue_totals": report.cue_totals,
        "bins": [asdict(b) for b in report.bins],
        "records": [_record_to_dict(r) for r in report.records],
    }
    return json.dumps(blob, sort_keys=True, indent=2) + "\n"


def from_json(text: str) -> AuditReport:
    try:
        blob = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid report JSON: {exc.msg}") from exc
    s = blob["summary"]
    summary = TradeoffSummary(
        f1_percent=s["f1_percent"],
        p_sc_percent=s["p_sc_percent"],
        t_sc=math.inf if s["t_sc"] is None else s["t_sc"],
        ece=s["ece"],
    )
    return AuditReport(
        dataset=blob["dataset"],
        model=blob["model"],
        n=blob["n"],
        summary=summary,
        bins=[BinStats(**b) for b in blob["bins"]],
        cue_totals=blob["cue_totals"],
        config=AuditConfig(**blob["config"]),
        version=blob["version"],
        records=tuple(_record_from_dict(r) for r in blob["records"]),
    )


def save_report(report: AuditReport, path: str | Path) -> None:
    Path(path).write_text(to_json(report))


def load_report(path: str | Path) -> AuditReport:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such report: {path}")
    return from_json(path.read_text())


def save_delta(delta: ReportDelta, path: str | Path) -> None:
    blob = {
        "ece": delta.ece,
        "f1_percent": delta.f1_percent,
        "p_sc_percent": delta.p_sc_percent,
        "t_sc": delta.t_sc,
        "bins": [asdict(b) for b in delta.bins],
    }
    Path(path).write_text(json.dumps(blob, sort_keys=True, indent=2) + "\n")


def write_summary_csv(reports, path) -> None:
    """Summary table, one row per report: model, dataset, P_sc, T_sc, ECE, F1."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in reports:
            s = r.summary
            writer.writerow(
                [
                    r.model,
                    r.dataset,
                    repr(s.p_sc_percent),
                    "inf" if math.isinf(s.t_sc) else repr(s.t_sc),
                    repr(s.ece),
                    repr(s.f1_percent),
                ]
            )


def mean_over_reports(reports) -> TradeoffSummary:
    """Plain mean of f1/p_sc/ece across runs, with t_sc recomputed from the means."""
    reports = list(reports)
    if not reports:
        raise ValueError("mean_over_reports needs at least one report")
    n = len(reports)
    f1_mean = sum(r.summary.f1_percent for r in reports) / n
    p_sc_mean = sum(r.summary.p_sc_percent for r in reports) / n
    ece_mean = sum(r.summary.ece for r in reports) / n
    t_sc = f1_mean / p_sc_mean if p_sc_mean > 0 else math.inf
    return TradeoffSummary(f1_percent=f1_mean, p_sc_percent=p_sc_mean, t_sc=t_sc, ece=ece_mean)
