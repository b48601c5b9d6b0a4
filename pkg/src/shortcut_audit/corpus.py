"""Corpus loading, word-level tokenization, and co-occurrence count statistics."""

from __future__ import annotations

import csv
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "DataError",
    "Sample",
    "Corpus",
    "tokenize",
    "load_corpus",
    "split",
]


class DataError(ValueError):
    """Raised for bad input data: missing files, malformed records, empty corpora."""


# Ellipsis is matched first so "..." survives as a single token; any other
# non-word, non-space character becomes a standalone token.
_TOKEN_RE = re.compile(r"\.\.\.|\w+|[^\w\s]")


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split text into word and punctuation tokens.

    Words are maximal runs of word characters, punctuation marks are emitted
    as standalone tokens, and the ellipsis "..." is kept whole. Lowercasing
    keeps one shared token space across counting and attribution matching.
    """
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class Sample:
    """One labeled text with its token sequence."""

    id: str
    text: str
    tokens: tuple[str, ...]
    label: str


class Corpus:
    """Immutable collection of labeled samples with token/label count tables.

    Attributes:
        samples: samples in ingestion order.
        labels: distinct labels in first-seen order.
        vocab: token -> total occurrence count across all samples.
        token_label_counts: (token, label) -> occurrence count.
        label_token_totals: label -> total token occurrences in that label's samples.
        total_tokens: sum of all token occurrences.
    """

    def __init__(self, samples: list[Sample]):
        if not samples:
            raise DataError("empty corpus")
        seen_ids = set()
        labels: list[str] = []
        vocab: Counter[str] = Counter()
        pair_counts: Counter[tuple[str, str]] = Counter()
        label_totals: Counter[str] = Counter()
        for s in samples:
            if s.id in seen_ids:
                raise DataError(f"duplicate sample id {s.id!r}")
            seen_ids.add(s.id)
            if not s.tokens:
                raise DataError(f"sample {s.id!r} has no tokens")
            if s.label not in label_totals:
                labels.append(s.label)
            for tok in s.tokens:
                vocab[tok] += 1
                pair_counts[tok, s.label] += 1
            label_totals[s.label] += len(s.tokens)
        self.samples = tuple(samples)
        self.labels = tuple(labels)
        self.vocab = dict(vocab)
        self.token_label_counts = dict(pair_counts)
        self.label_token_totals = dict(label_totals)
        self.total_tokens = sum(vocab.values())

    def __len__(self) -> int:
        return len(self.samples)


def _records_from_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno + 1}: invalid JSON: {exc.msg}") from exc
            if not isinstance(rec, dict):
                raise DataError(f"{path}: line {lineno + 1}: record is not an object")
            yield lineno, rec


def _records_from_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = {"text", "label"} - set(reader.fieldnames)
        if missing:
            raise DataError(f"{path}: missing required columns: {sorted(missing)}")
        for idx, row in enumerate(reader):
            yield idx, row


def load_corpus(path: str | Path, format: str | None = None, lowercase: bool = True) -> Corpus:
    """Load a labeled corpus from a JSONL or CSV file.

    Each record needs a non-null ``text`` and ``label``; an optional ``id``
    defaults to the zero-based record index as a decimal string. Samples that
    tokenize to nothing are dropped (logged); if nothing survives, the load
    fails with an "empty corpus" error that reports the drop count.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise DataError(f"unknown corpus format {format!r} (expected jsonl or csv)")

    records = _records_from_jsonl(path) if format == "jsonl" else _records_from_csv(path)
    samples: list[Sample] = []
    dropped = 0
    for idx, rec in records:
        text = rec.get("text")
        label = rec.get("label")
        if not isinstance(text, str) or not isinstance(label, str) or not label:
            raise DataError(f"{path}: line {idx + 1}: record needs string 'text' and 'label'")
        tokens = tokenize(text, lowercase=lowercase)
        if not tokens:
            dropped += 1
            continue
        sample_id = rec.get("id")
        if sample_id is None:
            sample_id = str(idx)
        samples.append(Sample(id=str(sample_id), text=text, tokens=tuple(tokens), label=label))

    if dropped:
        log.info("dropped %d empty-after-tokenization sample(s) from %s", dropped, path)
    if not samples:
        raise DataError(f"empty corpus: {path} ({dropped} sample(s) dropped as empty)")
    return Corpus(samples)


def split(corpus: Corpus, fractions: tuple[float, float], seed: int) -> tuple[Corpus, Corpus]:
    """Partition a corpus into disjoint train/test corpora, reproducibly.

    Sample order within each side follows the parent corpus.
    """
    if len(fractions) != 2 or any(f < 0 for f in fractions):
        raise DataError("fractions must be two non-negative proportions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(corpus)
    n_train = int(round(fractions[0] * n))
    if n_train <= 0 or n_train >= n:
        raise DataError(f"empty split: {n} samples at fractions {fractions}")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = sorted(perm[:n_train].tolist())
    test_idx = sorted(perm[n_train:].tolist())
    return (
        Corpus([corpus.samples[i] for i in train_idx]),
        Corpus([corpus.samples[i] for i in test_idx]),
    )
