"""Local mutual information between tokens and labels.

For a token w and label y, the score is

    lmi(w, y) = p(w, y) * log(p(y | w) / p(y))

with p(y | w) = count(w, y) / count(w). The joint p(w, y) and marginal p(y)
are count(w, y) / N and count(y) / N, where count(y) is the number of token
occurrences in samples labeled y and N depends on the normalizer:

* ``total_tokens`` (default): N is the corpus-wide token occurrence count,
  so all quantities are valid probabilities.
* ``distinct_vocab``: N is the number of distinct tokens; p(w, y) and p(y)
  are then relative to vocabulary size and may exceed 1.

Scores use the natural log. The log base only rescales every score by the
same positive constant, so sort order and head membership never depend on it.

The "head" of a label is the top ``head_fraction`` of its scored tokens.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus

__all__ = ["LmiEntry", "LmiTable", "compute_lmi", "head", "NORMALIZERS"]

NORMALIZERS = ("total_tokens", "distinct_vocab")


@dataclass(frozen=True)
class LmiEntry:
    token: str
    label: str
    count_wy: int
    p_wy: float
    p_y_given_w: float
    p_y: float
    lmi: float


class LmiTable:
    """Per-label LMI scores, sorted descending, with precomputed head sets."""

    def __init__(self, entries: dict[str, list[LmiEntry]], head_fraction: float, normalizer: str):
        if not 0.0 < head_fraction <= 1.0:
            raise ValueError(f"head_fraction must be in (0, 1], got {head_fraction}")
        self.entries = entries
        self.head_fraction = head_fraction
        self.normalizer = normalizer
        self.heads = {label: _cut_head(ranked, head_fraction) for label, ranked in entries.items()}

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def to_dict(self) -> dict:
        return {
            "head_fraction": self.head_fraction,
            "normalizer": self.normalizer,
            "labels": {
                label: [{"token": e.token, "count": e.count_wy, "lmi": e.lmi} for e in ranked]
                for label, ranked in self.entries.items()
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")


def _rank_key(e: LmiEntry):
    # Descending lmi, then descending joint count, then token order.
    return (-e.lmi, -e.count_wy, e.token)


def _cut_head(ranked: list[LmiEntry], fraction: float) -> frozenset[str]:
    size = math.ceil(fraction * len(ranked))
    # Entries that tie the boundary entry on both sort keys are kept as well.
    while size < len(ranked) and (
        ranked[size].lmi == ranked[size - 1].lmi
        and ranked[size].count_wy == ranked[size - 1].count_wy
    ):
        size += 1
    return frozenset(e.token for e in ranked[:size])


def compute_lmi(
    corpus: Corpus,
    normalizer: str = "total_tokens",
    head_fraction: float = 0.05,
) -> LmiTable:
    """Score every co-occurring (token, label) pair of a corpus.

    One entry exists per pair with count(w, y) > 0; within each label the
    entries are sorted by descending score.
    """
    if normalizer not in NORMALIZERS:
        raise ValueError(f"unknown normalizer {normalizer!r} (expected one of {NORMALIZERS})")
    n = corpus.total_tokens if normalizer == "total_tokens" else len(corpus.vocab)
    per_label: dict[str, list[LmiEntry]] = {label: [] for label in corpus.labels}
    for (token, label), count_wy in corpus.token_label_counts.items():
        p_wy = count_wy / n
        p_y_given_w = count_wy / corpus.vocab[token]
        p_y = corpus.label_token_totals[label] / n
        entry = LmiEntry(
            token=token,
            label=label,
            count_wy=count_wy,
            p_wy=p_wy,
            p_y_given_w=p_y_given_w,
            p_y=p_y,
            lmi=p_wy * math.log(p_y_given_w / p_y),
        )
        per_label[label].append(entry)
    for ranked in per_label.values():
        ranked.sort(key=_rank_key)
    return LmiTable(per_label, head_fraction=head_fraction, normalizer=normalizer)


def head(table: LmiTable, label: str) -> frozenset[str]:
    """Top-fraction token set for a label, ties at the cut included."""
    try:
        return table.heads[label]
    except KeyError:
        raise KeyError(f"unknown label {label!r}; table has {sorted(table.heads)}") from None
