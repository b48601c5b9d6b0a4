"""Shortcut detection and cue categorization.

A prediction is shortcut-cued when its top attributed tokens also appear in
the head of the predicted label's token-label association scores. Matched
cue tokens are then split into two camps: a lexicon cue carries at least one
content word, a grammar cue is made entirely of punctuation, subword pieces,
or stopwords.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .corpus import DataError
from .lmi import head as lmi_head

__all__ = [
    "MATCH_MODES",
    "CUE_TYPES",
    "CueLexicon",
    "ShortcutVerdict",
    "load_stopwords",
    "default_cue_lexicon",
    "detect",
    "categorize",
    "attach_verdicts",
]

MATCH_MODES = ("any", "all")
CUE_TYPES = ("lexicon", "grammar", "none")


def _is_punctuation(token: str) -> bool:
    # Solely non-alphanumeric characters; "..." and "?" qualify, "##ing" does not.
    return bool(token) and not any(ch.isalnum() for ch in token)


def _is_subword(token: str) -> bool:
    # Continuation markers from external subword tokenizers pass through here.
    return token.startswith("##") or token.startswith("▁")


@dataclass(frozen=True)
class CueLexicon:
    """Stopword set plus the punctuation/subword predicates.

    Category order is punctuation, then subword, then stopword; anything
    left is a lexical (content) token. Pure digit strings fall through to
    lexical since they are alphanumeric and rarely function words.
    """

    stopwords: frozenset[str]

    def category(self, token: str) -> str:
        if _is_punctuation(token):
            return "punctuation"
        if _is_subword(token):
            return "subword"
        if token in self.stopwords:
            return "stopword"
        return "lexical"

    def is_lexical(self, token: str) -> bool:
        return self.category(token) == "lexical"


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One token per line, UTF-8; blank lines ignored."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such stopword file: {path}")
    words = (line.strip() for line in path.read_text(encoding="utf-8").splitlines())
    return frozenset(w for w in words if w)


def default_cue_lexicon() -> CueLexicon:
    text = resources.files("shortcut_audit").joinpath("data/stopwords.txt").read_text("utf-8")
    return CueLexicon(stopwords=frozenset(w.strip() for w in text.splitlines() if w.strip()))


@dataclass(frozen=True)
class ShortcutVerdict:
    is_shortcut: bool
    matched_tokens: tuple[str, ...]  # sorted top-k ∩ head intersection
    cue_type: str  # lexicon | grammar | none
    match_mode: str


def categorize(matched_tokens, cues: CueLexicon) -> str:
    """"lexicon" when any matched token is a content word, else "grammar"."""
    matched = tuple(matched_tokens)
    if not matched:
        raise ValueError("categorize needs a non-empty matched token set")
    if any(cues.is_lexical(tok) for tok in matched):
        return "lexicon"
    return "grammar"


def detect(
    top_tokens,
    head,
    match_mode: str = "any",
    cues: CueLexicon | None = None,
) -> ShortcutVerdict:
    """Match top attributed tokens against one label's head set.

    any-mode flags when the intersection is non-empty; all-mode flags only
    when every top token is in the head. The intersection is reported either
    way.
    """
    tokens = [tok for tok, *_ in top_tokens] if _is_pairs(top_tokens) else list(top_tokens)
    if not tokens:
        raise ValueError("detect needs a non-empty top token list")
    if match_mode not in MATCH_MODES:
        raise ValueError(f"unknown match_mode {match_mode!r} (expected one of {MATCH_MODES})")
    head_set = set(head)
    matched = tuple(sorted(set(tokens) & head_set))
    if match_mode == "any":
        is_shortcut = bool(matched)
    else:
        is_shortcut = all(tok in head_set for tok in tokens)
    if is_shortcut:
        cue_type = categorize(matched, cues if cues is not None else default_cue_lexicon())
    else:
        cue_type = "none"
    return ShortcutVerdict(
        is_shortcut=is_shortcut, matched_tokens=matched, cue_type=cue_type, match_mode=match_mode
    )


def _is_pairs(top_tokens) -> bool:
    seq = list(top_tokens)
    return bool(seq) and isinstance(seq[0], tuple)


def attach_verdicts(records, table, match_mode: str = "any", cues: CueLexicon | None = None):
    """Verdict for every prediction record against its predicted label's head.

    Used for in-process audits and for externally imported predictions
    alike; the record's top tokens must already be populated.
    """
    cues = cues if cues is not None else default_cue_lexicon()
    out = []
    for rec in records:
        if not rec.top_tokens:
            raise DataError(f"record {rec.sample_id}: top tokens required for shortcut detection")
        try:
            label_head = lmi_head(table, rec.predicted_label)
        except KeyError as exc:
            raise DataError(f"record {rec.sample_id}: {exc.args[0]}") from None
        verdict = detect(rec.top_tokens, label_head, match_mode, cues)
        out.append(replace(rec, verdict=verdict))
    return out
