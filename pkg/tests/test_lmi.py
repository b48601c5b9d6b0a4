"""Token-label association scores and head extraction.

The oracle here is a from-scratch re-evaluation of the score on raw sample
lists: count joint occurrences with plain dict loops, form the probabilities
with the chosen normalizer, and take p(w,y) * log(p(y|w) / p(y)) directly.
"""

import dataclasses
import math

import numpy as np
import pytest

from shortcut_audit import Corpus, Sample, compute_lmi, head
from shortcut_audit.lmi import LmiTable


def corpus_from_texts(pairs):
    return Corpus([
        Sample(id=str(i), text=t, tokens=tuple(t.split()), label=y)
        for i, (t, y) in enumerate(pairs)
    ])


def random_corpus(rng, max_distinct=50):
    vocab = [f"t{i}" for i in range(int(rng.integers(3, max_distinct + 1)))]
    labels = ["y1", "y2", "y3"][: int(rng.integers(2, 4))]
    pairs = []
    for _ in range(int(rng.integers(4, 30))):
        length = int(rng.integers(1, 9))
        text = " ".join(rng.choice(vocab, size=length))
        pairs.append((text, str(rng.choice(labels))))
    return corpus_from_texts(pairs)


def oracle_scores(corpus, normalizer):
    """Independent evaluation over raw samples; returns {(token,label): lmi}."""
    joint, token_count, label_count, total = {}, {}, {}, 0
    for s in corpus.samples:
        for tok in s.tokens:
            joint[(tok, s.label)] = joint.get((tok, s.label), 0) + 1
            token_count[tok] = token_count.get(tok, 0) + 1
            label_count[s.label] = label_count.get(s.label, 0) + 1
            total += 1
    n = total if normalizer == "total_tokens" else len(token_count)
    out = {}
    for (tok, label), c_wy in joint.items():
        p_wy = c_wy / n
        p_y_given_w = c_wy / token_count[tok]
        p_y = label_count[label] / n
        out[(tok, label)] = p_wy * math.log(p_y_given_w / p_y)
    return out


def oracle_head(entries, fraction):
    """Sort-and-slice with the documented tie handling at the cut."""
    ranked = sorted(entries, key=lambda e: (-e.lmi, -e.count_wy, e.token))
    size = math.ceil(fraction * len(ranked))
    boundary = (ranked[size - 1].lmi, ranked[size - 1].count_wy)
    keep = ranked[:size]
    for e in ranked[size:]:
        if (e.lmi, e.count_wy) != boundary:
            break
        keep.append(e)
    return {e.token for e in keep}


class TestScoreValues:
    def test_hand_worked_two_sample_corpus(self):
        # "a b" labeled y1, "a c" labeled y2; total-token normalizer N = 4.
        corpus = corpus_from_texts([("a b", "y1"), ("a c", "y2")])
        table = compute_lmi(corpus, normalizer="total_tokens")
        scores = {(e.token, e.label): e.lmi for es in table.entries.values() for e in es}
        np.testing.assert_allclose(scores[("b", "y1")], 0.25 * math.log(2), atol=1e-15)
        np.testing.assert_allclose(scores[("a", "y1")], 0.0, atol=1e-15)
        np.testing.assert_allclose(scores[("a", "y2")], 0.0, atol=1e-15)

    def test_exclusive_cooccurrence_is_positive(self):
        corpus = corpus_from_texts([("only here", "y1"), ("other stuff", "y2")])
        table = compute_lmi(corpus)
        for e in table.entries["y1"]:
            assert e.p_y_given_w == 1.0
            assert e.lmi > 0.0

    def test_conditional_equal_to_marginal_scores_zero(self):
        # "same" appears once per label; its conditional matches each marginal.
        corpus = corpus_from_texts([("same x", "y1"), ("same z", "y2")])
        table = compute_lmi(corpus)
        scores = {(e.token, e.label): e.lmi for es in table.entries.values() for e in es}
        np.testing.assert_allclose(scores[("same", "y1")], 0.0, atol=1e-15)
        np.testing.assert_allclose(scores[("same", "y2")], 0.0, atol=1e-15)

    def test_oracle_equivalence_both_normalizers(self):
        rng = np.random.default_rng(42)
        for trial in range(60):
            corpus = random_corpus(rng)
            normalizer = ("total_tokens", "distinct_vocab")[trial % 2]
            table = compute_lmi(corpus, normalizer=normalizer)
            expected = oracle_scores(corpus, normalizer)
            got = {(e.token, e.label): e.lmi for es in table.entries.values() for e in es}
            assert got.keys() == expected.keys()
            for key, value in expected.items():
                np.testing.assert_allclose(got[key], value, atol=1e-12)

    def test_monotone_in_joint_count(self):
        # More joint occurrences at fixed token total and normalizer means a
        # strictly larger score whenever the conditional exceeds the marginal.
        base = corpus_from_texts([("w w q", "y1"), ("w q q q", "y2")])
        more = corpus_from_texts([("w w w", "y1"), ("w q q q q", "y2")])
        s_base = {(e.token, e.label): e for es in compute_lmi(base).entries.values() for e in es}
        s_more = {(e.token, e.label): e for es in compute_lmi(more).entries.values() for e in es}
        e1, e2 = s_base[("w", "y1")], s_more[("w", "y1")]
        assert e2.count_wy > e1.count_wy and e2.p_y_given_w > e2.p_y
        assert e2.lmi > e1.lmi


class TestHead:
    def test_size_is_ceil_of_fraction(self):
        pairs = [(" ".join(f"t{i}" for i in range(100)), "y1"), ("z", "y2")]
        table = compute_lmi(corpus_from_texts(pairs), head_fraction=0.05)
        # 101 distinct y1 tokens -> ceil(5.05) = 6, all tied -> ties included
        assert len(head(table, "y2")) == 1

    def test_single_token_label_has_head_of_one(self):
        table = compute_lmi(corpus_from_texts([("solo", "y1"), ("a b c", "y2")]))
        assert head(table, "y1") == {"solo"}

    def test_matches_sort_and_slice_oracle(self):
        rng = np.random.default_rng(3)
        for trial in range(60):
            corpus = random_corpus(rng)
            fraction = float(rng.choice([0.05, 0.1, 0.25, 0.5, 1.0]))
            table = compute_lmi(corpus, head_fraction=fraction)
            for label, entries in table.entries.items():
                assert head(table, label) == oracle_head(entries, fraction)

    def test_boundary_ties_are_included(self):
        # Eight tokens exclusive to y1 tie exactly on (score, count); the
        # ceil cut would keep just one, the tie rule keeps all eight. The two
        # tokens shared with y2 score lower and stay out.
        corpus = corpus_from_texts([("p q r s t u v w x y", "y1"), ("p q", "y2")])
        table = compute_lmi(corpus, head_fraction=0.1)
        assert head(table, "y1") == {"r", "s", "t", "u", "v", "w", "x", "y"}

    def test_unknown_label(self):
        table = compute_lmi(corpus_from_texts([("a", "y1"), ("b", "y2")]))
        with pytest.raises(KeyError, match="unknown label"):
            head(table, "nope")

    def test_log_base_change_never_moves_the_head(self):
        # Rescaling every score by the same positive constant (= switching
        # log base) must keep order and membership identical.
        rng = np.random.default_rng(11)
        for _ in range(40):
            corpus = random_corpus(rng)
            table = compute_lmi(corpus, head_fraction=0.2)
            scale = 1.0 / math.log(10)
            scaled = LmiTable(
                entries={
                    label: [dataclasses.replace(e, lmi=e.lmi * scale) for e in entries]
                    for label, entries in table.entries.items()
                },
                head_fraction=table.head_fraction,
                normalizer=table.normalizer,
            )
            assert scaled.heads == table.heads


class TestTableSerialization:
    def test_round_trip_fields(self, tmp_path):
        corpus = corpus_from_texts([("a b b", "y1"), ("a c", "y2")])
        table = compute_lmi(corpus)
        out = tmp_path / "table.json"
        table.save(out)
        import json

        blob = json.loads(out.read_text())
        assert blob["normalizer"] == "total_tokens"
        assert blob["head_fraction"] == 0.05
        assert set(blob["labels"]) == {"y1", "y2"}
        by_token = {e["token"]: e for e in blob["labels"]["y1"]}
        assert by_token["b"]["count"] == 2

    def test_entries_sorted_descending_within_label(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            table = compute_lmi(random_corpus(rng))
            for entries in table.entries.values():
                keys = [(-e.lmi, -e.count_wy, e.token) for e in entries]
                assert keys == sorted(keys)

    def test_head_fraction_validated(self):
        corpus = corpus_from_texts([("a", "y1"), ("b", "y2")])
        with pytest.raises(ValueError, match="head_fraction"):
            compute_lmi(corpus, head_fraction=0.0)
        with pytest.raises(ValueError, match="head_fraction"):
            compute_lmi(corpus, head_fraction=1.5)

    def test_unknown_normalizer(self):
        corpus = corpus_from_texts([("a", "y1"), ("b", "y2")])
        with pytest.raises(ValueError, match="normalizer"):
            compute_lmi(corpus, normalizer="bogus")
