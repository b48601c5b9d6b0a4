"""Report assembly, canonical serialization, diffing, and external import."""

import json
import math

import numpy as np
import pytest

from shortcut_audit import (
    AuditConfig,
    DataError,
    ShortcutVerdict,
    bin_records,
    ece,
    f1,
    make_record,
    mean_over_reports,
    shortcut_rate,
    write_summary_csv,
)
from shortcut_audit.report import (
    assemble,
    diff,
    from_json,
    import_external,
    load_report,
    save_report,
    to_json,
)


def flagged(cue="lexicon"):
    return ShortcutVerdict(True, ("w",), cue, "any")


CLEAN = ShortcutVerdict(False, (), "none", "any")


def wide_record(i, true, predicted, confidence, verdict):
    if confidence >= 0.5:
        probs = (confidence, 1.0 - confidence)
    else:
        k = math.ceil(1.0 / confidence)
        spread = (1.0 - confidence) / (k - 1)
        while spread > confidence:
            k += 1
            spread = (1.0 - confidence) / (k - 1)
        probs = (confidence,) + (spread,) * (k - 1)
    return make_record(str(i), true, predicted, probs, verdict=verdict)


def hand_records():
    # Reuses the two-bin worked example: ECE 0.25 at M=2. Three predictions
    # flagged, one clean; two correct, two wrong.
    return [
        wide_record(0, "a", "a", 0.9, flagged()),
        wide_record(1, "b", "a", 0.8, flagged("grammar")),
        wide_record(2, "b", "b", 0.3, flagged()),
        wide_record(3, "a", "b", 0.4, CLEAN),
    ]


def random_records(rng, n):
    out = []
    for i in range(n):
        confidence = float(rng.uniform(0.5, 1.0))
        correct = bool(rng.integers(2))
        true = "a" if correct else "b"
        flag = bool(rng.integers(2))
        cue = str(rng.choice(["lexicon", "grammar"])) if flag else "none"
        verdict = ShortcutVerdict(flag, ("w",) if flag else (), cue, "any")
        out.append(wide_record(i, true, "a", confidence, verdict))
    return out


class TestAssemble:
    def test_hand_fixture_summary(self):
        report = assemble(hand_records(), AuditConfig(bins=2), "toy", "hand")
        assert report.n == 4
        assert report.summary.ece == pytest.approx(0.25, abs=1e-12)
        assert report.summary.p_sc_percent == 75.0
        assert report.summary.f1_percent == pytest.approx(50.0)
        assert report.cue_totals == {"lexicon": 2, "grammar": 1, "non_shortcut": 1}

    def test_empty_records_rejected(self):
        with pytest.raises(DataError, match="empty records"):
            assemble([], AuditConfig())

    def test_missing_verdicts_rejected(self):
        bare = make_record("x", "a", "a", (0.9, 0.1))
        with pytest.raises(DataError, match="verdicts required"):
            assemble([bare], AuditConfig())

    def test_summary_recomputable_from_stored_records(self, planted):
        report = planted["report"]
        records = list(report.records)
        assert f1(records) == report.summary.f1_percent
        assert shortcut_rate(records) == report.summary.p_sc_percent
        assert ece(records, report.config.bins) == report.summary.ece
        rebuilt = bin_records(records, report.config.bins)
        assert rebuilt == report.bins

    def test_config_validation(self):
        with pytest.raises(ValueError, match=">= 1"):
            AuditConfig(bins=0)
        with pytest.raises(ValueError, match="head_fraction"):
            AuditConfig(head_fraction=0.0)
        with pytest.raises(ValueError, match="match_mode"):
            AuditConfig(match_mode="some")


class TestSerialization:
    def test_round_trip_bytes(self, tmp_path, planted):
        report = planted["report"]
        text = to_json(report)
        assert to_json(from_json(text)) == text
        path = tmp_path / "report.json"
        save_report(report, path)
        assert to_json(load_report(path)) == text

    def test_infinite_tradeoff_serializes_as_null(self):
        records = [wide_record(i, "a", "a", 0.9, CLEAN) for i in range(3)]
        report = assemble(records, AuditConfig(), "clean", "m")
        assert report.summary.t_sc == math.inf
        blob = json.loads(to_json(report))
        assert blob["summary"]["t_sc"] is None
        assert from_json(to_json(report)).summary.t_sc == math.inf

    def test_missing_report_file(self, tmp_path):
        with pytest.raises(DataError, match="no such report"):
            load_report(tmp_path / "absent.json")


class TestDiff:
    def test_identical_reports_diff_to_zero(self):
        report = assemble(hand_records(), AuditConfig(bins=2), "toy", "hand")
        delta = diff(report, report)
        assert delta.ece == 0.0 and delta.f1_percent == 0.0 and delta.p_sc_percent == 0.0
        assert delta.t_sc == 0.0
        assert all(
            b.count == 0 and b.accuracy == 0.0 and b.lexicon_cued == 0 for b in delta.bins
        )

    def test_ece_delta_sign(self):
        rng = np.random.default_rng(0)
        config = AuditConfig(bins=5)
        before = assemble(random_records(rng, 50), config, "d", "m")
        after = assemble(random_records(rng, 50), config, "d", "m")
        delta = diff(before, after)
        assert delta.ece == pytest.approx(after.summary.ece - before.summary.ece, abs=1e-15)

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        config = AuditConfig(bins=4)
        for _ in range(30):
            a = assemble(random_records(rng, int(rng.integers(4, 40))), config, "d", "m")
            b = assemble(random_records(rng, int(rng.integers(4, 40))), config, "d", "m")
            ab, ba = diff(a, b), diff(b, a)
            assert ab.ece == -ba.ece
            assert ab.f1_percent == -ba.f1_percent
            assert ab.p_sc_percent == -ba.p_sc_percent
            assert ab.t_sc == -ba.t_sc
            for x, y in zip(ab.bins, ba.bins):
                assert x.count == -y.count and x.accuracy == -y.accuracy

    def test_mismatched_datasets_rejected(self):
        report_a = assemble(hand_records(), AuditConfig(bins=2), "one", "m")
        report_b = assemble(hand_records(), AuditConfig(bins=2), "two", "m")
        with pytest.raises(DataError, match="mismatched datasets"):
            diff(report_a, report_b)

    def test_mismatched_bin_counts_rejected(self):
        report_a = assemble(hand_records(), AuditConfig(bins=2), "d", "m")
        report_b = assemble(hand_records(), AuditConfig(bins=4), "d", "m")
        with pytest.raises(DataError, match="mismatched bin counts"):
            diff(report_a, report_b)

    def test_infinite_tradeoff_delta_is_none(self):
        clean = [wide_record(i, "a", "a", 0.9, CLEAN) for i in range(3)]
        noisy = hand_records()
        config = AuditConfig(bins=2)
        report_clean = assemble(clean, config, "d", "m")
        report_noisy = assemble(noisy, config, "d", "m")
        assert diff(report_noisy, report_clean).t_sc is None


class TestImportExternal:
    def write(self, path, rows):
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))

    def valid_row(self, i=0, **overrides):
        row = {
            "id": f"e{i}",
            "true_label": "pos",
            "predicted_label": "pos",
            "probs": [0.7, 0.3],
            "top_tokens": [{"token": "great", "score": 0.8}],
        }
        row.update(overrides)
        return row

    def test_two_valid_lines(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        self.write(path, [self.valid_row(0), self.valid_row(1, predicted_label="neg")])
        records = import_external(path)
        assert len(records) == 2
        assert records[0].confidence == pytest.approx(0.7)
        assert records[1].correct is False

    def test_bad_probability_sum_reports_line(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        self.write(path, [self.valid_row(0), self.valid_row(1, probs=[0.5, 0.3])])
        with pytest.raises(DataError, match="line 2.*sum"):
            import_external(path)

    def test_near_one_sums_are_renormalized(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        self.write(path, [self.valid_row(0, probs=[0.7002, 0.3])])
        record = import_external(path)[0]
        assert abs(sum(record.probs) - 1.0) < 1e-12

    def test_missing_keys_report_line(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        row = self.valid_row(0)
        del row["top_tokens"]
        self.write(path, [row])
        with pytest.raises(DataError, match=r"line 1.*top_tokens"):
            import_external(path)

    def test_subword_pieces_pass_through(self, tmp_path, planted):
        from shortcut_audit import attach_verdicts, categorize, default_cue_lexicon

        path = tmp_path / "preds.jsonl"
        self.write(path, [self.valid_row(0, top_tokens=[{"token": "##ing", "score": 1.0}])])
        record = import_external(path)[0]
        assert record.top_tokens == (("##ing", 1.0),)
        assert categorize({"##ing"}, default_cue_lexicon()) == "grammar"

    def test_malformed_json_and_empty_file(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{nope\n")
        with pytest.raises(DataError, match="line 1"):
            import_external(bad)
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(DataError, match="empty predictions"):
            import_external(empty)
        with pytest.raises(DataError, match="no such predictions"):
            import_external(tmp_path / "absent.jsonl")


class TestSummaryCsvAndMeans:
    def test_summary_csv_shape(self, tmp_path):
        report = assemble(hand_records(), AuditConfig(bins=2), "toy", "hand")
        path = tmp_path / "summary.csv"
        write_summary_csv([report], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "model,dataset,P_sc,T_sc,ECE,F1"
        cells = lines[1].split(",")
        assert cells[0] == "hand" and cells[1] == "toy"
        assert float(cells[2]) == 75.0
        assert float(cells[5]) == pytest.approx(50.0)

    def test_mean_over_reports(self):
        rng = np.random.default_rng(3)
        config = AuditConfig(bins=5)
        reports = [assemble(random_records(rng, 30), config, "d", "m") for _ in range(5)]
        mean = mean_over_reports(reports)
        assert mean.f1_percent == pytest.approx(
            sum(r.summary.f1_percent for r in reports) / 5
        )
        assert mean.ece == pytest.approx(sum(r.summary.ece for r in reports) / 5)
        assert mean.t_sc == pytest.approx(mean.f1_percent / mean.p_sc_percent)

    def test_mean_requires_reports(self):
        with pytest.raises(ValueError, match="at least one"):
            mean_over_reports([])
