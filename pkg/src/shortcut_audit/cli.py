"""Command-line surface for the audit pipeline.

Subcommands:
  train        fit the bundled classifier, write a checkpoint + loss trace
  audit        full pipeline: token-label head fit, attribution, shortcut
               detection, calibration, report (JSON + reliability/summary CSVs)
  lmi          fit and save the token-label association table standalone
  ece          calibration error over an external prediction export
  synth        generate a planted-shortcut corpus from a JSON recipe
  report-diff  fieldwise delta between two audit reports

Exit codes: 0 success, 1 usage error, 2 data error. A JSON file passed via
--config supplies flag defaults (underscored keys); explicit flags win. The
SHORTCUT_AUDIT_SEED environment variable is the seed fallback. Identical
inputs, flags and seed produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .calibration import bin_records, ece, write_reliability_csv
from .corpus import DataError, load_corpus
from .lmi import compute_lmi
from .model import TextClassifier, TrainConfig, load_checkpoint, save_checkpoint, train
from .report import (
    AuditConfig,
    assemble,
    audit_records,
    diff,
    import_external,
    load_report,
    save_delta,
    save_report,
    write_summary_csv,
)
from .shortcut import CueLexicon, attach_verdicts, default_cue_lexicon, load_stopwords
from .synth import generate, load_plant_spec

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants usage errors on 1.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _build_parser() -> _Parser:
    parser = _Parser(prog="shortcut-audit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with flag defaults (underscored keys)")
        return p

    p = add("train", "fit the bundled classifier on a labeled corpus")
    p.add_argument("--data", help="training corpus (JSONL or CSV)")
    p.add_argument("--out", help="checkpoint path to write")
    p.add_argument("--format", choices=["jsonl", "csv"], help="corpus format (default: by suffix)")
    p.add_argument("--preset", choices=["finetune", "from-scratch"],
                   help="base optimizer settings (default finetune)")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--grad-clip-norm", type=float)
    p.add_argument("--embedding-dim", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--seed", type=int)

    p = add("audit", "run the full shortcut/calibration audit")
    p.add_argument("--train", dest="train_path", help="training corpus for head fitting")
    p.add_argument("--test", dest="test_path", help="corpus to audit")
    p.add_argument("--model", help="classifier checkpoint")
    p.add_argument("--predictions", help="external prediction JSONL (skips --test/--model)")
    p.add_argument("--out", help="report JSON path; reliability.csv/summary.csv land beside it")
    p.add_argument("--dataset", help="dataset name for the report (default: test file stem)")
    p.add_argument("--model-name", help="model name for the report (default: checkpoint stem)")
    p.add_argument("--format", choices=["jsonl", "csv"])
    p.add_argument("--bins", type=int)
    p.add_argument("--ig-steps", type=int)
    p.add_argument("--head-fraction", type=float)
    p.add_argument("--top-k", type=int)
    p.add_argument("--match-mode", choices=["any", "all"])
    p.add_argument("--normalizer", choices=["total_tokens", "distinct_vocab"])
    p.add_argument("--output-kind", choices=["probability", "logit"])
    p.add_argument("--averaging", choices=["macro", "micro"])
    p.add_argument("--stopwords", help="override the bundled stopword list (one token per line)")
    p.add_argument("--jobs", type=int, help="attribution worker threads (default 1)")
    p.add_argument("--seed", type=int)

    p = add("lmi", "fit the token-label association table standalone")
    p.add_argument("--data", help="corpus to score")
    p.add_argument("--out", help="table JSON path")
    p.add_argument("--format", choices=["jsonl", "csv"])
    p.add_argument("--normalizer", choices=["total_tokens", "distinct_vocab"])
    p.add_argument("--head-fraction", type=float)

    p = add("ece", "calibration error over an external prediction export")
    p.add_argument("--predictions", help="prediction JSONL")
    p.add_argument("--out", help="JSON output path")
    p.add_argument("--bins", type=int)

    p = add("synth", "generate a planted-shortcut corpus")
    p.add_argument("--spec", help="JSON recipe (PlantSpec fields)")
    p.add_argument("--out", help="corpus JSONL path")
    p.add_argument("--seed", type=int, help="override the recipe's seed")

    p = add("report-diff", "fieldwise delta between two reports")
    p.add_argument("--before", help="baseline report JSON")
    p.add_argument("--after", help="comparison report JSON")
    p.add_argument("--out", help="delta JSON path")

    return parser


def _merge_options(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    provided = {k: v for k, v in vars(args).items() if k != "command"}
    merged = {}
    config_path = provided.pop("config", None)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"no such config file: {path}")
        try:
            file_values = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid config JSON: {exc.msg}") from exc
        if not isinstance(file_values, dict):
            raise DataError(f"{path}: config must be a JSON object")
        merged.update(file_values)
    merged.update(provided)
    return merged


def _require(options: dict, *keys: str) -> None:
    missing = [k for k in keys if options.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise UsageError(f"missing required flags: {flags}")


def _seed(options: dict) -> int:
    if "seed" in options:
        return int(options["seed"])
    env = os.environ.get("SHORTCUT_AUDIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SHORTCUT_AUDIT_SEED must be an integer, got {env!r}") from None
    return 0


def _cmd_train(options: dict) -> int:
    _require(options, "data", "out")
    base = (
        TrainConfig.from_scratch_preset()
        if options.get("preset") == "from-scratch"
        else TrainConfig()
    )
    overrides = {
        key: options[key]
        for key in (
            "learning_rate",
            "batch_size",
            "epochs",
            "grad_clip_norm",
            "embedding_dim",
            "hidden_dim",
        )
        if key in options
    }
    overrides["seed"] = _seed(options)
    try:
        config = dataclasses.replace(base, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corpus = load_corpus(options["data"], options.get("format"))
    result = train(corpus, config)
    out = Path(options["out"])
    save_checkpoint(result.params, out, config)
    losses_path = Path(str(out) + ".losses.json")
    losses_path.write_text(_canonical_json({"epoch_losses": result.epoch_losses}))
    print(
        f"wrote {out} ({len(corpus)} samples, {len(corpus.labels)} classes, "
        f"loss {result.epoch_losses[0]:.6f} -> {result.epoch_losses[-1]:.6f})"
    )
    return 0


def _audit_config(options: dict) -> AuditConfig:
    kwargs = {
        key: options[key]
        for key in (
            "bins",
            "ig_steps",
            "head_fraction",
            "top_k",
            "match_mode",
            "normalizer",
            "output_kind",
            "averaging",
            "stopwords",
        )
        if key in options
    }
    kwargs["seed"] = _seed(options)
    try:
        return AuditConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cues(config: AuditConfig) -> CueLexicon:
    if config.stopwords is None:
        return default_cue_lexicon()
    return CueLexicon(stopwords=load_stopwords(config.stopwords))


def _cmd_audit(options: dict) -> int:
    _require(options, "train_path", "out")
    config = _audit_config(options)
    jobs = int(options.get("jobs", 1))
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")
    train_corpus = load_corpus(options["train_path"], options.get("format"))
    table = compute_lmi(train_corpus, config.normalizer, config.head_fraction)
    cues = _cues(config)

    if options.get("predictions") is not None:
        records = import_external(options["predictions"])
        records = attach_verdicts(records, table, config.match_mode, cues)
        dataset = options.get("dataset") or Path(options["predictions"]).stem
        model_name = options.get("model_name") or "external"
    else:
        _require(options, "test_path", "model")
        classifier = TextClassifier(load_checkpoint(options["model"]))
        test_corpus = load_corpus(options["test_path"], options.get("format"))
        records = audit_records(classifier, test_corpus, table, config, cues, jobs)
        dataset = options.get("dataset") or Path(options["test_path"]).stem
        model_name = options.get("model_name") or Path(options["model"]).stem

    report = assemble(records, config, dataset, model_name)
    out = Path(options["out"])
    save_report(report, out)
    write_reliability_csv(report.bins, out.parent / "reliability.csv")
    write_summary_csv([report], out.parent / "summary.csv")
    s = report.summary
    print(
        f"wrote {out} (n={report.n}, f1={s.f1_percent:.2f}, p_sc={s.p_sc_percent:.2f}, "
        f"t_sc={s.t_sc:.2f}, ece={s.ece:.4f})"
    )
    return 0


def _cmd_lmi(options: dict) -> int:
    _require(options, "data", "out")
    corpus = load_corpus(options["data"], options.get("format"))
    try:
        table = compute_lmi(
            corpus,
            options.get("normalizer", "total_tokens"),
            float(options.get("head_fraction", 0.05)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table.save(options["out"])
    print(f"wrote {options['out']} ({len(corpus.vocab)} tokens, {len(corpus.labels)} labels)")
    return 0


def _cmd_ece(options: dict) -> int:
    _require(options, "predictions", "out")
    bins = int(options.get("bins", 10))
    if bins < 1:
        raise UsageError(f"--bins must be >= 1, got {bins}")
    records = import_external(options["predictions"])
    value = ece(records, bins)
    stats = bin_records(records, bins)
    blob = {
        "ece": value,
        "n": len(records),
        "bins": [dataclasses.asdict(b) for b in stats],
    }
    Path(options["out"]).write_text(_canonical_json(blob))
    print(f"wrote {options['out']} (n={len(records)}, ece={value:.6f})")
    return 0


def _cmd_synth(options: dict) -> int:
    _require(options, "spec", "out")
    spec = load_plant_spec(options["spec"])
    if "seed" in options or os.environ.get("SHORTCUT_AUDIT_SEED") is not None:
        spec = dataclasses.replace(spec, seed=_seed(options))
    corpus = generate(spec)
    with open(options["out"], "w") as fh:
        for sample in corpus.samples:
            fh.write(json.dumps({"id": sample.id, "label": sample.label, "text": sample.text},
                                sort_keys=True) + "\n")
    print(f"wrote {options['out']} ({len(corpus)} samples, {len(corpus.labels)} labels)")
    return 0


def _cmd_report_diff(options: dict) -> int:
    _require(options, "before", "after", "out")
    delta = diff(load_report(options["before"]), load_report(options["after"]))
    save_delta(delta, options["out"])
    print(
        f"wrote {options['out']} (d_ece={delta.ece:+.4f}, d_f1={delta.f1_percent:+.2f}, "
        f"d_p_sc={delta.p_sc_percent:+.2f})"
    )
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "audit": _cmd_audit,
    "lmi": _cmd_lmi,
    "ece": _cmd_ece,
    "synth": _cmd_synth,
    "report-diff": _cmd_report_diff,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        return _COMMANDS[args.command](_merge_options(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
