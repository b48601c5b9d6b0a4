"""Shared fixtures: a planted-shortcut corpus with a trained classifier.

Everything is seeded and session-scoped; the end-to-end pipeline runs once
and the audit tests share its artifacts.
"""

from pathlib import Path

import pytest

from shortcut_audit import (
    AuditConfig,
    TextClassifier,
    TrainConfig,
    assemble,
    audit_records,
    compute_lmi,
    generate,
    load_plant_spec,
    split,
    train,
)

FIXTURES = Path(__file__).parent / "fixtures"


def build_pipeline(spec_path):
    """Generate, split, fit heads, train, audit; returns every artifact."""
    spec = load_plant_spec(spec_path)
    corpus = generate(spec)
    train_corpus, test_corpus = split(corpus, (0.8, 0.2), seed=spec.seed + 1)
    table = compute_lmi(train_corpus)
    result = train(train_corpus, TrainConfig.from_scratch_preset(seed=spec.seed + 2))
    classifier = TextClassifier(result.params)
    config = AuditConfig(seed=spec.seed)
    records = audit_records(classifier, test_corpus, table, config)
    report = assemble(records, config, dataset="planted", model="reference")
    return {
        "spec": spec,
        "corpus": corpus,
        "train_corpus": train_corpus,
        "test_corpus": test_corpus,
        "table": table,
        "train_result": result,
        "classifier": classifier,
        "config": config,
        "records": records,
        "report": report,
    }


@pytest.fixture(scope="session")
def planted():
    return build_pipeline(FIXTURES / "plant_spec.json")


@pytest.fixture(scope="session")
def planted_punct():
    return build_pipeline(FIXTURES / "plant_spec_punct.json")
