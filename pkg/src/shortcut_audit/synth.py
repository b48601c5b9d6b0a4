"""Synthetic data with known ground truth.

Two generators: labeled corpora where one token is planted into one label's
samples at a controlled co-occurrence rate (the only systematic cue, so
detector recall is interpretable), and prediction streams whose confidence
and accuracy follow caller-chosen laws (the oracle for calibration
statistics).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import PredictionRecord, make_record
from .corpus import Corpus, DataError, Sample, tokenize

__all__ = ["PlantSpec", "load_plant_spec", "generate", "synth_predictions"]


@dataclass(frozen=True)
class PlantSpec:
    """Recipe for a planted-shortcut corpus.

    The planted token replaces one background token in a fraction
    ``co_occurrence_rate`` of the target label's samples and ``leak_rate``
    of every other label's. Background tokens are drawn uniformly and
    label-independently, without replacement within a sample.
    """

    token: str
    label: str
    labels: tuple[str, ...]
    co_occurrence_rate: float
    leak_rate: float = 0.0
    background_vocab_size: int = 200
    sample_length: tuple[int, int] = (8, 16)
    n_samples: int = 1000  # per label
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "sample_length", tuple(self.sample_length))
        if len(self.labels) < 2:
            raise ValueError(f"need >= 2 labels, got {self.labels}")
        if self.label not in self.labels:
            raise ValueError(f"target label {self.label!r} not in {self.labels}")
        if not 0.0 < self.co_occurrence_rate <= 1.0:
            raise ValueError(f"co_occurrence_rate must be in (0, 1], got {self.co_occurrence_rate}")
        if not 0.0 <= self.leak_rate < 1.0:
            raise ValueError(f"leak_rate must be in [0, 1), got {self.leak_rate}")
        lo, hi = self.sample_length
        if not 1 <= lo <= hi:
            raise ValueError(f"bad sample_length range {self.sample_length}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.background_vocab_size < hi:
            raise ValueError(
                f"background vocab ({self.background_vocab_size} tokens) smaller than "
                f"max sample length {hi}: cannot sample without replacement"
            )
        if tokenize(self.token) != [self.token]:
            raise ValueError(f"planted token {self.token!r} does not survive tokenization")
        if self.token in set(_background_vocab(self.background_vocab_size)):
            raise ValueError(f"planted token {self.token!r} collides with the background vocabulary")


def _background_vocab(size: int) -> list[str]:
    width = len(str(size - 1))
    return [f"w{i:0{width}d}" for i in range(size)]


def load_plant_spec(path: str | Path) -> PlantSpec:
    """PlantSpec from a JSON file whose keys mirror the field names."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such spec file: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise DataError(f"{path}: spec must be a JSON object")
    try:
        return PlantSpec(**raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid spec: {exc}") from exc


def generate(spec: PlantSpec) -> Corpus:
    """Deterministic corpus under spec.seed; samples grouped by label."""
    rng = np.random.default_rng(spec.seed)
    vocab = np.array(_background_vocab(spec.background_vocab_size))
    lo, hi = spec.sample_length
    samples = []
    for label in spec.labels:
        rate = spec.co_occurrence_rate if label == spec.label else spec.leak_rate
        for i in range(spec.n_samples):
            length = int(rng.integers(lo, hi + 1))
            tokens = list(rng.choice(vocab, size=length, replace=False))
            if rng.random() < rate:
                tokens[int(rng.integers(0, length))] = spec.token
            samples.append(
                Sample(
                    id=f"{label}-{i:05d}",
                    text=" ".join(tokens),
                    tokens=tuple(tokens),
                    label=label,
                )
            )
    return Corpus(samples)


def synth_predictions(n: int, confidence_law, accuracy_law, seed: int) -> list[PredictionRecord]:
    """Prediction stream with confidence and accuracy under caller control.

    ``confidence_law`` maps an array of uniform(0,1) draws to confidences in
    (0, 1]; ``accuracy_law`` maps those confidences to per-record
    probabilities of being correct. Correctness is then a Bernoulli draw.
    The probability vectors are built so the stated confidence is exactly
    the max class probability; confidences below 0.5 get 1/ceil(1/c)-style
    multi-class vectors, so very small confidences make very wide vectors.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    conf = np.asarray(confidence_law(rng.random(n)), dtype=np.float64)
    if conf.shape != (n,):
        raise ValueError(f"confidence_law must return shape ({n},), got {conf.shape}")
    if not np.all((conf > 0.0) & (conf <= 1.0)):
        raise ValueError("confidence_law must map into (0, 1]")
    acc = np.asarray(accuracy_law(conf), dtype=np.float64)
    if acc.shape != (n,):
        raise ValueError(f"accuracy_law must return shape ({n},), got {acc.shape}")
    if not np.all((acc >= 0.0) & (acc <= 1.0)):
        raise ValueError("accuracy_law must map into [0, 1]")
    correct = rng.random(n) < acc

    records = []
    for i in range(n):
        c = float(conf[i])
        if c >= 0.5:
            probs = (c, 1.0 - c)
        else:
            n_classes = math.ceil(1.0 / c)
            spread = (1.0 - c) / (n_classes - 1)
            while spread > c:  # float rounding can overshoot the max by one ulp
                n_classes += 1
                spread = (1.0 - c) / (n_classes - 1)
            probs = (c,) + (spread,) * (n_classes - 1)
        true_label = "c0" if correct[i] else "c1"
        records.append(make_record(f"p{i:06d}", true_label, "c0", probs))
    return records
