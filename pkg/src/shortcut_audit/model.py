"""Bundled differentiable text classifier with manual gradients.

Architecture: token embeddings -> mean pool -> ReLU hidden layer -> linear ->
softmax. Forward and input-gradient passes are written out by hand so the
attribution engine can query d(output)/d(embeddings) without an autodiff
dependency; the trainer is Adam with global-norm gradient clipping.

The attribution contract is three calls: ``forward``, ``grad_wrt_embeddings``
and embedding lookup. Any model satisfying it (see ``TextClassifier``) can be
audited in-process; everything else integrates by exporting predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .corpus import Corpus, DataError

__all__ = [
    "OUTPUT_KINDS",
    "EmbeddingMatrix",
    "ClassifierParams",
    "TrainConfig",
    "TrainResult",
    "forward",
    "logits",
    "grad_wrt_embeddings",
    "clip_global_norm",
    "train",
    "TextClassifier",
    "save_checkpoint",
    "load_checkpoint",
]

OUTPUT_KINDS = ("probability", "logit")

CHECKPOINT_VERSION = 1


@dataclass
class EmbeddingMatrix:
    weights: np.ndarray  # vocab_size x dim

    @property
    def vocab_size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class ClassifierParams:
    embeddings: EmbeddingMatrix
    token_ids: dict[str, int]  # token -> embedding row
    labels: tuple[str, ...]  # class index -> label
    w_hidden: np.ndarray  # dim x h
    b_hidden: np.ndarray  # h
    w_out: np.ndarray  # h x C
    b_out: np.ndarray  # C

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[1]

    @property
    def dim(self) -> int:
        return self.embeddings.dim


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    batch_size: int = 32
    epochs: int = 3
    grad_clip_norm: float = 1.0
    seed: int = 0
    embedding_dim: int = 64
    hidden_dim: int = 128

    def __post_init__(self):
        positive = {
            "learning_rate": self.learning_rate,
            "adam_epsilon": self.adam_epsilon,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "batch_size": self.batch_size,
            "grad_clip_norm": self.grad_clip_norm,
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    @classmethod
    def from_scratch_preset(cls, **overrides) -> "TrainConfig":
        """Settings sized for training the bundled classifier from scratch.

        The stock learning rate suits fine-tuning a large pretrained network;
        a randomly initialized pooled MLP needs a far larger step to move.
        """
        defaults = {"learning_rate": 1e-2}
        defaults.update(overrides)
        return cls(**defaults)


@dataclass
class TrainResult:
    params: ClassifierParams
    epoch_losses: list[float]  # mean train-set cross-entropy at init, then after each epoch


def _check_embeddings(params: ClassifierParams, token_embeddings: np.ndarray) -> np.ndarray:
    emb = np.asarray(token_embeddings, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] != params.dim:
        raise ValueError(
            f"dimension mismatch: expected (T, {params.dim}) embeddings, got {emb.shape}"
        )
    return emb


def _pool_forward(params: ClassifierParams, emb: np.ndarray):
    x = emb.mean(axis=0)
    a = x @ params.w_hidden + params.b_hidden
    r = np.maximum(a, 0.0)
    z = r @ params.w_out + params.b_out
    return x, a, r, z


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def logits(params: ClassifierParams, token_embeddings: np.ndarray) -> np.ndarray:
    emb = _check_embeddings(params, token_embeddings)
    return _pool_forward(params, emb)[3]


def forward(params: ClassifierParams, token_embeddings: np.ndarray) -> np.ndarray:
    """Class probabilities for one sample given its T x dim embedding matrix."""
    return _softmax(logits(params, token_embeddings))


def grad_wrt_embeddings(
    params: ClassifierParams,
    token_embeddings: np.ndarray,
    target_class: int,
    output_kind: str = "probability",
) -> np.ndarray:
    """Analytic gradient of one scalar output w.r.t. every embedding entry.

    ``output_kind`` selects the post-softmax probability or the pre-softmax
    logit of ``target_class``. Mean pooling makes the gradient identical
    across token positions; the T x dim result keeps the per-token shape the
    attribution path integral expects.
    """
    emb = _check_embeddings(params, token_embeddings)
    if not 0 <= target_class < params.n_classes:
        raise ValueError(f"target_class {target_class} out of range [0, {params.n_classes})")
    if output_kind not in OUTPUT_KINDS:
        raise ValueError(f"unknown output_kind {output_kind!r} (expected one of {OUTPUT_KINDS})")
    _, a, _, z = _pool_forward(params, emb)
    if output_kind == "probability":
        p = _softmax(z)
        dz = -p[target_class] * p
        dz[target_class] += p[target_class]
    else:
        dz = np.zeros(params.n_classes)
        dz[target_class] = 1.0
    dr = params.w_out @ dz
    da = dr * (a > 0)
    dx = params.w_hidden @ da
    t = emb.shape[0]
    return np.tile(dx / t, (t, 1))


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all arrays in place so the global L2 norm is <= max_norm.

    Returns the pre-clip norm; arrays are untouched when already within the
    bound.
    """
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def _init_params(corpus: Corpus, config: TrainConfig, rng: np.random.Generator) -> ClassifierParams:
    tokens = sorted(corpus.vocab)
    d, h, c = config.embedding_dim, config.hidden_dim, len(corpus.labels)
    u = lambda *shape: rng.uniform(-0.05, 0.05, size=shape)
    return ClassifierParams(
        embeddings=EmbeddingMatrix(u(len(tokens), d)),
        token_ids={tok: i for i, tok in enumerate(tokens)},
        labels=tuple(corpus.labels),
        w_hidden=u(d, h),
        b_hidden=u(h),
        w_out=u(h, c),
        b_out=u(c),
    )


def _mean_loss(params: ClassifierParams, encoded: list[tuple[np.ndarray, int]]) -> float:
    total = 0.0
    for rows, y in encoded:
        p = forward(params, params.embeddings.weights[rows])
        total += -np.log(max(p[y], 1e-12))
    return float(total / len(encoded))


def train(corpus: Corpus, config: TrainConfig) -> TrainResult:
    """Fit the classifier with Adam; deterministic for a fixed seed.

    The loss trace holds the full training-set mean cross-entropy before any
    update and again after each epoch.
    """
    if len(corpus.labels) < 2:
        raise DataError(f"single-class corpus: cannot train on label set {corpus.labels}")
    rng = np.random.default_rng(config.seed)
    params = _init_params(corpus, config, rng)
    label_index = {label: i for i, label in enumerate(params.labels)}
    encoded = [
        (np.array([params.token_ids[t] for t in s.tokens]), label_index[s.label])
        for s in corpus.samples
    ]

    grad_arrays = ("emb", "w_hidden", "b_hidden", "w_out", "b_out")
    adam_m = {k: None for k in grad_arrays}
    adam_v = {k: None for k in grad_arrays}
    step = 0
    losses = [_mean_loss(params, encoded)]

    for _ in range(config.epochs):
        order = rng.permutation(len(encoded))
        for start in range(0, len(encoded), config.batch_size):
            batch = [encoded[i] for i in order[start : start + config.batch_size]]
            grads = {
                "emb": np.zeros_like(params.embeddings.weights),
                "w_hidden": np.zeros_like(params.w_hidden),
                "b_hidden": np.zeros_like(params.b_hidden),
                "w_out": np.zeros_like(params.w_out),
                "b_out": np.zeros_like(params.b_out),
            }
            for rows, y in batch:
                emb = params.embeddings.weights[rows]
                x, a, r, z = _pool_forward(params, emb)
                p = _softmax(z)
                dz = p.copy()
                dz[y] -= 1.0
                grads["w_out"] += np.outer(r, dz)
                grads["b_out"] += dz
                da = (params.w_out @ dz) * (a > 0)
                grads["w_hidden"] += np.outer(x, da)
                grads["b_hidden"] += da
                dx = params.w_hidden @ da
                np.add.at(grads["emb"], rows, dx / len(rows))
            for g in grads.values():
                g /= len(batch)

            clip_global_norm(grads, config.grad_clip_norm)

            step += 1
            b1, b2 = config.adam_beta1, config.adam_beta2
            targets = {
                "emb": params.embeddings.weights,
                "w_hidden": params.w_hidden,
                "b_hidden": params.b_hidden,
                "w_out": params.w_out,
                "b_out": params.b_out,
            }
            for key, g in grads.items():
                if adam_m[key] is None:
                    adam_m[key] = np.zeros_like(g)
                    adam_v[key] = np.zeros_like(g)
                adam_m[key] = b1 * adam_m[key] + (1 - b1) * g
                adam_v[key] = b2 * adam_v[key] + (1 - b2) * g * g
                m_hat = adam_m[key] / (1 - b1**step)
                v_hat = adam_v[key] / (1 - b2**step)
                targets[key] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
        losses.append(_mean_loss(params, encoded))

    return TrainResult(params=params, epoch_losses=losses)


class TextClassifier:
    """Thin callable wrapper around trained parameters.

    Satisfies the attribution contract: ``forward``, ``grad_wrt_embeddings``
    and ``embed``. Tokens outside the training vocabulary embed to zero rows,
    which coincide with the all-zero attribution baseline and therefore carry
    no importance.
    """

    def __init__(self, params: ClassifierParams):
        self.params = params

    @property
    def labels(self) -> tuple[str, ...]:
        return self.params.labels

    def embed(self, tokens) -> np.ndarray:
        out = np.zeros((len(tokens), self.params.dim))
        weights = self.params.embeddings.weights
        ids = self.params.token_ids
        for j, tok in enumerate(tokens):
            row = ids.get(tok)
            if row is not None:
                out[j] = weights[row]
        return out

    def forward(self, token_embeddings: np.ndarray) -> np.ndarray:
        return forward(self.params, token_embeddings)

    def logits(self, token_embeddings: np.ndarray) -> np.ndarray:
        return logits(self.params, token_embeddings)

    def grad_wrt_embeddings(self, token_embeddings, target_class, output_kind="probability"):
        return grad_wrt_embeddings(self.params, token_embeddings, target_class, output_kind)

    def scalar_output(self, token_embeddings, target_class, output_kind="probability"):
        if output_kind == "probability":
            return float(self.forward(token_embeddings)[target_class])
        return float(self.logits(token_embeddings)[target_class])

    def predict_tokens(self, tokens) -> tuple[np.ndarray, int]:
        probs = self.forward(self.embed(tokens))
        return probs, int(np.argmax(probs))


def save_checkpoint(
    params: ClassifierParams, path: str | Path, train_config: TrainConfig | None = None
) -> None:
    """Write a JSON checkpoint; float values round-trip bit-exactly."""
    blob = {
        "format_version": CHECKPOINT_VERSION,
        "embedding_dim": params.dim,
        "hidden_dim": params.w_hidden.shape[1],
        "n_classes": params.n_classes,
        "labels": list(params.labels),
        "token_ids": params.token_ids,
        "weights": {
            "embeddings": params.embeddings.weights.tolist(),
            "w_hidden": params.w_hidden.tolist(),
            "b_hidden": params.b_hidden.tolist(),
            "w_out": params.w_out.tolist(),
            "b_out": params.b_out.tolist(),
        },
        "train_config": asdict(train_config) if train_config is not None else None,
    }
    Path(path).write_text(json.dumps(blob, sort_keys=True) + "\n")


def load_checkpoint(path: str | Path) -> ClassifierParams:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such checkpoint: {path}")
    try:
        blob = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid checkpoint JSON: {exc.msg}") from exc
    version = blob.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version!r}")
    w = blob["weights"]
    return ClassifierParams(
        embeddings=EmbeddingMatrix(np.array(w["embeddings"], dtype=np.float64)),
        token_ids={tok: int(i) for tok, i in blob["token_ids"].items()},
        labels=tuple(blob["labels"]),
        w_hidden=np.array(w["w_hidden"], dtype=np.float64),
        b_hidden=np.array(w["b_hidden"], dtype=np.float64),
        w_out=np.array(w["w_out"], dtype=np.float64),
        b_out=np.array(w["b_out"], dtype=np.float64),
    )
