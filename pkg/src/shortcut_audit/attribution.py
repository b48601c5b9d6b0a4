"""Integrated-gradients attribution over the classifier contract.

The attribution of one prediction is a right-endpoint Riemann sum of the
straight-line path integral from a baseline embedding matrix (all zeros by
default) to the sample's embedding matrix:

    attr = (input - baseline) * (1/m) * sum_{k=1..m} grad F(baseline + (k/m) (input - baseline))

Per-token importance is the L2 norm of the token's attribution row, and the
top-k tokens by importance feed the shortcut detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AttributionResult",
    "integrated_gradients",
    "token_importance",
    "top_k_tokens",
    "attribute_sample",
]


@dataclass
class AttributionResult:
    sample_id: str
    predicted_class: int
    steps_m: int
    per_token_attribution: np.ndarray  # T x dim
    token_importance: np.ndarray  # T, non-negative
    top_tokens: tuple[tuple[str, float], ...]  # (token, importance), length min(k, T)


def integrated_gradients(
    model,
    token_embeddings: np.ndarray,
    target_class: int,
    steps_m: int = 50,
    output_kind: str = "probability",
    baseline: np.ndarray | None = None,
) -> np.ndarray:
    """T x dim attribution matrix for one sample.

    ``model`` needs only ``grad_wrt_embeddings(embeddings, target_class,
    output_kind)``. A ``baseline`` of None means all-zero embeddings; an
    explicit baseline must match the input shape. Exact for linear models at
    any ``steps_m``; the completeness gap shrinks as ``steps_m`` grows
    otherwise.
    """
    if steps_m < 1:
        raise ValueError(f"steps_m must be >= 1, got {steps_m}")
    emb = np.asarray(token_embeddings, dtype=np.float64)
    if baseline is None:
        base = np.zeros_like(emb)
    else:
        base = np.asarray(baseline, dtype=np.float64)
        if base.shape != emb.shape:
            raise ValueError(f"baseline shape {base.shape} != input shape {emb.shape}")
    diff = emb - base
    total = np.zeros_like(emb)
    for k in range(1, steps_m + 1):
        grad = model.grad_wrt_embeddings(base + (k / steps_m) * diff, target_class, output_kind)
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"non-finite model gradient at path step {k}/{steps_m}")
        total += grad
    return diff * (total / steps_m)


def token_importance(attribution: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean norm: one non-negative importance per token."""
    return np.linalg.norm(np.asarray(attribution, dtype=np.float64), axis=1)


def top_k_tokens(tokens, importance: np.ndarray, k: int = 3) -> tuple[tuple[str, float], ...]:
    """The k highest-importance (token, importance) pairs.

    Duplicate token strings stay as distinct positions; ties keep the earlier
    sentence position first (stable sort). Accepts a Sample or any token
    sequence.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    toks = tuple(getattr(tokens, "tokens", tokens))
    imp = np.asarray(importance, dtype=np.float64)
    if len(toks) != imp.shape[0]:
        raise ValueError(f"{len(toks)} tokens but {imp.shape[0]} importances")
    order = np.argsort(-imp, kind="stable")[:k]
    return tuple((toks[j], float(imp[j])) for j in order)


def attribute_sample(
    model,
    sample,
    top_k: int = 3,
    steps_m: int = 50,
    output_kind: str = "probability",
) -> tuple[AttributionResult, np.ndarray]:
    """Full attribution for one sample against its predicted class.

    Returns the result plus the predicted probability vector so callers do
    not pay a second forward pass. Pure given (model, sample); safe to fan
    out across worker threads.
    """
    probs, predicted = model.predict_tokens(sample.tokens)
    emb = model.embed(sample.tokens)
    attr = integrated_gradients(model, emb, predicted, steps_m, output_kind)
    imp = token_importance(attr)
    result = AttributionResult(
        sample_id=sample.id,
        predicted_class=predicted,
        steps_m=steps_m,
        per_token_attribution=attr,
        token_importance=imp,
        top_tokens=top_k_tokens(sample.tokens, imp, top_k),
    )
    return result, probs
