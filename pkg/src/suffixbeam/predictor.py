"""Next-activity predictors: the contract plus a smoothed n-gram reference.

A predictor is anything with ``vocab`` and ``predict_proba(prefix) ->
np.ndarray`` (one probability per vocabulary index, summing to 1). The beam
search only ever consumes that vector, so the n-gram here, the attention
net, or an external scorer are interchangeable.

The n-gram keys its counts by the last ``order`` labels of the prefix
(fewer when the prefix is shorter) and applies Laplace smoothing:

    P(a | ctx) = (count(ctx, a) + alpha) / (total(ctx) + alpha * |V|)

An unseen context therefore yields the uniform distribution, and with
alpha > 0 no probability is ever exactly 0 or 1 — the beam's log-domain
scores stay finite and strictly decrease along a path, which the
equivalence tests rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .encoding import Vocabulary
from .eventlog import PrefixLog


@dataclass(frozen=True)
class NGramModel:
    vocab: Vocabulary
    order: int
    alpha: float
    counts: dict  # context tuple (label indices) -> np.int64 array over vocab

    def context_of(self, prefix) -> tuple:
        ids = self.vocab.encode_labels(prefix)
        return ids[-self.order:] if self.order < len(ids) else ids

    def predict_proba(self, prefix) -> np.ndarray:
        if not prefix:
            raise ValueError("prediction needs a non-empty prefix")
        ctx = self.context_of(prefix)
        n = len(self.vocab)
        row = self.counts.get(ctx)
        if row is None:
            row = np.zeros(n, dtype=np.int64)
        denom = row.sum() + self.alpha * n
        if denom == 0:  # alpha = 0 and unseen context
            return np.full(n, 1.0 / n)
        return (row + self.alpha) / denom

    def save(self, path) -> None:
        payload = {
            "kind": "ngram",
            "order": self.order,
            "alpha": self.alpha,
            "vocab": list(self.vocab.labels),
            "counts": [[list(ctx), row.tolist()] for ctx, row in sorted(self.counts.items())],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @staticmethod
    def load(path) -> "NGramModel":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("kind") != "ngram":
            raise ValueError(f"{path} is not an n-gram model file")
        vocab = Vocabulary(labels=tuple(payload["vocab"]))
        counts = {
            tuple(ctx): np.array(row, dtype=np.int64) for ctx, row in payload["counts"]
        }
        return NGramModel(
            vocab=vocab, order=int(payload["order"]), alpha=float(payload["alpha"]), counts=counts
        )


def train_ngram(prefix_log: PrefixLog, vocab: Vocabulary, order: int = 3, alpha: float = 0.01) -> NGramModel:
    """Count (last <= order labels -> next label) over the prefix log."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if not prefix_log.entries:
        raise ValueError("empty prefix log")
    n = len(vocab)
    counts = {}
    for prefix, nxt in prefix_log.entries:
        ids = vocab.encode_labels(prefix)
        ctx = ids[-order:] if order < len(ids) else ids
        row = counts.get(ctx)
        if row is None:
            row = np.zeros(n, dtype=np.int64)
            counts[ctx] = row
        row[vocab.index_of(nxt)] += 1
    return NGramModel(vocab=vocab, order=order, alpha=alpha, counts=counts)


def predict(model, prefix) -> np.ndarray:
    """Probability vector over the model's vocabulary for the next label."""
    return model.predict_proba(prefix)


def next_activity(model, prefix) -> str:
    """Argmax label; ties resolve to the lowest vocabulary index."""
    probs = model.predict_proba(prefix)
    return model.vocab.labels[int(np.argmax(probs))]
