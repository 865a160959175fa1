"""One-hot prefix encoding and the deterministic label vocabulary.

The vocabulary fixes an integer index for every activity label, lexicographic
with the completion label END forced to the last slot; the whole pipeline
(predictors, beam tie-breaking, serialized models) leans on that ordering
being reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .eventlog import END, EventLog


@dataclass(frozen=True)
class Vocabulary:
    labels: tuple  # all activity labels, lexicographic, END last

    def __post_init__(self):
        if self.labels.count(END) != 1 or self.labels[-1] != END:
            raise ValueError("vocabulary must contain END exactly once, in last position")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("vocabulary labels must be unique")

    def __len__(self):
        return len(self.labels)

    @property
    def index(self) -> dict:
        # tiny and immutable; rebuilt on demand to keep the dataclass frozen
        return {lab: i for i, lab in enumerate(self.labels)}

    def index_of(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise ValueError(f"label {label!r} is not in the vocabulary") from None

    def encode_labels(self, labels) -> tuple:
        """Map a label sequence to its index tuple (beam tie-break key)."""
        idx = self.index
        try:
            return tuple(idx[lab] for lab in labels)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not in the vocabulary") from None

    def to_json(self) -> str:
        return json.dumps(list(self.labels))

    @staticmethod
    def from_json(text: str) -> "Vocabulary":
        return Vocabulary(labels=tuple(json.loads(text)))


def build_vocabulary(log: EventLog) -> Vocabulary:
    """Sorted alphabet of the log plus the END label in last position."""
    if not log.alphabet:
        raise ValueError("cannot build a vocabulary from an empty alphabet")
    return Vocabulary(labels=tuple(sorted(log.alphabet)) + (END,))


def one_hot(label: str, vocab: Vocabulary) -> np.ndarray:
    vec = np.zeros(len(vocab), dtype=np.float64)
    vec[vocab.index_of(label)] = 1.0
    return vec


@dataclass(frozen=True)
class EncodedPrefix:
    matrix: np.ndarray  # (l_max - 1, |vocab|), rows beyond true_length all zero
    true_length: int


def encode_prefix(prefix, vocab: Vocabulary, l_max: int) -> EncodedPrefix:
    """Stack one-hot rows for the prefix, zero-padded up to l_max - 1 rows."""
    if len(prefix) > l_max - 1:
        raise ValueError(f"prefix of length {len(prefix)} exceeds l_max - 1 = {l_max - 1}")
    matrix = np.zeros((l_max - 1, len(vocab)), dtype=np.float64)
    for i, label in enumerate(prefix):
        matrix[i, vocab.index_of(label)] = 1.0
    return EncodedPrefix(matrix=matrix, true_length=len(prefix))


def decode_prefix(encoded: EncodedPrefix, vocab: Vocabulary):
    """Inverse of encode_prefix (padding rows are all-zero, real rows one-hot)."""
    out = []
    for row in encoded.matrix:
        if not row.any():
            break
        out.append(vocab.labels[int(np.argmax(row))])
    return tuple(out)
