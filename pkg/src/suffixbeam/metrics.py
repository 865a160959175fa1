"""Suffix similarity (Damerau-Levenshtein, OSA variant) and report math.

Similarity between a predicted and a true suffix is

    1 - distance(a, b) / max(|a|, |b|)

with two empty suffixes counting as a perfect 1. Per-prefix-length means are
combined into a micro average weighted by test-set size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .eventlog import END


def dl_distance(a, b) -> int:
    """Optimal-string-alignment edit distance between two label sequences.

    Counts insertions, deletions, substitutions, and transpositions of
    adjacent labels (each substring edited at most once).
    """
    if not a and not b:
        return 0
    codes = {}
    for lab in a:
        codes.setdefault(lab, len(codes))
    for lab in b:
        codes.setdefault(lab, len(codes))
    arr_a = np.array([codes[lab] for lab in a], dtype=np.int32)
    arr_b = np.array([codes[lab] for lab in b], dtype=np.int32)
    return int(_kernels.osa_distance(arr_a, arr_b))


def dl_similarity(a, b) -> float:
    """Normalized similarity in [0, 1]; both-empty -> 1.0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - dl_distance(a, b) / longest


def micro_average(groups) -> float:
    """Weighted mean of (mean, weight) pairs, weights > 0."""
    groups = list(groups)
    if not groups:
        raise ValueError("micro average of no groups")
    total_w = 0.0
    acc = 0.0
    for mean, weight in groups:
        if weight <= 0:
            raise ValueError("micro average weights must be positive")
        acc += mean * weight
        total_w += weight
    return acc / total_w


@dataclass(frozen=True)
class MetricsReport:
    per_prefix_length: dict  # k -> (mean similarity, test set size)
    micro: float


def _strip_end(seq):
    return tuple(lab for lab in seq if lab != END)


def evaluate(predicted: dict, ground_truth: dict, k_by_case: dict) -> MetricsReport:
    """Per-prefix-length mean similarities plus their micro average.

    All three dicts are keyed by case id; END labels are stripped from both
    sides before comparison.
    """
    if set(predicted) != set(ground_truth):
        missing = set(predicted) ^ set(ground_truth)
        raise ValueError(f"predicted/ground-truth case sets differ, e.g. {sorted(missing)[:3]}")
    sims_by_k = {}
    for case, pred in predicted.items():
        k = k_by_case[case]
        sim = dl_similarity(_strip_end(pred), _strip_end(ground_truth[case]))
        sims_by_k.setdefault(k, []).append(sim)
    per_k = {k: (float(np.mean(sims)), len(sims)) for k, sims in sorted(sims_by_k.items())}
    micro = micro_average(per_k.values())
    return MetricsReport(per_prefix_length=per_k, micro=micro)
