"""Benchmark the jit-compiled kernels against the pure-python fallback.

Run ``python3 benchmarks/bench_kernels.py``: it times the hot paths under
the active backend, then re-executes itself with SUFFIXBEAM_DISABLE_NUMBA=1
and prints both columns side by side. Timings include no jit warm-up: each
kernel gets one untimed call first.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

from suffixbeam import _kernels
from suffixbeam.beam import BeamConfig, modulated_beam
from suffixbeam.encoding import build_vocabulary
from suffixbeam.eventlog import build_prefix_log, prefix, variant_of
from suffixbeam.metrics import dl_distance
from suffixbeam.petri import token_replay
from suffixbeam.predictor import train_ngram
from suffixbeam.synthgen import SynthConfig, generate

REPLAY_ROUNDS = 200
DL_PAIRS = 2000
BEAM_CASES = 120


def bench() -> dict:
    res = generate(SynthConfig())
    net = res.net
    variants = [variant_of(t) for t in res.train_log.traces]

    # warm-up (jit compilation happens here, not inside the timers)
    token_replay(net, variants[0])
    dl_distance(("A", "B"), ("B", "A"))

    t0 = time.perf_counter()
    for _ in range(REPLAY_ROUNDS):
        for v in variants[:50]:
            token_replay(net, v)
            token_replay(net, v, partial=True)
    replay_s = time.perf_counter() - t0

    rng = np.random.default_rng(1)
    pairs = [
        (
            tuple(str(x) for x in rng.integers(0, 6, size=12)),
            tuple(str(x) for x in rng.integers(0, 6, size=12)),
        )
        for _ in range(DL_PAIRS)
    ]
    t0 = time.perf_counter()
    for a, b in pairs:
        dl_distance(a, b)
    dl_s = time.perf_counter() - t0

    vocab = build_vocabulary(res.train_log)
    model = train_ngram(build_prefix_log(res.train_log), vocab)
    cfg = BeamConfig(b_size=3, max_iter=6, w=0.85, partial_mode="strict")
    cases = [prefix(variant_of(t), 3) for t in res.test_log.traces[:BEAM_CASES]]
    t0 = time.perf_counter()
    for pref in cases:
        modulated_beam(pref, net, model, cfg)
    beam_s = time.perf_counter() - t0

    return {
        "backend": "numba" if _kernels.USING_NUMBA else "numpy",
        f"replay x{REPLAY_ROUNDS * 50}": replay_s,
        f"osa_distance x{DL_PAIRS}": dl_s,
        f"modulated_beam x{BEAM_CASES}": beam_s,
    }


def main() -> None:
    mine = bench()
    if os.environ.get("SUFFIXBEAM_BENCH_CHILD"):
        json.dump(mine, sys.stdout)
        return
    env = dict(os.environ, SUFFIXBEAM_BENCH_CHILD="1")
    env["SUFFIXBEAM_DISABLE_NUMBA"] = "1" if _kernels.USING_NUMBA else ""
    other = json.loads(
        subprocess.run(
            [sys.executable, os.path.abspath(__file__)],
            capture_output=True,
            text=True,
            check=True,
            env=env,
        ).stdout
    )
    col_a, col_b = mine["backend"], other["backend"]
    print(f"{'kernel':<28} {col_a:>10} {col_b:>10} {'speedup':>9}")
    for key in mine:
        if key == "backend":
            continue
        a, b = mine[key], other[key]
        numba_s, numpy_s = (a, b) if col_a == "numba" else (b, a)
        print(f"{key:<28} {a:>9.3f}s {b:>9.3f}s {numpy_s / numba_s:>8.1f}x")


if __name__ == "__main__":
    main()
