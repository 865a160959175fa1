"""Hot numeric kernels: token-replay stepping and edit-distance DP.

Everything here operates on plain int32 arrays so the functions can be
compiled with numba when it is available. Set SUFFIXBEAM_DISABLE_NUMBA=1 to
run the identical code as pure Python/numpy (useful for debugging and for
benchmarking the speedup; see benchmarks/bench_kernels.py).

Replay conventions baked into these kernels (the rest of the package and
the test oracles mirror them):

* firing consumes the full input arc weight even when tokens are missing;
  the shortfall is counted as "missing" and the marking is floored at zero;
* silent transitions fire only when actually enabled — they are used to
  enable a target transition (or to cover the final marking) via a
  breadth-first search over silent firings, children generated in
  transition-id order, bounded depth, first hit wins;
* every firing, silent or not, adds its arc weights to the produced and
  consumed counters.
"""

from __future__ import annotations

import os

import numpy as np

SILENT_BFS_DEPTH = 10
_BFS_NODE_CAP = 4096

_env = os.environ.get("SUFFIXBEAM_DISABLE_NUMBA", "")
_want_numba = _env in ("", "0", "false", "False")

try:
    if not _want_numba:
        raise ImportError("numba disabled via SUFFIXBEAM_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA


def _maybe_jit(func):
    if USING_NUMBA:
        return njit(cache=True)(func)
    return func


@_maybe_jit
def covered(marking, req):
    """True when the marking has at least req tokens in every place."""
    for i in range(req.shape[0]):
        if marking[i] < req[i]:
            return False
    return True


@_maybe_jit
def missing_tokens(marking, req):
    total = 0
    for i in range(req.shape[0]):
        gap = req[i] - marking[i]
        if gap > 0:
            total += gap
    return total


@_maybe_jit
def fire_forced(marking, in_row, out_row):
    """Fire a transition, inserting missing input tokens as needed.

    Mutates the marking. Returns (missing, consumed, produced) token counts
    for this single firing.
    """
    miss = 0
    cons = 0
    prod = 0
    for i in range(marking.shape[0]):
        take = in_row[i]
        if take > 0:
            cons += take
            short = take - marking[i]
            if short > 0:
                miss += short
                marking[i] = 0
            else:
                marking[i] -= take
    for i in range(marking.shape[0]):
        add = out_row[i]
        if add > 0:
            marking[i] += add
            prod += add
    return miss, cons, prod


@_maybe_jit
def silent_path_to(marking, req, in_w, out_w, silent_ids, max_depth, node_cap):
    """Shortest sequence of enabled silent firings after which req is covered.

    BFS over reachable markings; children are generated in silent-id order,
    so the first goal hit is the shortest, earliest sequence. Returns
    (found, path, path_length); the input marking is not modified.
    """
    n_places = marking.shape[0]
    empty = np.empty(0, dtype=np.int32)
    if covered(marking, req):
        return True, empty, 0
    n_silent = silent_ids.shape[0]
    if n_silent == 0:
        return False, empty, 0
    store = np.zeros((node_cap, n_places), dtype=np.int32)
    parent = np.full(node_cap, -1, dtype=np.int32)
    via = np.full(node_cap, -1, dtype=np.int32)
    depth = np.zeros(node_cap, dtype=np.int32)
    for i in range(n_places):
        store[0, i] = marking[i]
    count = 1
    head = 0
    while head < count:
        if depth[head] >= max_depth:
            head += 1
            continue
        for j in range(n_silent):
            t = silent_ids[j]
            enabled = True
            for i in range(n_places):
                if store[head, i] < in_w[t, i]:
                    enabled = False
                    break
            if not enabled:
                continue
            if count >= node_cap:
                return False, empty, 0  # search space truncated; give up
            for i in range(n_places):
                store[count, i] = store[head, i] - in_w[t, i] + out_w[t, i]
            seen = False
            for q in range(count):
                same = True
                for i in range(n_places):
                    if store[q, i] != store[count, i]:
                        same = False
                        break
                if same:
                    seen = True
                    break
            if seen:
                continue
            parent[count] = head
            via[count] = t
            depth[count] = depth[head] + 1
            if covered(store[count], req):
                plen = depth[count]
                path = np.empty(plen, dtype=np.int32)
                idx = count
                pos = plen - 1
                while idx > 0:
                    path[pos] = via[idx]
                    idx = parent[idx]
                    pos -= 1
                return True, path, plen
            count += 1
        head += 1
    return False, empty, 0


@_maybe_jit
def replay_one_label(marking, tids, in_w, out_w, silent_ids, max_depth, node_cap):
    """Replay one visible label: pick a transition, enable it, fire it.

    Among the candidate transitions (all sharing the label, ids ascending)
    the one needing the fewest missing tokens wins — a transition that a
    silent sequence can fully enable counts as zero missing; ties go to the
    lowest transition id. Mutates the marking; returns the (missing,
    consumed, produced) deltas including any silent firings.
    """
    best_tid = -1
    best_miss = np.int64(1) << 40
    best_path = np.empty(0, dtype=np.int32)
    best_plen = 0
    for j in range(tids.shape[0]):
        t = tids[j]
        direct = missing_tokens(marking, in_w[t])
        if direct == 0:
            best_tid = t
            best_miss = 0
            best_path = np.empty(0, dtype=np.int32)
            best_plen = 0
            break
        found, path, plen = silent_path_to(
            marking, in_w[t], in_w, out_w, silent_ids, max_depth, node_cap
        )
        if found:
            best_tid = t
            best_miss = 0
            best_path = path
            best_plen = plen
            break
        if direct < best_miss:
            best_tid = t
            best_miss = direct
            best_path = np.empty(0, dtype=np.int32)
            best_plen = 0
    m_add = 0
    c_add = 0
    p_add = 0
    for s in range(best_plen):
        miss, cons, prod = fire_forced(marking, in_w[best_path[s]], out_w[best_path[s]])
        m_add += miss  # always 0: silents on the path are enabled by construction
        c_add += cons
        p_add += prod
    miss, cons, prod = fire_forced(marking, in_w[best_tid], out_w[best_tid])
    return m_add + miss, c_add + cons, p_add + prod


@_maybe_jit
def finish_complete(marking, final, in_w, out_w, silent_ids, max_depth, node_cap):
    """Consume the final marking, trying silent moves to cover it first.

    Mutates the marking. Returns (missing, consumed, produced, remaining,
    reached): counter deltas for the finishing moves, the count of tokens
    left anywhere after the final consumption, and whether the final
    marking was met exactly.
    """
    c_add = 0
    p_add = 0
    found, path, plen = silent_path_to(
        marking, final, in_w, out_w, silent_ids, max_depth, node_cap
    )
    if found:
        for s in range(plen):
            _, cons, prod = fire_forced(marking, in_w[path[s]], out_w[path[s]])
            c_add += cons
            p_add += prod
    miss = 0
    for i in range(marking.shape[0]):
        need = final[i]
        if need > 0:
            c_add += need
            short = need - marking[i]
            if short > 0:
                miss += short
                marking[i] = 0
            else:
                marking[i] -= need
    remaining = 0
    for i in range(marking.shape[0]):
        remaining += marking[i]
    reached = miss == 0 and remaining == 0
    return miss, c_add, p_add, remaining, reached


@_maybe_jit
def residual_over_final(marking, final):
    """Tokens in the marking not explainable as (part of) the final marking."""
    total = 0
    for i in range(marking.shape[0]):
        extra = marking[i] - final[i]
        if extra > 0:
            total += extra
    return total


@_maybe_jit
def osa_distance(a, b):
    """Optimal-string-alignment Damerau-Levenshtein distance on code arrays.

    Insertions, deletions, substitutions, and adjacent transpositions; no
    substring is edited twice (the standard OSA restriction).
    """
    la = a.shape[0]
    lb = b.shape[0]
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2 = np.zeros(lb + 1, dtype=np.int32)
    prev = np.empty(lb + 1, dtype=np.int32)
    cur = np.empty(lb + 1, dtype=np.int32)
    for j in range(lb + 1):
        prev[j] = j
    for i in range(1, la + 1):
        cur[0] = i
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d = prev[j] + 1
            if cur[j - 1] + 1 < d:
                d = cur[j - 1] + 1
            if prev[j - 1] + cost < d:
                d = prev[j - 1] + cost
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                if prev2[j - 2] + 1 < d:
                    d = prev2[j - 2] + 1
            cur[j] = d
        tmp = prev2
        prev2 = prev
        prev = cur
        cur = tmp
    return int(prev[lb])
