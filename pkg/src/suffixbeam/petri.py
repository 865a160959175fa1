"""Petri nets: PNML round-trip, firing semantics, and token-based replay.

The background-knowledge model is an ordinary place/transition net. Replay
walks a variant through the net counting produced / consumed / missing /
remaining tokens; the fitness over those counters,

    f = 1/2 (1 - m/c) + 1/2 (1 - r/p),

is the compliance signal that modulates the beam search. Incomplete traces
can be scored two ways (the partial_mode of :func:`compliance`):

* ``lenient`` — remaining tokens are ignored entirely (r := 0): only missing
  tokens hurt. This is what :func:`token_replay` with partial=True reports.
* ``strict`` — tokens that cannot be explained as part of the final marking
  count as remaining, so a candidate that wanders away from the final
  marking pays for its in-flight tokens. The beam search defaults to this
  mode: under the lenient rule every prefix of a fitting trace scores 1 and
  the modulation weight can never vote *against* continuing.
"""

from __future__ import annotations

import io
import logging
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .eventlog import END

logger = logging.getLogger(__name__)

SILENT_BFS_DEPTH = _kernels.SILENT_BFS_DEPTH
_NODE_CAP = 4096


@dataclass(frozen=True)
class Transition:
    tid: str
    label: str | None  # None means silent (tau)


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1


@dataclass
class PetriNet:
    """Immutable after construction; replay state lives outside the net."""

    name: str
    places: tuple
    transitions: tuple  # of Transition
    arcs: tuple  # of Arc
    initial_marking: dict
    final_marking: dict
    _compiled: "CompiledNet" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        place_set = set(self.places)
        tid_set = {t.tid for t in self.transitions}
        if len(place_set) != len(self.places):
            raise ValueError("duplicate place ids")
        if len(tid_set) != len(self.transitions):
            raise ValueError("duplicate transition ids")
        if not self.transitions:
            raise ValueError("net has no transitions")
        for arc in self.arcs:
            src_p, tgt_p = arc.source in place_set, arc.target in place_set
            src_t, tgt_t = arc.source in tid_set, arc.target in tid_set
            if not ((src_p and tgt_t) or (src_t and tgt_p)):
                raise ValueError(
                    f"arc {arc.source!r} -> {arc.target!r} must connect a place and a transition"
                )
            if arc.weight < 1:
                raise ValueError("arc weights must be positive")
        for marking, which in ((self.initial_marking, "initial"), (self.final_marking, "final")):
            for pid in marking:
                if pid not in place_set:
                    raise ValueError(f"{which} marking references unknown place {pid!r}")

    @property
    def compiled(self) -> "CompiledNet":
        if self._compiled is None:
            self._compiled = CompiledNet.build(self)
        return self._compiled


class CompiledNet:
    """Array form of a net for the replay kernels."""

    def __init__(self, net, place_index, in_w, out_w, silent_ids, label_tids, initial, final):
        self.net = net
        self.place_index = place_index
        self.in_w = in_w
        self.out_w = out_w
        self.silent_ids = silent_ids
        self.label_tids = label_tids  # label -> ascending int32 array of transition rows
        self.initial = initial
        self.final = final

    @staticmethod
    def build(net: PetriNet) -> "CompiledNet":
        place_index = {pid: i for i, pid in enumerate(net.places)}
        tid_index = {t.tid: i for i, t in enumerate(net.transitions)}
        n_p, n_t = len(net.places), len(net.transitions)
        in_w = np.zeros((n_t, n_p), dtype=np.int32)
        out_w = np.zeros((n_t, n_p), dtype=np.int32)
        for arc in net.arcs:
            if arc.source in place_index:
                in_w[tid_index[arc.target], place_index[arc.source]] += arc.weight
            else:
                out_w[tid_index[arc.source], place_index[arc.target]] += arc.weight
        silent_ids = np.array(
            [i for i, t in enumerate(net.transitions) if t.label is None], dtype=np.int32
        )
        label_tids = {}
        for i, t in enumerate(net.transitions):
            if t.label is not None:
                label_tids.setdefault(t.label, []).append(i)
        label_tids = {lab: np.array(rows, dtype=np.int32) for lab, rows in label_tids.items()}
        initial = np.zeros(n_p, dtype=np.int32)
        for pid, n in net.initial_marking.items():
            initial[place_index[pid]] = n
        final = np.zeros(n_p, dtype=np.int32)
        for pid, n in net.final_marking.items():
            final[place_index[pid]] = n
        return CompiledNet(net, place_index, in_w, out_w, silent_ids, label_tids, initial, final)

    def marking_to_dict(self, vec) -> dict:
        return {pid: int(vec[i]) for pid, i in self.place_index.items() if vec[i] > 0}


# ---------------------------------------------------------------------------
# basic firing semantics on dict markings (reference-level API)

def enabled_transitions(net: PetriNet, marking: dict) -> set:
    """Transition ids whose every input place holds at least the arc weight."""
    tids = {t.tid for t in net.transitions}
    needed = {}
    for arc in net.arcs:
        if arc.target in tids:
            by_place = needed.setdefault(arc.target, {})
            by_place[arc.source] = by_place.get(arc.source, 0) + arc.weight
    out = set()
    for t in net.transitions:
        req = needed.get(t.tid, {})
        if all(marking.get(pid, 0) >= w for pid, w in req.items()):
            out.add(t.tid)
    return out


def fire(net: PetriNet, marking: dict, tid: str) -> dict:
    """Fire a transition (forced: missing tokens are not checked here).

    Input places are decremented with a floor of zero, output places are
    incremented; the shortfall accounting happens in replay, not here.
    """
    if tid not in {t.tid for t in net.transitions}:
        raise ValueError(f"unknown transition {tid!r}")
    new = dict(marking)
    for arc in net.arcs:
        if arc.target == tid:
            new[arc.source] = max(0, new.get(arc.source, 0) - arc.weight)
    for arc in net.arcs:
        if arc.source == tid:
            new[arc.target] = new.get(arc.target, 0) + arc.weight
    return {pid: n for pid, n in new.items() if n > 0}


# ---------------------------------------------------------------------------
# token replay

@dataclass(frozen=True)
class ReplayResult:
    produced: int
    consumed: int
    missing: int
    remaining: int
    final_reached: bool | None  # None when the final marking was not evaluated


class ReplayState:
    """Incremental replay: marking plus running counters.

    Beam candidates carry one of these so that extending a candidate by one
    label costs a single replay step instead of a full re-replay.
    """

    __slots__ = ("compiled", "marking", "produced", "consumed", "missing")

    def __init__(self, compiled: CompiledNet, marking=None, produced=None, consumed=0, missing=0):
        self.compiled = compiled
        if marking is None:
            marking = compiled.initial.copy()
            produced = int(compiled.initial.sum())
        self.marking = marking
        self.produced = produced
        self.consumed = consumed
        self.missing = missing

    def clone(self) -> "ReplayState":
        return ReplayState(
            self.compiled, self.marking.copy(), self.produced, self.consumed, self.missing
        )

    def step(self, label: str) -> None:
        """Replay one visible label (mutates the state)."""
        tids = self.compiled.label_tids.get(label)
        if tids is None:
            # label unknown to the net: fire a virtual transition that leaves
            # the marking alone but penalizes the trace
            self.missing += 1
            self.consumed += 1
            return
        m, c, p = _kernels.replay_one_label(
            self.marking,
            tids,
            self.compiled.in_w,
            self.compiled.out_w,
            self.compiled.silent_ids,
            SILENT_BFS_DEPTH,
            _NODE_CAP,
        )
        self.missing += int(m)
        self.consumed += int(c)
        self.produced += int(p)

    def result_partial(self, strict: bool = False) -> ReplayResult:
        """Counters as they stand, final marking not consumed.

        strict=True additionally charges tokens not explainable as part of
        the final marking as remaining.
        """
        r = 0
        if strict:
            r = int(_kernels.residual_over_final(self.marking, self.compiled.final))
        return ReplayResult(
            produced=self.produced,
            consumed=self.consumed,
            missing=self.missing,
            remaining=r,
            final_reached=None,
        )

    def result_complete(self) -> ReplayResult:
        """Counters after consuming the final marking (state left untouched)."""
        marking = self.marking.copy()
        m, c, p, r, reached = _kernels.finish_complete(
            marking,
            self.compiled.final,
            self.compiled.in_w,
            self.compiled.out_w,
            self.compiled.silent_ids,
            SILENT_BFS_DEPTH,
            _NODE_CAP,
        )
        return ReplayResult(
            produced=self.produced + int(p),
            consumed=self.consumed + int(c),
            missing=self.missing + int(m),
            remaining=int(r),
            final_reached=bool(reached),
        )


def token_replay(net: PetriNet, variant, partial: bool = False) -> ReplayResult:
    """Replay a variant (no END label) against the net.

    Complete replay consumes the final marking and counts leftover tokens as
    remaining; partial replay skips both (r := 0, final_reached := None).
    """
    if END in variant:
        raise ValueError("strip the completion label before replay")
    state = ReplayState(net.compiled)
    for label in variant:
        state.step(label)
    if partial:
        return state.result_partial(strict=False)
    return state.result_complete()


def fitness(result: ReplayResult) -> float:
    """1/2 (1 - m/c) + 1/2 (1 - r/p); zero denominators degrade to 0."""
    if result.consumed <= 0 or result.produced <= 0:
        warnings.warn("fitness undefined for zero produced/consumed counts; returning 0.0")
        return 0.0
    return 0.5 * (1.0 - result.missing / result.consumed) + 0.5 * (
        1.0 - result.remaining / result.produced
    )


def compliance(net: PetriNet, variant, partial: bool = False, partial_mode: str = "lenient") -> float:
    """Replay fitness of a variant, with a trailing END meaning "complete".

    partial_mode picks how an incomplete trace treats in-flight tokens; see
    the module docstring. Ignored for complete traces.
    """
    if partial_mode not in ("lenient", "strict"):
        raise ValueError(f"unknown partial_mode {partial_mode!r}")
    if variant and variant[-1] == END:
        variant = variant[:-1]
        partial = False
    if END in variant:
        raise ValueError("completion label inside a variant")
    state = ReplayState(net.compiled)
    for label in variant:
        state.step(label)
    if partial:
        return fitness(state.result_partial(strict=partial_mode == "strict"))
    return fitness(state.result_complete())


# ---------------------------------------------------------------------------
# PNML

def parse_pnml(source) -> PetriNet:
    """Read a PNML place/transition net (namespaced or not).

    Transitions with no name text, or flagged invisible via a toolspecific
    element, are silent. A missing final marking is inferred as one token in
    every sink place.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        tree = ET.parse(source)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ValueError(f"malformed PNML at line {line}, column {col}: {exc}") from exc
    root = tree.getroot()
    if _local(root.tag) == "net":
        net_elem = root
    else:
        net_elem = _first_by_local(root, "net")
    if net_elem is None:
        raise ValueError("PNML document contains no <net> element")
    name_elem = None
    for child in net_elem:
        if _local(child.tag) == "name":
            name_elem = child
            break
    net_name = _text_of(name_elem) or net_elem.get("id") or "net"

    places, transitions, arcs = [], [], []
    initial, final = {}, {}
    for elem in net_elem.iter():
        tag = _local(elem.tag)
        if tag == "place":
            pid = elem.get("id")
            if pid is None:
                if elem.get("idref") is not None:
                    continue  # a final-marking reference, handled below
                raise ValueError("place without id")
            places.append(pid)
            mark = _first_by_local(elem, "initialMarking")
            if mark is not None:
                count = int(_text_of(mark) or "0")
                if count:
                    initial[pid] = count
        elif tag == "transition":
            tid = elem.get("id")
            if tid is None:
                raise ValueError("transition without id")
            label = _text_of(_first_by_local(elem, "name"))
            invisible = False
            for tool in elem.iter():
                if _local(tool.tag) == "toolspecific" and (
                    tool.get("activity") == "$invisible$"
                    or tool.get("tool") == "invisible"
                ):
                    invisible = True
            if invisible or not label:
                label = None
            transitions.append(Transition(tid=tid, label=label))
        elif tag == "arc":
            src, tgt = elem.get("source"), elem.get("target")
            if src is None or tgt is None:
                raise ValueError("arc without source/target")
            weight = int(_text_of(_first_by_local(elem, "inscription")) or "1")
            arcs.append(Arc(source=src, target=tgt, weight=weight))
        elif tag == "finalmarkings" and not final:
            marking_elem = _first_by_local(elem, "marking")
            if marking_elem is not None:
                for pl in marking_elem.iter():
                    if _local(pl.tag) == "place":
                        count = int(_text_of(pl) or "0")
                        if count:
                            final[pl.get("idref")] = count

    known = set(places) | {t.tid for t in transitions}
    for arc in arcs:
        if arc.source not in known or arc.target not in known:
            raise ValueError(f"arc references unknown node: {arc.source!r} -> {arc.target!r}")
    if not final:
        with_out = {a.source for a in arcs}
        sinks = [pid for pid in places if pid not in with_out]
        if not sinks:
            raise ValueError("no final marking given and the net has no sink place")
        final = {pid: 1 for pid in sinks}
        logger.info("final marking inferred: one token in each of %s", sinks)
    return PetriNet(
        name=net_name,
        places=tuple(places),
        transitions=tuple(transitions),
        arcs=tuple(arcs),
        initial_marking=initial,
        final_marking=final,
    )


def _local(tag):
    return tag.rsplit("}", 1)[-1]


def _first_by_local(elem, name):
    for child in elem.iter():
        if child is not elem and _local(child.tag) == name:
            return child
    return None


def _text_of(elem):
    if elem is None:
        return None
    for child in elem.iter():
        if _local(child.tag) == "text":
            return (child.text or "").strip()
    if elem.text and elem.text.strip():
        return elem.text.strip()
    return None


def write_pnml(net: PetriNet, path) -> None:
    """Serialize deterministically; parse_pnml(write_pnml(n)) == n structurally."""

    def esc(s):
        return (
            s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
        )

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<pnml xmlns="http://www.pnml.org/version-2009/grammar/pnml">',
        f'  <net id="{esc(net.name)}" type="http://www.pnml.org/version-2009/grammar/ptnet">',
        f"    <name><text>{esc(net.name)}</text></name>",
        '    <page id="page1">',
    ]
    for pid in net.places:
        line = f'      <place id="{esc(pid)}">'
        count = net.initial_marking.get(pid, 0)
        if count:
            line += f"<initialMarking><text>{count}</text></initialMarking>"
        line += "</place>"
        lines.append(line)
    for t in net.transitions:
        if t.label is None:
            lines.append(
                f'      <transition id="{esc(t.tid)}">'
                '<toolspecific tool="ProM" version="6.4" activity="$invisible$"/>'
                "</transition>"
            )
        else:
            lines.append(
                f'      <transition id="{esc(t.tid)}"><name><text>{esc(t.label)}</text></name>'
                "</transition>"
            )
    for i, arc in enumerate(net.arcs):
        line = f'      <arc id="a{i}" source="{esc(arc.source)}" target="{esc(arc.target)}">'
        if arc.weight != 1:
            line += f"<inscription><text>{arc.weight}</text></inscription>"
        line += "</arc>"
        lines.append(line)
    lines.append("    </page>")
    lines.append("    <finalmarkings><marking>")
    for pid in net.places:
        count = net.final_marking.get(pid, 0)
        if count:
            lines.append(f'      <place idref="{esc(pid)}"><text>{count}</text></place>')
    lines.append("    </marking></finalmarkings>")
    lines.append("  </net>")
    lines.append("</pnml>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def chain_net(labels, name: str = "chain") -> PetriNet:
    """Convenience: a strictly sequential net p0 -> labels[0] -> p1 -> ...

    Used all over the tests; duplicate labels are allowed and become
    duplicate-label transitions.
    """
    places = tuple(f"p{i}" for i in range(len(labels) + 1))
    transitions = tuple(Transition(tid=f"t{i}", label=lab) for i, lab in enumerate(labels))
    arcs = []
    for i in range(len(labels)):
        arcs.append(Arc(source=f"p{i}", target=f"t{i}"))
        arcs.append(Arc(source=f"t{i}", target=f"p{i + 1}"))
    return PetriNet(
        name=name,
        places=places,
        transitions=transitions,
        arcs=tuple(arcs),
        initial_marking={"p0": 1},
        final_marking={f"p{len(labels)}": 1},
    )


def flower_net(labels, name: str = "flower") -> PetriNet:
    """A single place with one self-loop transition per label.

    Accepts every sequence over the labels (fitness 1 for anything), which
    makes it the neutral background-knowledge stand-in when no real model
    is available.
    """
    transitions = tuple(Transition(tid=f"t{i}", label=lab) for i, lab in enumerate(sorted(set(labels))))
    arcs = []
    for t in transitions:
        arcs.append(Arc(source="p0", target=t.tid))
        arcs.append(Arc(source=t.tid, target="p0"))
    return PetriNet(
        name=name,
        places=("p0",),
        transitions=transitions,
        arcs=tuple(arcs),
        initial_marking={"p0": 1},
        final_marking={"p0": 1},
    )
