"""Peephole minimization: cancel and merge adjacent gates on identical wires.

Two gates are adjacent when no other gate touches any of their wires between
them.  Only gates on the same wire set are combined; no commutation is used.
"""
from __future__ import annotations

import itertools
import logging
import weakref
from collections import ChainMap
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .gates import GateDef, expand_to_circuit_width
from .genome import Circuit, Lexicon, Placement, complete_block
from .tensor import DEFAULT_TOL, approx_equal, as_matrix, matmul

log = logging.getLogger(__name__)

MODES = ("lamarckian", "baldwinian", "off")


@dataclass(frozen=True)
class MergeEvent:
    produced_gate: GateDef | None  # None when the pair cancelled to identity
    source_gates: tuple[str, str]
    wires: tuple[int, ...]
    placements: tuple[Placement, ...] = ()
    produced: Placement | None = None


@dataclass
class MinimizeResult:
    phenotype: Circuit
    genotype_action: str  # "replace", "keep" or "none"
    events: list[MergeEvent] = field(default_factory=list)
    suppressed: int = 0
    lexicon: Lexicon | None = None


def _is_self_inverse(g: GateDef) -> bool:
    return approx_equal(matmul(g.matrix, g.matrix), np.eye(g.matrix.shape[0]), DEFAULT_TOL)


class _Work:
    """Mutable block list with successor lookup."""

    def __init__(self, c: Circuit, lex: Lexicon):
        self.lex = lex
        self.c = c
        self.blocks = [list(b) for b in c.blocks]

    def successor(self, i: int, p: Placement) -> tuple[int, Placement] | None:
        ws = set(p.wires)
        for j in range(i + 1, len(self.blocks)):
            for q in self.blocks[j]:
                if q.gate != self.lex.wire_gate and ws & set(q.wires):
                    return j, q
        return None

    def pairs(self):
        """Adjacent pairs (i, p, j, q) on identical wire sets, in circuit order."""
        for i, block in enumerate(self.blocks):
            for p in block:
                if p.gate == self.lex.wire_gate:
                    continue
                nxt = self.successor(i, p)
                if nxt is not None and set(nxt[1].wires) == set(p.wires):
                    yield i, p, nxt[0], nxt[1]

    def clear(self, i: int, p: Placement) -> None:
        self.blocks[i].remove(p)
        self.blocks[i].extend(Placement(self.lex.wire_gate, (w,)) for w in p.wires)

    def put(self, i: int, old: Placement, new: Placement) -> None:
        self.blocks[i].remove(old)
        self.blocks[i].append(new)

    def circuit(self, drop_idle: bool) -> Circuit:
        blocks = [complete_block(b, self.lex) for b in self.blocks]
        if drop_idle:
            blocks = [b for b in blocks if any(p.gate != self.lex.wire_gate for p in b)]
            if not blocks:
                blocks = [complete_block((), self.lex)]
        return Circuit(self.c.n_wires, self.c.radix, tuple(blocks))


def cancel_adjacent_inverses(c: Circuit, lex: Lexicon) -> Circuit:
    """Remove adjacent identical self-inverse gates until none remain."""
    work = _Work(c, lex)
    _cancel(work, [])
    return work.circuit(drop_idle=False)


def _cancel(work: _Work, events: list) -> bool:
    changed = False
    again = True
    while again:
        again = False
        for i, p, j, q in work.pairs():
            if p == q and _is_self_inverse(work.lex.gates[p.gate]):
                work.clear(i, p)
                work.clear(j, q)
                events.append(MergeEvent(None, (p.gate, q.gate), p.wires, (p, q)))
                changed = again = True
                break
    return changed


def _local(g: GateDef, wires: tuple[int, ...], order: tuple[int, ...]) -> np.ndarray:
    """Matrix of ``g`` on ``wires`` expressed over the wire order ``order``."""
    return expand_to_circuit_width(g, tuple(order.index(w) for w in wires), len(order))


# Matrices are looked up by their entries rounded to a 1e-6 grid; a hit is
# confirmed with approx_equal.  Each lexicon gets an index that grows as gates
# are registered; an overlay chains onto its parent's index.
_GRID = 1e6
_INDEX: "weakref.WeakKeyDictionary[Lexicon, tuple[set, ChainMap]]" = weakref.WeakKeyDictionary()


def _key(m: np.ndarray) -> bytes:
    q = np.rint(np.concatenate([m.real.ravel(), m.imag.ravel()]) * _GRID).astype(np.int64)
    return m.shape[0].to_bytes(4, "little") + q.tobytes()


def _index(lex: Lexicon) -> ChainMap:
    ent = _INDEX.get(lex)
    if ent is None:
        parent = getattr(lex, "parent", None)
        if parent is not None:
            done, table = _index_entry(parent)
            ent = (set(done), table.new_child())
        else:
            ent = (set(), ChainMap({}))
        _INDEX[lex] = ent
    done, table = ent
    if len(done) != len(lex.gates):
        for g in list(lex.gates.values()):
            if g.id in done:
                continue
            done.add(g.id)
            if g.id == lex.wire_gate:
                continue
            for perm in itertools.permutations(range(g.arity)):
                table.maps[0].setdefault(_key(expand_to_circuit_width(g, perm, g.arity)), (g.id, perm))
    return table


def _index_entry(lex: Lexicon) -> tuple[set, ChainMap]:
    _index(lex)
    return _INDEX[lex]


def _existing(lex: Lexicon, m: np.ndarray, order: tuple[int, ...]) -> Placement | None:
    """An existing gate whose placement on ``order`` has matrix ``m``."""
    hit = _index(lex).get(_key(m))
    if hit is None:
        return None
    gid, perm = hit
    wires = tuple(order[i] for i in perm)
    if not approx_equal(_local(lex.gates[gid], wires, order), m, DEFAULT_TOL):
        return None
    return Placement(gid, wires)


def _merged_name(lex: Lexicon) -> str:
    n = len(lex.gates)
    while f"M{n}" in lex.gates:
        n += 1
    return f"M{n}"


def _merge(work: _Work, events: list, register: bool) -> tuple[bool, int]:
    lex = work.lex
    suppressed = 0
    blocked: set = set()
    again = True
    changed = False
    while again:
        again = False
        for i, p, j, q in work.pairs():
            key = (p, q)
            if key in blocked:
                continue
            order = tuple(sorted(p.wires))
            gp, gq = lex.gates[p.gate], lex.gates[q.gate]
            m = matmul(_local(gq, q.wires, order), _local(gp, p.wires, order))
            if approx_equal(m, np.eye(m.shape[0]), DEFAULT_TOL):
                work.clear(i, p)
                work.clear(j, q)
                events.append(MergeEvent(None, (p.gate, q.gate), order, (p, q)))
                changed = again = True
                break
            new = _existing(lex, m, order)
            if new is None:
                g = GateDef(
                    _merged_name(lex),
                    f"{gp.name}*{gq.name}",
                    lex.radix,
                    len(order),
                    as_matrix(m),
                    gp.cost + gq.cost if len(order) > 2 else (0 if len(order) == 1 else 1),
                    raw_cost=gp.raw_cost + gq.raw_cost,
                    sources=(p.gate, q.gate),
                )
                if not (register and lex.register(g)):
                    log.debug("merge of %s and %s on %s suppressed: lexicon full", p.gate, q.gate, order)
                    blocked.add(key)
                    suppressed += 1
                    continue
                new = Placement(g.id, order)
            work.put(i, p, new)
            work.clear(j, q)
            events.append(MergeEvent(lex.gates[new.gate], (p.gate, q.gate), order, (p, q), new))
            changed = again = True
            break
    return changed, suppressed


def merge_adjacent(c: Circuit, lex: Lexicon) -> tuple[Circuit, list[MergeEvent]]:
    """One fixpoint of pairwise merging; new gates are registered in ``lex``."""
    work = _Work(c, lex)
    events: list[MergeEvent] = []
    _merge(work, events, register=True)
    return work.circuit(drop_idle=False), events


def minimize(c: Circuit, lex: Lexicon, mode: str = "lamarckian", drop_idle: bool = False) -> MinimizeResult:
    """Cancel and merge to a fixpoint.

    ``lamarckian`` registers merged gates in ``lex`` (the phenotype becomes the
    new genotype); ``baldwinian`` works in a scratch overlay and leaves ``lex``
    untouched; ``off`` returns the input.  Blocks left holding only Wire gates
    are kept unless ``drop_idle`` is set, so a rewritten genome keeps its length.
    """
    if mode not in MODES:
        raise ValueError(f"minimize mode must be one of {MODES}")
    if mode == "off":
        return MinimizeResult(c, "none", lexicon=lex)
    work_lex = lex if mode == "lamarckian" else lex.overlay()
    work = _Work(c, work_lex)
    events: list[MergeEvent] = []
    suppressed = 0
    while True:
        a = _cancel(work, events)
        b, s = _merge(work, events, register=True)
        suppressed += s
        if not (a or b):
            break
    action = "replace" if mode == "lamarckian" else "keep"
    return MinimizeResult(work.circuit(drop_idle), action, events, suppressed, work_lex)


def format_merge_events(events: Iterable[MergeEvent], lex: Lexicon) -> str:
    """One line per event: produced token, source tokens, wires."""
    lines = []
    for e in events:
        produced = "-" if e.produced is None else lex.token(e.produced)
        srcs = ",".join(lex.token(p) for p in e.placements) if e.placements else ",".join(e.source_gates)
        lines.append(f"{produced} {srcs} {','.join(map(str, e.wires))}")
    return "\n".join(lines) + ("\n" if lines else "")
