"""Circuit genomes: 'p'-delimited blocks of three-character gate tokens.

A genome such as ``p!!!#!!pp$!!p`` holds two blocks.  Every block spans the
full register; wires a block does not mention carry the Wire gate.
"""
from __future__ import annotations

import itertools
import random
import threading
from collections import ChainMap
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gates import GateDef, WireRestriction, builtin_catalog
from .tensor import DEFAULT_TOL, approx_equal

DELIM = "p"
ALPHABET = "".join(chr(c) for c in range(33, 127) if chr(c) != DELIM)
TOKEN_SPACE = len(ALPHABET) ** 3


class GenomeError(ValueError):
    """Malformed genome text or unknown token."""


class StructuralError(GenomeError):
    """Block placements overlap or do not cover the register."""


def token_for_index(i: int) -> str:
    if not 0 <= i < TOKEN_SPACE:
        raise GenomeError(f"token index {i} outside the three-character space")
    n = len(ALPHABET)
    return ALPHABET[i % n] + ALPHABET[(i // n) % n] + ALPHABET[i // (n * n)]


@dataclass(frozen=True, order=True)
class Placement:
    gate: str
    wires: tuple[int, ...]


Block = tuple[Placement, ...]


@dataclass(frozen=True)
class Circuit:
    n_wires: int
    radix: int
    blocks: tuple[Block, ...]

    def placements(self) -> Iterable[Placement]:
        for block in self.blocks:
            yield from block


@dataclass(frozen=True)
class Genome:
    text: str
    n_wires: int
    radix: int


def _placements_for(arity: int, n_wires: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(n_wires), arity))


class Lexicon:
    """Bijection between tokens and (gate, ordered wires) for one register size.

    Tokens are handed out in registration order, so a lexicon built from the
    same gate list is identical across runs.  Registration is append-only and
    guarded by a lock.
    """

    def __init__(self, gates: Iterable[GateDef], n_wires: int, radix: int, merged_cap: int | None = None):
        self.n_wires = n_wires
        self.radix = radix
        self.merged_cap = merged_cap
        self.n_merged = 0
        self.gates: Mapping[str, GateDef] = {}
        self._token: Mapping[Placement, str] = {}
        self._entry: Mapping[str, Placement] = {}
        self._placements: Mapping[str, list[tuple[int, ...]]] = {}
        self._next = 0
        self._lock = threading.Lock()
        self.version = 0
        self.wire_gate = "Wire" if radix == 3 else "Wire2"
        self.parent: Lexicon | None = None
        for g in gates:
            if g.radix == radix and g.arity <= n_wires:
                self._add(g)
        if self.wire_gate not in self.gates:
            raise GenomeError(f"lexicon needs the {self.wire_gate} gate")

    @classmethod
    def builtin(cls, n_wires: int, radix: int = 3, merged_cap: int | None = None) -> "Lexicon":
        return cls(builtin_catalog(), n_wires, radix, merged_cap)

    def _add(self, g: GateDef) -> None:
        if g.id in self.gates:
            raise GenomeError(f"gate id {g.id!r} already registered")
        self.gates[g.id] = g
        wires_list = _placements_for(g.arity, self.n_wires)
        self._placements[g.id] = wires_list
        for wires in wires_list:
            tok = token_for_index(self._next)
            self._next += 1
            p = Placement(g.id, wires)
            self._token[p] = tok
            self._entry[tok] = p
        self.version += 1

    def register(self, g: GateDef) -> bool:
        """Add a merged gate; returns False when the merged-gate cap is reached."""
        with self._lock:
            if self.merged_cap is not None and self.n_merged >= self.merged_cap:
                return False
            self._add(g)
            self.n_merged += 1
            return True

    def find_equivalent(self, matrix: np.ndarray, arity: int) -> str | None:
        for g in self.gates.values():
            if g.arity == arity and g.matrix.shape == matrix.shape and approx_equal(g.matrix, matrix, DEFAULT_TOL):
                return g.id
        return None

    def overlay(self) -> "Lexicon":
        """Scratch child: sees every parent gate, keeps its own additions private."""
        child = object.__new__(Lexicon)
        child.__dict__.update(self.__dict__)
        child.gates = ChainMap({}, self.gates)
        child._token = ChainMap({}, self._token)
        child._entry = ChainMap({}, self._entry)
        child._placements = ChainMap({}, self._placements)
        child._lock = threading.Lock()
        child.merged_cap = None
        child.parent = self
        return child

    def placements_of(self, gid: str) -> list[tuple[int, ...]]:
        return self._placements[gid]

    def token(self, p: Placement) -> str:
        try:
            return self._token[p]
        except KeyError:
            raise GenomeError(f"no token for {p.gate} on wires {p.wires}") from None

    def entry(self, tok: str) -> Placement:
        return self._entry[tok]

    def has_token(self, tok: str) -> bool:
        return tok in self._entry

    def __len__(self):
        return len(self._entry)


# -- block-level helpers used by the GA operators ----------------------------


def split_blocks(text: str) -> list[str]:
    """Token strings of each block, without delimiters; ``pp`` boundaries are skipped."""
    check_grammar(text)
    return [seg for seg in text.split(DELIM) if seg]


def join_blocks(blocks: Sequence[str]) -> str:
    if not blocks:
        return DELIM + DELIM
    return "".join(DELIM + b + DELIM for b in blocks)


def check_grammar(text: str) -> None:
    if len(text) < 2 or text[0] != DELIM or text[-1] != DELIM:
        raise GenomeError("genome must begin and end with 'p'")
    offset = 0
    for seg in text.split(DELIM):
        if len(seg) % 3:
            raise GenomeError(f"block at offset {offset} has {len(seg)} characters, not a multiple of 3")
        offset += len(seg) + 1


def block_placements(seg: str, lex: Lexicon, offset: int = 0) -> list[Placement]:
    out = []
    for i in range(0, len(seg), 3):
        tok = seg[i : i + 3]
        if not lex.has_token(tok):
            raise GenomeError(f"unknown token {tok!r} at offset {offset + i}")
        out.append(lex.entry(tok))
    return out


def complete_block(placements: Iterable[Placement], lex: Lexicon, strict: bool = False) -> Block:
    """Sort placements by lowest wire and fill uncovered wires with Wire."""
    placements = list(placements)
    used: set[int] = set()
    for p in placements:
        if used & set(p.wires):
            raise StructuralError(f"{p.gate} on {p.wires} overlaps another gate in the block")
        used.update(p.wires)
    missing = [w for w in range(lex.n_wires) if w not in used]
    if missing and strict:
        raise StructuralError(f"block covers {len(used)} of {lex.n_wires} wires")
    placements += [Placement(lex.wire_gate, (w,)) for w in missing]
    return tuple(sorted(placements, key=lambda p: min(p.wires)))


def block_text(block: Iterable[Placement], lex: Lexicon) -> str:
    return "".join(lex.token(p) for p in block)


def identity_block(lex: Lexicon) -> Block:
    return complete_block((), lex)


# -- decode / encode ---------------------------------------------------------


def decode(text: str, lex: Lexicon, strict: bool = False) -> Circuit:
    """Parse genome text into a Circuit.

    With ``strict`` a block that leaves wires uncovered is a StructuralError;
    otherwise the gaps are filled with Wire.
    """
    check_grammar(text)
    blocks = []
    offset = 0
    for seg in text.split(DELIM):
        if seg:
            blocks.append(complete_block(block_placements(seg, lex, offset), lex, strict))
        offset += len(seg) + 1
    if not blocks:
        blocks.append(identity_block(lex))
    return Circuit(lex.n_wires, lex.radix, tuple(blocks))


def encode(c: Circuit, lex: Lexicon) -> str:
    if (c.n_wires, c.radix) != (lex.n_wires, lex.radix):
        raise GenomeError("circuit and lexicon disagree on register shape")
    return join_blocks([block_text(complete_block(b, lex), lex) for b in c.blocks])


def make_circuit(blocks: Iterable[Iterable[tuple[str, Sequence[int]]]], lex: Lexicon) -> Circuit:
    """Build a canonical circuit from ``[[(gate, wires), ...], ...]``."""
    out = []
    for b in blocks:
        out.append(complete_block([Placement(g, tuple(w)) for g, w in b], lex))
    return Circuit(lex.n_wires, lex.radix, tuple(out))


# -- restrictions ------------------------------------------------------------

Restrictions = Mapping[str, WireRestriction]


def restriction_for(gid: str, lex: Lexicon, restrictions: Restrictions | None) -> WireRestriction:
    if restrictions and gid in restrictions:
        return restrictions[gid]
    return lex.gates[gid].restriction


def validate_restrictions(c: Circuit, lex: Lexicon, restrictions: Restrictions | None = None) -> bool:
    return all(restriction_for(p.gate, lex, restrictions).allows(p.wires) for p in c.placements())


def parse_restrictions(items: Iterable[str]) -> dict[str, WireRestriction]:
    """Parse ``gate=wires`` strings, e.g. ``H3=2`` or ``[0-2]=1,2``."""
    out = {}
    for item in items:
        gid, sep, wires = item.rpartition("=")
        if not sep or not gid:
            raise ValueError(f"restriction {item!r} is not of the form gate=wires")
        out[gid] = WireRestriction.parse(wires)
    return out


# -- random generation -------------------------------------------------------


class GateSampler:
    """Uniform choice over admissible (gate, placement) pairs.

    Candidate lists are cached per (anchor wire, free wires) and rebuilt when
    the pool or the lexicon changes.
    """

    def __init__(self, lex: Lexicon, pool: Iterable[str] | None = None, restrictions: Restrictions | None = None):
        self.lex = lex
        self.pool = list(pool) if pool is not None else [g for g in lex.gates if not lex.gates[g].merged]
        missing = [g for g in self.pool if g not in lex.gates]
        if missing:
            raise GenomeError(f"gates not in lexicon: {missing}")
        self.restrictions = dict(restrictions or {})
        self._cache: dict = {}

    def add(self, gid: str) -> None:
        if gid not in self.pool:
            self.pool.append(gid)
            self._cache.clear()

    def allows(self, p: Placement) -> bool:
        return restriction_for(p.gate, self.lex, self.restrictions).allows(p.wires)

    def candidates(self, anchor: int, free: frozenset[int]) -> list[Placement]:
        key = (anchor, free)
        hit = self._cache.get(key)
        if hit is None:
            hit = [
                Placement(g, w)
                for g in self.pool
                for w in self.lex.placements_of(g)
                if anchor in w and free.issuperset(w) and self.allows(Placement(g, w))
            ]
            self._cache[key] = hit
        return hit

    def same_wires(self, wires: tuple[int, ...]) -> list[Placement]:
        key = ("same", frozenset(wires))
        hit = self._cache.get(key)
        if hit is None:
            ws = frozenset(wires)
            hit = [
                Placement(g, w)
                for g in self.pool
                if self.lex.gates[g].arity == len(wires)
                for w in self.lex.placements_of(g)
                if frozenset(w) == ws and self.allows(Placement(g, w))
            ]
            self._cache[key] = hit
        return hit

    def fill(self, placements: list[Placement], rng: random.Random) -> Block:
        """Complete a partial block by sampling gates for the uncovered wires."""
        used = {w for p in placements for w in p.wires}
        free = frozenset(range(self.lex.n_wires)) - used
        out = list(placements)
        while free:
            anchor = min(free)
            cands = self.candidates(anchor, free)
            if not cands:
                raise GenomeError(f"no admissible gate can occupy wire {anchor}")
            p = cands[rng.randrange(len(cands))]
            out.append(p)
            free = free - set(p.wires)
        return tuple(sorted(out, key=lambda p: min(p.wires)))

    def random_block(self, rng: random.Random) -> Block:
        return self.fill([], rng)


def random_genome(
    lex: Lexicon,
    block_count_range: tuple[int, int],
    rng: random.Random,
    pool: Iterable[str] | None = None,
    restrictions: Restrictions | None = None,
    sampler: GateSampler | None = None,
) -> str:
    lo, hi = block_count_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad block count range {block_count_range}")
    sampler = sampler or GateSampler(lex, pool, restrictions)
    n = rng.randint(lo, hi)
    return join_blocks([block_text(sampler.random_block(rng), lex) for _ in range(n)])


# -- genome files ------------------------------------------------------------


def format_genome_line(g: Genome) -> str:
    return f"wires={g.n_wires} radix={g.radix} {g.text}"


def parse_genome_line(line: str) -> Genome:
    parts = line.split()
    if len(parts) != 3 or not parts[0].startswith("wires=") or not parts[1].startswith("radix="):
        raise GenomeError(f"bad genome line {line!r}")
    g = Genome(parts[2], int(parts[0][6:]), int(parts[1][6:]))
    check_grammar(g.text)
    return g


def read_genomes(path) -> list[Genome]:
    lines = Path(path).read_text().splitlines()
    return [parse_genome_line(ln) for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def write_genomes(path, genomes: Iterable[Genome]) -> None:
    Path(path).write_text("".join(format_genome_line(g) + "\n" for g in genomes))
