"""Circuit evaluation: unitary, Boolean-subspace error, correctness, cost, fitness.

Truth-table targets are scored on measurement probabilities, so phases are
ignored.  Unitary targets compare matrix columns up to one global phase.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .gates import DEFAULT_COST, CostModel, expand_to_circuit_width, gate_cost
from .genome import DELIM, Block, Circuit, Lexicon
from .tensor import DEFAULT_TOL, ShapeError, as_matrix, identity, is_unitary, matmul, parse_fixture

CORRECTNESS_TOL = 1e-6

Word = tuple[int, ...]


class TargetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TargetSpec:
    kind: str  # "unitary" | "truth-table" | "partial-truth-table"
    n_wires: int
    radix: int
    unitary: np.ndarray | None = field(default=None, repr=False)
    table: Mapping[Word, Word] | None = None
    # wires the output words of ``table`` refer to
    outputs: tuple[int, ...] | None = None
    name: str = ""
    # further acceptable targets; the best-scoring one counts
    variants: tuple["TargetSpec", ...] = ()

    def __post_init__(self):
        if self.kind == "unitary":
            if self.unitary is None:
                raise TargetError("unitary target without a matrix")
            dim = self.radix**self.n_wires
            if self.unitary.shape != (dim, dim):
                raise TargetError(f"target matrix {self.unitary.shape} does not match {self.n_wires} wires")
            if not is_unitary(self.unitary, DEFAULT_TOL):
                raise TargetError("target matrix is not unitary")
        elif self.kind in ("truth-table", "partial-truth-table"):
            if not self.table:
                raise TargetError("truth-table target without entries")
            outs = self.outputs if self.outputs is not None else tuple(range(self.n_wires))
            object.__setattr__(self, "outputs", tuple(outs))
            for x, y in self.table.items():
                if len(x) != self.n_wires or len(y) != len(outs):
                    raise TargetError(f"entry {x} -> {y} has the wrong width")
            if len(outs) == self.n_wires and len(set(self.table.values())) != len(self.table):
                raise TargetError("a full-output truth table must be injective")
        else:
            raise TargetError(f"unknown target kind {self.kind!r}")

    def inputs(self) -> list[Word]:
        if self.kind == "unitary":
            return list(itertools.product((0, 1), repeat=self.n_wires))
        return list(self.table)


def truth_table_target(fn, n_wires: int, radix: int = 3, outputs=None, name="", inputs=None) -> TargetSpec:
    """Tabulate ``fn(word) -> output word`` over Boolean inputs."""
    inputs = inputs if inputs is not None else itertools.product((0, 1), repeat=n_wires)
    table = {tuple(x): tuple(fn(tuple(x))) for x in inputs}
    full = outputs is None or len(outputs) == n_wires
    return TargetSpec("truth-table" if full else "partial-truth-table", n_wires, radix, table=table, outputs=outputs, name=name)


@dataclass(frozen=True)
class FitnessParams:
    alpha: float = 0.9
    beta: float = 0.1
    mode: str = "f1"

    def __post_init__(self):
        if self.mode not in ("f0", "f1"):
            raise ValueError(f"fitness mode must be f0 or f1, got {self.mode!r}")
        if self.alpha < 0 or self.beta < 0 or abs(self.alpha + self.beta - 1) > 1e-12:
            raise ValueError(f"alpha and beta must be nonnegative and sum to 1, got {self.alpha}, {self.beta}")


def fitness(error: float, cost: int, p: FitnessParams = FitnessParams()) -> float:
    if p.mode == "f0":
        return 1.0 / (1.0 + error)
    if cost < 1:
        raise ValueError("f1 needs cost >= 1; floor the cost first")
    return p.alpha / (1.0 + error) + p.beta / cost


@dataclass(frozen=True)
class Evaluation:
    error: float
    correctness: float  # percent of inputs mapped correctly
    cost: int  # cost entering the fitness, floored at 1
    circuit_cost: int  # sum of gate costs of the evaluated circuit
    primitive_cost: int  # same, with merged gates counted by their sources
    fitness: float

    @property
    def correct(self) -> bool:
        return self.correctness >= 100.0


def _word_index(word: Sequence[int], radix: int) -> int:
    i = 0
    for d in word:
        i = i * radix + d
    return i


class Evaluator:
    """Scores circuits and genomes against one target.

    Block matrices are cached by block text (genomes) or placement tuple
    (circuits).  Caches only grow, so concurrent scoring is safe.
    """

    def __init__(
        self,
        target: TargetSpec,
        lex: Lexicon,
        params: FitnessParams = FitnessParams(),
        cost_model: CostModel = DEFAULT_COST,
        tol: float = CORRECTNESS_TOL,
        backend: str | None = None,
    ):
        if (target.n_wires, target.radix) != (lex.n_wires, lex.radix):
            raise ShapeError(
                f"target is {target.n_wires} wires radix {target.radix}, lexicon is {lex.n_wires} wires radix {lex.radix}"
            )
        self.target = target
        self.lex = lex
        self.params = params
        self.cost_model = cost_model
        self.tol = tol
        self.k = kernels.get_backend(backend)
        self.dim = lex.radix**lex.n_wires
        self._variants = [self._prepare(t) for t in (target, *target.variants)]
        self._cols = self._variants[0]["cols"]
        self._seg_cache: dict[str, tuple] = {}
        self._block_cache: dict[Block, tuple] = {}

    def _prepare(self, t: TargetSpec) -> dict:
        if t.inputs() != self.target.inputs():
            raise TargetError("target variants must share one input set")
        inputs = t.inputs()
        in_idx = [_word_index(x, t.radix) for x in inputs]
        cols = np.zeros((self.dim, len(inputs)), dtype=np.complex128)
        cols[in_idx, range(len(inputs))] = 1
        prep = {"cols": cols, "kind": t.kind}
        if t.kind == "unitary":
            prep["target_cols"] = np.ascontiguousarray(t.unitary[:, in_idx])
        else:
            digits = np.array(list(itertools.product(range(t.radix), repeat=t.n_wires)))
            mask = np.zeros((self.dim, len(inputs)))
            for j, x in enumerate(inputs):
                want = np.array(t.table[x])
                mask[:, j] = np.all(digits[:, list(t.outputs)] == want, axis=1)
            prep["mask"] = mask
        return prep

    # -- block matrices ------------------------------------------------------

    def _block_entry(self, block: Block) -> tuple:
        hit = self._block_cache.get(block)
        if hit is None:
            gates = self.lex.gates
            m = None
            cost = prim = 0
            for p in block:
                g = gates[p.gate]
                cost += gate_cost(g, self.cost_model)
                prim += g.raw_cost if g.merged else gate_cost(g, self.cost_model)
                if p.gate == self.lex.wire_gate:
                    continue
                e = expand_to_circuit_width(g, p.wires, self.lex.n_wires)
                m = e if m is None else matmul(e, m)
            hit = (m, cost, prim)
            self._block_cache[block] = hit
        return hit

    def _seg_entry(self, seg: str) -> tuple:
        hit = self._seg_cache.get(seg)
        if hit is None:
            block = tuple(self.lex.entry(seg[i : i + 3]) for i in range(0, len(seg), 3))
            hit = self._block_entry(block)
            self._seg_cache[seg] = hit
        return hit

    def circuit_matrix(self, c: Circuit) -> np.ndarray:
        out = identity(self.dim)
        for block in c.blocks:
            m = self._block_entry(block)[0]
            if m is not None:
                out = matmul(m, out)
        return out

    # -- scoring -------------------------------------------------------------

    def _fidelities(self, state: np.ndarray, prep: dict) -> np.ndarray:
        if prep["kind"] == "unitary":
            overlap = np.sum(np.conj(prep["target_cols"]) * state, axis=0)
            total = overlap.sum()
            phase = total / abs(total) if abs(total) > 1e-15 else 1.0
            return np.real(overlap * np.conj(phase))
        return self.k.masked_probability(state, prep["mask"])

    def _score_state(self, state: np.ndarray) -> tuple[float, float]:
        best = None
        for prep in self._variants:
            p = np.minimum(self._fidelities(state, prep), 1.0)
            err = float(np.sum((1.0 - p) ** 2))
            corr = 100.0 * float(np.mean(p >= 1.0 - self.tol))
            if best is None or err < best[0]:
                best = (err, corr)
        return best

    def _finish(self, entries: Iterable[tuple]) -> Evaluation:
        mats, cost, prim = [], 0, 0
        for m, c, pc in entries:
            cost += c
            prim += pc
            if m is not None:
                mats.append(m)
        state = self.k.apply_chain(mats, self._cols)
        err, corr = self._score_state(state)
        fcost = max(1, cost)
        return Evaluation(err, corr, fcost, cost, prim, fitness(err, fcost, self.params))

    def score(self, genome_text: str) -> Evaluation:
        return self._finish(self._seg_entry(seg) for seg in genome_text.split(DELIM) if seg)

    def score_circuit(self, c: Circuit) -> Evaluation:
        return self._finish(self._block_entry(b) for b in c.blocks)

    def score_many(self, texts: Sequence[str], workers: int = 1) -> list[Evaluation]:
        if workers <= 1:
            return [self.score(t) for t in texts]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.score, texts))

    def gate_cost(self, g) -> int:
        return gate_cost(g, self.cost_model)

    def primitive_gate_cost(self, g) -> int:
        return g.raw_cost if g.merged else gate_cost(g, self.cost_model)

    def with_cost(self, ev: Evaluation, cost: int, prim: int) -> Evaluation:
        """``ev`` re-costed, e.g. for a minimized phenotype with the same function."""
        fcost = max(1, cost)
        return Evaluation(ev.error, ev.correctness, fcost, cost, prim, fitness(ev.error, fcost, self.params))

    def output_state(self, c: Circuit) -> np.ndarray:
        """Columns: the circuit applied to each target input word."""
        return self.k.apply_chain([m for m in (self._block_entry(b)[0] for b in c.blocks) if m is not None], self._cols)


# -- module-level conveniences ----------------------------------------------


def circuit_matrix(c: Circuit, lex: Lexicon) -> np.ndarray:
    out = identity(lex.radix**lex.n_wires)
    for block in c.blocks:
        for p in block:
            if p.gate != lex.wire_gate:
                out = matmul(expand_to_circuit_width(lex.gates[p.gate], p.wires, lex.n_wires), out)
    return out


def circuit_cost(c: Circuit, lex: Lexicon, model: CostModel = DEFAULT_COST) -> int:
    return sum(gate_cost(lex.gates[p.gate], model) for p in c.placements())


def primitive_cost(c: Circuit, lex: Lexicon, model: CostModel = DEFAULT_COST) -> int:
    total = 0
    for p in c.placements():
        g = lex.gates[p.gate]
        total += g.raw_cost if g.merged else gate_cost(g, model)
    return total


def _check_width(c: Circuit, t: TargetSpec) -> None:
    if (c.n_wires, c.radix) != (t.n_wires, t.radix):
        raise ShapeError(f"circuit is {c.n_wires} wires radix {c.radix}, target {t.n_wires} wires radix {t.radix}")


def boolean_error(c: Circuit, t: TargetSpec, lex: Lexicon) -> float:
    _check_width(c, t)
    return Evaluator(t, lex).score_circuit(c).error


def correctness(c: Circuit, t: TargetSpec, lex: Lexicon, tol: float = CORRECTNESS_TOL) -> float:
    _check_width(c, t)
    return Evaluator(t, lex, tol=tol).score_circuit(c).correctness


# -- target files ------------------------------------------------------------
# Truth tables: "input_word output_word" per line, optional "# outputs=2,3"
# and "# radix=3" header comments.  Unitary targets use the matrix fixture
# format.


def parse_target(text: str, radix: int = 3, name: str = "") -> TargetSpec:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TargetError("empty target file")
    head = lines[0].split()
    if len(head) == 2 and all(tok.isdigit() for tok in head) and not lines[0].startswith("#"):
        try:
            m = parse_fixture(text)
        except ValueError:
            m = None
        if m is not None:
            n = round(np.log(m.shape[0]) / np.log(radix))
            return TargetSpec("unitary", n, radix, unitary=m, name=name)
    outputs = None
    table = {}
    for ln in lines:
        if ln.startswith("#"):
            for kv in ln[1:].split():
                key, _, val = kv.partition("=")
                if key == "outputs":
                    outputs = tuple(int(w) for w in val.split(","))
                elif key == "radix":
                    radix = int(val)
            continue
        try:
            x, y = ln.split()
            table[tuple(int(ch) for ch in x)] = tuple(int(ch) for ch in y)
        except ValueError:
            raise TargetError(f"bad truth-table line {ln!r}") from None
    n = len(next(iter(table)))
    full = outputs is None or len(outputs) == n
    return TargetSpec("truth-table" if full else "partial-truth-table", n, radix, table=table, outputs=outputs, name=name)


def read_target(path, radix: int = 3) -> TargetSpec:
    p = Path(path)
    return parse_target(p.read_text(), radix, name=p.stem)


def format_target(t: TargetSpec) -> str:
    if t.kind == "unitary":
        from .tensor import format_entry

        rows = [f"{t.unitary.shape[0]} {t.unitary.shape[1]}"]
        rows += [" ".join(format_entry(complex(z)) for z in row) for row in t.unitary]
        return "\n".join(rows) + "\n"
    head = [f"# radix={t.radix} outputs={','.join(map(str, t.outputs))}"]
    body = ["".join(map(str, x)) + " " + "".join(map(str, y)) for x, y in t.table.items()]
    return "\n".join(head + body) + "\n"


def unitary_target(m, radix: int = 3, name: str = "") -> TargetSpec:
    m = as_matrix(m)
    n = round(np.log(m.shape[0]) / np.log(radix))
    return TargetSpec("unitary", n, radix, unitary=m, name=name)
