"""Benchmark targets, multi-run campaigns and construction checks."""
from __future__ import annotations

import itertools
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .evaluate import Evaluator, TargetSpec, circuit_cost, circuit_matrix, truth_table_target, unitary_target
from .evolve import GAConfig, RunReport, run
from .gates import (
    SINGLE_QUTRIT_RESTRICTED,
    WireRestriction,
    builtin_catalog,
    embed_boolean,
    expand_to_circuit_width,
    get_gate,
)
from .genome import Lexicon, make_circuit
from .minimize import minimize
from .tensor import approx_equal

Word = tuple[int, ...]


class BenchmarkError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class Benchmark:
    name: str
    target: TargetSpec
    restrictions: Mapping[str, WireRestriction] = field(default_factory=dict)
    description: str = ""


def _restrict(wires: Iterable[int]) -> dict[str, WireRestriction]:
    r = WireRestriction(frozenset(wires))
    return {g: r for g in SINGLE_QUTRIT_RESTRICTED}


def toffoli_fn(x: Word) -> Word:
    a, b, c = x
    return a, b, c ^ (a & b)


def toffoli_variant_fn(x: Word) -> Word:
    """The Toffoli flavour that swaps 100 and 101."""
    a, b, c = x
    return a, b, c ^ (a & (1 - b))


def fredkin_fn(x: Word) -> Word:
    a, b, c = x
    return (a, c, b) if a else (a, b, c)


def majority(a: int, b: int, c: int) -> int:
    return (a & b) | (b & c) | (a & c)


def miller_fn(x: Word) -> Word:
    # the Miller permutation exchanges 001 and 110 and fixes every other word
    swaps = {(0, 0, 1): (1, 1, 0), (1, 1, 0): (0, 0, 1)}
    return swaps.get(tuple(x), tuple(x))


def full_adder_fn(x: Word) -> Word:
    a, b, c, _ = x
    return a ^ b ^ c, majority(a, b, c)


def toffoli_sign_unitary() -> np.ndarray:
    d = np.ones(8)
    d[7] = -1
    g = replace(get_gate("Toffoli"), matrix=np.diag(d).astype(complex))
    return embed_boolean(g, "TS3").matrix


def _toffoli(any_variant: bool) -> TargetSpec:
    t = truth_table_target(toffoli_fn, 3, name="Toffoli")
    if any_variant:
        v = truth_table_target(toffoli_variant_fn, 3, name="Toffoli[101,100]")
        t = replace(t, variants=(v,))
    return t


def load_benchmark(name: str, any_toffoli_variant: bool = False) -> Benchmark:
    """Target and default restrictions for a named benchmark."""
    key = name.lower().replace("_", "-")
    if key == "toffoli":
        return Benchmark("Toffoli", _toffoli(any_toffoli_variant), _restrict([2]), "c ^= a b")
    if key == "toffoli-sign":
        t = unitary_target(toffoli_sign_unitary(), name="Toffoli-Sign")
        return Benchmark("Toffoli-Sign", t, _restrict([2]), "minus sign on 111")
    if key == "fredkin":
        t = truth_table_target(fredkin_fn, 3, name="Fredkin")
        return Benchmark("Fredkin", t, _restrict([1, 2]), "swap b, c when a = 1")
    if key == "majority":
        t = truth_table_target(lambda x: (majority(*x),), 3, outputs=(2,), name="Majority")
        return Benchmark("Majority", t, _restrict([2]), "wire 2 <- ab + bc + ac")
    if key == "miller":
        t = truth_table_target(miller_fn, 3, name="Miller")
        return Benchmark("Miller", t, {}, "exchange 001 and 110")
    if key in ("swap3", "swap"):
        t = truth_table_target(lambda x: (x[1], x[0]), 2, name="SWAP3")
        return Benchmark("SWAP3", t, _restrict([1]), "exchange two wires")
    if key in ("fulladder", "full-adder"):
        inputs = [x + (0,) for x in itertools.product((0, 1), repeat=3)]
        t = truth_table_target(full_adder_fn, 4, outputs=(2, 3), name="FullAdder", inputs=inputs)
        return Benchmark("FullAdder", t, _restrict([2, 3]), "wire 2 <- a^b^c, wire 3 <- majority, ancilla 0")
    raise BenchmarkError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")


BENCHMARKS = ("Toffoli", "Toffoli-Sign", "Fredkin", "Majority", "Miller", "SWAP3", "FullAdder")


# -- campaigns ---------------------------------------------------------------


@dataclass(frozen=True)
class RunRow:
    """One run of a campaign, enough to rebuild every aggregate."""

    benchmark: str
    label: str
    seed: int
    success: bool
    generations: int
    correctness: float
    cost_merged: int
    cost_raw: int

    HEADER = "benchmark\tconfig\tseed\tsuccess\tgenerations\tcorrectness\tcost_merged\tcost_raw"

    def line(self) -> str:
        return "\t".join(
            [self.benchmark, self.label, str(self.seed), str(int(self.success)), str(self.generations),
             f"{self.correctness:.4f}", str(self.cost_merged), str(self.cost_raw)]
        )

    @classmethod
    def parse(cls, line: str) -> "RunRow":
        b, label, seed, ok, gens, corr, cm, cr = line.rstrip("\n").split("\t")
        return cls(b, label, int(seed), ok == "1", int(gens), float(corr), int(cm), int(cr))


@dataclass(frozen=True)
class Aggregate:
    benchmark: str
    label: str
    runs: int
    success_rate: float
    mean_generations: float | None  # successes only
    median_generations: float | None  # successes only
    mean_correctness: float
    mean_cost_merged: float
    mean_cost_raw: float
    # over all runs; a failed run counts at its generation cap
    censored_median: float


@dataclass
class CampaignResult:
    rows: list[RunRow]
    aggregates: list[Aggregate]
    reports: list[tuple[str, str, int, str]] = field(default_factory=list)  # (bench, label, seed, text)

    def aggregate(self, benchmark: str, label: str) -> Aggregate:
        for a in self.aggregates:
            if (a.benchmark, a.label) == (benchmark, label):
                return a
        raise KeyError((benchmark, label))


def aggregate_rows(rows: Sequence[RunRow]) -> list[Aggregate]:
    """Aggregates per (benchmark, config), independent of row order."""
    groups: dict[tuple[str, str], list[RunRow]] = {}
    for r in sorted(rows, key=lambda r: (r.benchmark, r.label, r.seed)):
        groups.setdefault((r.benchmark, r.label), []).append(r)
    out = []
    for (b, label), rs in groups.items():
        ok = [r.generations for r in rs if r.success]
        out.append(
            Aggregate(
                b,
                label,
                len(rs),
                100.0 * len(ok) / len(rs),
                statistics.fmean(ok) if ok else None,
                statistics.median(ok) if ok else None,
                statistics.fmean(r.correctness for r in rs),
                statistics.fmean(r.cost_merged for r in rs),
                statistics.fmean(r.cost_raw for r in rs),
                statistics.median(r.generations for r in rs),
            )
        )
    return out


def _job(args) -> tuple[RunRow, str]:
    bench_name, label, cfg, seed, any_variant = args
    b = load_benchmark(bench_name, any_variant)
    rep = run(replace(cfg, rng_seed=seed), b.target)
    ev = rep.best.eval
    row = RunRow(b.name, label, seed, rep.success, rep.generations_used, ev.correctness, ev.circuit_cost, ev.primitive_cost)
    return row, rep.to_text()


def default_workers() -> int:
    env = os.environ.get("EQLS_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_campaign(
    benchmarks: Sequence[str],
    configs: Mapping[str, GAConfig],
    runs_per_config: int = 10,
    seeds: Sequence[int] | None = None,
    workers: int | None = None,
    any_toffoli_variant: bool = False,
) -> CampaignResult:
    """Run every (benchmark, config, seed) and aggregate.

    Runs are independent processes when ``workers > 1``; results are sorted
    before aggregation, so the outcome does not depend on completion order.
    """
    if runs_per_config < 1:
        raise ValueError("runs_per_config must be at least 1")
    seeds = list(seeds) if seeds is not None else list(range(1, runs_per_config + 1))
    seeds = seeds[:runs_per_config]
    jobs = [(b, label, cfg, s, any_toffoli_variant) for b in benchmarks for label, cfg in configs.items() for s in seeds]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    rows = [r for r, _ in results]
    reports = sorted(((r.benchmark, r.label, r.seed, text) for r, text in results), key=lambda t: t[:3])
    return CampaignResult(sorted(rows, key=lambda r: (r.benchmark, r.label, r.seed)), aggregate_rows(rows), reports)


def comparison_configs(kind: str, base: GAConfig, restrictions: Mapping[str, WireRestriction]) -> dict[str, GAConfig]:
    """Named configurations for the standard comparisons."""
    if kind == "restrictions":
        return {
            "restricted": replace(base, restrictions=dict(restrictions)),
            "unrestricted": replace(base, restrictions={}),
        }
    if kind == "modes":
        return {
            "classical": replace(base, mode="classical"),
            "lamarckian+wgs": replace(base, mode="lamarckian", use_wgs=True),
            "baldwinian": replace(base, mode="baldwinian"),
        }
    if kind == "lamarckian":
        return {
            "lamarckian": replace(base, mode="lamarckian", use_wgs=False),
            "lamarckian+wgs": replace(base, mode="lamarckian", use_wgs=True),
            "baldwinian": replace(base, mode="baldwinian"),
        }
    if kind == "fitness":
        return {
            "f0": replace(base, fitness=replace(base.fitness, mode="f0")),
            "f1": replace(base, fitness=replace(base.fitness, mode="f1")),
        }
    raise ValueError(f"unknown comparison {kind!r}")


COMPARISONS = ("restrictions", "modes", "lamarckian", "fitness")


def _fmt_gen(a: Aggregate) -> str:
    return "-" if a.mean_generations is None else f"{a.mean_generations:.0f}"


def render_table(result: CampaignResult, labels: Sequence[str] | None = None, cost: bool = False) -> str:
    """One row per benchmark, a (Gen/Corr) or (Cost/Corr) column per config."""
    benches = list(dict.fromkeys(a.benchmark for a in result.aggregates))
    labels = list(labels or dict.fromkeys(a.label for a in result.aggregates))
    sub = "Cost/Corr" if cost else "Gen/Corr"
    head = ["Gate"] + [f"{label} ({sub})" for label in labels] + ["runs"]
    lines = ["\t".join(head)]
    for b in benches:
        cells = [b]
        runs = 0
        for label in labels:
            a = result.aggregate(b, label)
            runs = a.runs
            first = f"{a.mean_cost_merged:.1f}" if cost else _fmt_gen(a)
            cells.append(f"{first}/{a.mean_correctness:.0f}%")
        cells.append(str(runs))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def render_runs(result: CampaignResult) -> str:
    return "\n".join([RunRow.HEADER] + [r.line() for r in result.rows]) + "\n"


def render_aggregates(result: CampaignResult) -> str:
    lines = ["benchmark\tconfig\truns\tsuccess%\tmean_gen\tmedian_gen\tcensored_median\tmean_corr\tcost_merged\tcost_raw"]
    for a in result.aggregates:
        mg = "-" if a.mean_generations is None else f"{a.mean_generations:.1f}"
        md = "-" if a.median_generations is None else f"{a.median_generations:.1f}"
        lines.append(
            f"{a.benchmark}\t{a.label}\t{a.runs}\t{a.success_rate:.1f}\t{mg}\t{md}\t{a.censored_median:.1f}\t"
            f"{a.mean_correctness:.2f}\t{a.mean_cost_merged:.2f}\t{a.mean_cost_raw:.2f}"
        )
    return "\n".join(lines) + "\n"


# -- hand-built constructions ------------------------------------------------


@dataclass
class ConstructionCheck:
    name: str
    passed: bool
    detail: str
    cost: int | None = None
    reference_cost: int | None = None


def _lex(n: int, radix: int = 3) -> Lexicon:
    return Lexicon(builtin_catalog(), n, radix)


def _boolean_block(m: np.ndarray, n: int, radix: int = 3) -> np.ndarray:
    idx = [int("".join(map(str, w)), radix) for w in itertools.product((0, 1), repeat=n)]
    return m[np.ix_(idx, idx)]


def _perm_matrix(fn: Callable[[Word], Word], n: int) -> np.ndarray:
    m = np.zeros((2**n, 2**n))
    for j, x in enumerate(itertools.product((0, 1), repeat=n)):
        y = fn(x)
        m[int("".join(map(str, y)), 2), j] = 1
    return m


TS_02 = [[("[0-2]", (2,))], [("CNOT3", (1, 2))], [("CZ3", (0, 2))], [("CNOT3", (1, 2))], [("[0-2]", (2,))]]
TS_12 = [[("[1-2]", (2,))], [("C[1-2]", (0, 2))], [("CZ3", (1, 2))], [("C[1-2]", (0, 2))], [("[1-2]", (2,))]]
CZ_BETWEEN_H = [[("H", (1,))], [("CZ", (0, 1))], [("H", (1,))]]
CS12_FREDKIN = [
    [("[1-2]", (0,)), ("[0-2]", (1,)), ("[0-2]", (2,))],
    [("CS12", (0, 1, 2))],
    [("[1-2]", (0,)), ("[0-2]", (1,)), ("[0-2]", (2,))],
]
SWAP_FROM_CNOTS = [[("CNOT3", (0, 1))], [("CNOT3", (1, 0))], [("CNOT3", (0, 1))]]
# carry into wire 3, then sum into wire 2
FULL_ADDER_MCT = [[("Toffoli", (0, 1, 3))], [("CNOT", (0, 1))], [("Toffoli", (1, 2, 3))], [("CNOT", (1, 2))]]


def _with_h(blocks):
    return [[("H3", (2,))]] + blocks + [[("H3", (2,))]]


def _check_sign(name: str, blocks, minus: Word, swap: tuple[Word, Word]) -> list[ConstructionCheck]:
    lex = _lex(3)
    c = make_circuit(blocks, lex)
    sub = _boolean_block(circuit_matrix(c, lex), 3)
    want = np.ones(8)
    want[int("".join(map(str, minus)), 2)] = -1
    ok_sign = approx_equal(sub, np.diag(want).astype(complex))
    cost = circuit_cost(c, lex)
    out = [ConstructionCheck(f"{name} sign on {''.join(map(str, minus))}", ok_sign, "Boolean block is the signed identity", cost, 3)]
    ct = make_circuit(_with_h(blocks), lex)
    sub = _boolean_block(circuit_matrix(ct, lex), 3)
    a, b = (int("".join(map(str, w)), 2) for w in swap)
    perm = np.eye(8)
    perm[[a, b]] = perm[[b, a]]
    ok_swap = approx_equal(sub, perm.astype(complex))
    label = f"[{''.join(map(str, swap[0]))},{''.join(map(str, swap[1]))}]"
    out.append(ConstructionCheck(f"{name} between H on wire 2 swaps {label}", ok_swap, "logical Toffoli", cost, 3))
    return out


def discovered_fredkin_family(max_blocks: int = 5) -> tuple[int | None, list[tuple[tuple[str, tuple[int, ...]], ...]]]:
    """Shortest circuits over CZ3, CH3 (either control) and CNOT3 that realize Fredkin.

    Works on the Boolean 8x8 restrictions, which these embedded gates leave
    invariant.  Circuits are split into a prefix of up to two gates and a
    suffix of the rest; a circuit qualifies when every Boolean input lands on
    its Fredkin image with probability one.
    """
    lex = _lex(3)
    gates = [
        (g, w)
        for g in ("CZ3", "CH3", "CNOT3")
        for w in itertools.permutations(range(3), 2)
        if not (g == "CZ3" and w[0] > w[1])
    ]
    mats = [_boolean_block(expand_to_circuit_width(lex.gates[g], w, 3), 3).real for g, w in gates]
    target = [int("".join(map(str, fredkin_fn(x))), 2) for x in itertools.product((0, 1), repeat=3)]

    def products(k: int):
        seqs, ms = [], []
        for seq in itertools.product(range(len(gates)), repeat=k):
            m = np.eye(8)
            for i in seq:
                m = mats[i] @ m
            seqs.append(seq)
            ms.append(m)
        return seqs, np.array(ms).reshape(-1, 8, 8)

    pre_len = min(2, max_blocks)
    for total in range(1, max_blocks + 1):
        kp = min(pre_len, total)
        ks = total - kp
        ps, pm = products(kp)
        ss, sm = products(ks)
        # val[s, p, x] = (S P)[F(x), x]
        a = sm[:, target, :]  # s, x, k
        b = np.transpose(pm, (0, 2, 1))  # p, x, k
        val = np.einsum("sxk,pxk->spx", a, b)
        hit = np.all(np.abs(val) ** 2 >= 1 - 1e-6, axis=2)
        found = []
        for si, pi in zip(*np.nonzero(hit)):
            seq = tuple(ps[pi]) + tuple(ss[si])
            found.append(tuple(gates[i] for i in seq))
        if found:
            return total, sorted(set(found))
    return None, []


def verify_constructions() -> list[ConstructionCheck]:
    checks: list[ConstructionCheck] = []

    lex2 = _lex(2, 2)
    c = make_circuit(CZ_BETWEEN_H, lex2)
    m = circuit_matrix(c, lex2)
    checks.append(ConstructionCheck("H CZ H on the target is CNOT", approx_equal(m, get_gate("CNOT").matrix), "binary, 2 wires"))
    lex3 = _lex(2)
    c = make_circuit([[("H3", (1,))], [("CZ3", (0, 1))], [("H3", (1,))]], lex3)
    checks.append(
        ConstructionCheck("H3 CZ3 H3 on the target is CNOT3", approx_equal(circuit_matrix(c, lex3), get_gate("CNOT3").matrix), "qutrit, 2 wires")
    )

    checks += _check_sign("TS with [0-2]", TS_02, (1, 0, 1), ((1, 0, 0), (1, 0, 1)))
    checks += _check_sign("TS with [1-2]", TS_12, (1, 1, 1), ((1, 1, 0), (1, 1, 1)))

    lex = _lex(3)
    c = make_circuit(CS12_FREDKIN, lex)
    sub = _boolean_block(circuit_matrix(c, lex), 3)
    ok = approx_equal(sub, _perm_matrix(fredkin_fn, 3).astype(complex))
    checks.append(ConstructionCheck("Controlled-S3 Fredkin on Boolean inputs", ok, "all 8 words", circuit_cost(c, lex)))

    c = make_circuit(SWAP_FROM_CNOTS, lex3)
    before = circuit_matrix(c, lex3)
    ok = approx_equal(before, get_gate("SWAP3").matrix)
    res = minimize(c, Lexicon(builtin_catalog(), 2, 3), "lamarckian", drop_idle=True)
    gates_left = [p for p in res.phenotype.placements() if p.gate != "Wire"]
    same = approx_equal(circuit_matrix(res.phenotype, res.lexicon), before)
    checks.append(ConstructionCheck("Three alternating CNOTs are SWAP", ok, "qutrit, 2 wires"))
    checks.append(
        ConstructionCheck(
            "CNOT SWAP minimizes to one gate, same matrix",
            len(gates_left) == 1 and same,
            f"{len(gates_left)} gate(s) left: {','.join(p.gate for p in gates_left)}",
        )
    )

    lex4 = _lex(4, 2)
    c = make_circuit(FULL_ADDER_MCT, lex4)
    ev = Evaluator(_binary_full_adder(), lex4).score_circuit(c)
    cost = circuit_cost(c, lex4)
    checks.append(ConstructionCheck("Full adder MCT netlist", ev.correct and cost == 12, f"correctness {ev.correctness:.0f}%", cost, 12))

    n, found = discovered_fredkin_family(5)
    detail = "none found"
    if found:
        shown = " ".join(f"{g}{w}" for g, w in found[0])
        detail = f"{len(found)} circuit(s) of {n} gates, e.g. {shown}"
    checks.append(ConstructionCheck("Discovered-Fredkin family (<= 5 gates)", bool(found), detail, n, 5))
    return checks


def _binary_full_adder() -> TargetSpec:
    inputs = [x + (0,) for x in itertools.product((0, 1), repeat=3)]
    return truth_table_target(full_adder_fn, 4, radix=2, outputs=(2, 3), name="FullAdder", inputs=inputs)


def miller_majority_claim() -> list[tuple[int, bool]]:
    """For each output wire of the Miller permutation: does it equal majority(a, b, c)?"""
    out = []
    words = list(itertools.product((0, 1), repeat=3))
    for w in range(3):
        out.append((w, all(miller_fn(x)[w] == majority(*x) for x in words)))
    return out


def format_checks(checks: Sequence[ConstructionCheck]) -> str:
    lines = []
    for c in checks:
        cost = ""
        if c.cost is not None:
            cost = f" cost={c.cost}" + (f" (reference {c.reference_cost})" if c.reference_cost is not None else "")
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}{cost}")
    return "\n".join(lines) + "\n"
