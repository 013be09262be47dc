"""Genetic search over circuit genomes.

One generation: SUS selection, block-aligned two-point crossover, per-gate
mutation, evaluation, generational replacement (optionally keeping the best
individual).  Three learning modes:

* ``classical``   the genome is scored as written;
* ``baldwinian``  the minimized phenotype sets the cost, the genome is kept;
* ``lamarckian``  the minimized phenotype replaces the genome and its gates
  feed the ranked extended gate set (EIGS) used by WGS mutation.
"""
from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .evaluate import Evaluation, Evaluator, FitnessParams, TargetSpec
from .gates import PRIMITIVE_SET, CatalogError, GateDef, WireRestriction, get_gate
from .genome import (
    DELIM,
    GateSampler,
    GenomeError,
    Lexicon,
    Placement,
    Restrictions,
    block_placements,
    block_text,
    check_grammar,
    complete_block,
    decode,
    encode,
    join_blocks,
    restriction_for,
    split_blocks,
)
from .minimize import minimize

log = logging.getLogger(__name__)

MODES = ("classical", "baldwinian", "lamarckian")
MUTATION_KINDS = ("structure-preserving", "free", "block-replace")


class ConfigError(ValueError):
    pass


@dataclass
class Individual:
    genome: str
    eval: Evaluation
    age: int = 0


@dataclass
class EigsEntry:
    gate: GateDef
    token: str
    usage: int = 0
    gfitness: float = 0.0


class Eigs:
    """Ranked pool of gates seen in evaluated circuits, capped in size."""

    def __init__(self, cap: int = 50):
        self.cap = cap
        self.entries: dict[str, EigsEntry] = {}
        self.refused: list[str] = []
        self._ranked: list[EigsEntry] | None = None

    def __len__(self):
        return len(self.entries)

    def update(self, gates: Iterable[tuple[GateDef, str]], circuit_fitness: float) -> None:
        """Count one use of each (gate, token) occurrence and fold in the fitness."""
        if not 0 < circuit_fitness <= 1:
            raise ValueError(f"circuit fitness {circuit_fitness} outside (0, 1]")
        for g, tok in gates:
            e = self.entries.get(g.id)
            if e is None:
                if len(self.entries) >= self.cap:
                    if g.id not in self.refused:
                        log.info("EIGS full (%d): refusing %s", self.cap, g.id)
                        self.refused.append(g.id)
                    continue
                e = self.entries[g.id] = EigsEntry(g, tok)
            e.usage += 1
            e.gfitness += (circuit_fitness - e.gfitness) / e.usage
        self._ranked = None

    def ranked(self) -> list[EigsEntry]:
        if self._ranked is None:
            self._ranked = sorted(self.entries.values(), key=lambda e: (-e.gfitness, -e.usage, e.token))
        return self._ranked

    def draw(self, rng: random.Random, admissible) -> EigsEntry | None:
        """Entry at r * total gfitness, scanning forward to the first admissible one."""
        ranked = self.ranked()
        if not ranked:
            return None
        total = sum(e.gfitness for e in ranked)
        point = rng.random() * total
        acc = 0.0
        start = len(ranked) - 1
        for i, e in enumerate(ranked):
            acc += e.gfitness
            if point < acc:
                start = i
                break
        for k in range(len(ranked)):
            e = ranked[(start + k) % len(ranked)]
            if admissible(e):
                return e
        return None

    def snapshot(self) -> list[tuple[str, str, int, float]]:
        return [(e.token, e.gate.id, e.usage, e.gfitness) for e in self.ranked()]


def eigs_update(eigs: Eigs, circuit_gates: Iterable[tuple[GateDef, str]], circuit_fitness: float) -> Eigs:
    eigs.update(circuit_gates, circuit_fitness)
    return eigs


@dataclass(frozen=True)
class GAConfig:
    mode: str = "classical"
    population_size: int = 50
    max_generations: int = 10000
    mutation_rate: float = 0.05
    mutation_kind: str = "free"
    crossover_rate: float = 0.8
    fitness: FitnessParams = FitnessParams()
    restrictions: Mapping[str, WireRestriction] = field(default_factory=dict)
    eigs_cap: int = 50
    rng_seed: int = 0
    use_wgs: bool = True
    elitism: int = 1
    block_range: tuple[int, int] = (3, 10)
    pool: tuple[str, ...] = PRIMITIVE_SET
    seed_genomes: tuple[str, ...] = ()
    workers: int = 1
    # lamarckian rewriting drops blocks left holding only Wire gates
    drop_idle: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mutation_kind not in MUTATION_KINDS:
            raise ConfigError(f"mutation kind must be one of {MUTATION_KINDS}")
        if self.population_size < 2:
            raise ConfigError("population size must be at least 2")
        if self.max_generations < 0:
            raise ConfigError("max generations must be nonnegative")
        if not 0 <= self.mutation_rate <= 1 or not 0 <= self.crossover_rate <= 1:
            raise ConfigError("rates must lie in [0, 1]")
        if not 0 <= self.elitism < self.population_size:
            raise ConfigError("elitism must be smaller than the population")
        lo, hi = self.block_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad block range {self.block_range}")
        if self.eigs_cap < 1:
            raise ConfigError("eigs cap must be positive")
        if len(self.seed_genomes) > self.population_size:
            raise ConfigError("more seed circuits than population slots")


@dataclass
class RunReport:
    success: bool
    generations_used: int
    best: Individual
    config: GAConfig
    target_name: str
    eigs: list[tuple[str, str, int, float]] = field(default_factory=list)
    eigs_refused: list[str] = field(default_factory=list)
    merged_gates: int = 0
    suppressed_merges: int = 0

    @property
    def correctness(self) -> float:
        return self.best.eval.correctness

    def to_text(self) -> str:
        c = self.config
        ev = self.best.eval
        restr = ";".join(f"{g}={r}" for g, r in sorted(c.restrictions.items())) or "-"
        lines = [
            f"target: {self.target_name}",
            f"mode: {c.mode}",
            f"wgs: {'on' if c.use_wgs and c.mode == 'lamarckian' else 'off'}",
            f"fitness: {c.fitness.mode} alpha={c.fitness.alpha!r} beta={c.fitness.beta!r}",
            f"population: {c.population_size}",
            f"max_generations: {c.max_generations}",
            f"mutation: {c.mutation_kind} rate={c.mutation_rate!r}",
            f"crossover_rate: {c.crossover_rate!r}",
            f"elitism: {c.elitism}",
            f"restrictions: {restr}",
            f"pool: {','.join(c.pool)}",
            f"eigs_cap: {c.eigs_cap}",
            f"rng_seed: {c.rng_seed}",
            f"success: {str(self.success).lower()}",
            f"generations_used: {self.generations_used}",
            f"best_genome: {self.best.genome}",
            f"best_age: {self.best.age}",
            f"correctness: {ev.correctness!r}",
            f"error: {ev.error!r}",
            f"fitness_value: {ev.fitness!r}",
            f"cost_merged: {ev.circuit_cost}",
            f"cost_raw: {ev.primitive_cost}",
            f"merged_gates: {self.merged_gates}",
            f"suppressed_merges: {self.suppressed_merges}",
            f"eigs_refused: {','.join(self.eigs_refused) or '-'}",
            f"eigs_entries: {len(self.eigs)}",
            "eigs_table:",
            "  rank\ttoken\tgate\tusage\tgfitness",
        ]
        lines += [f"  {i}\t{tok}\t{gid}\t{u}\t{gf!r}" for i, (tok, gid, u, gf) in enumerate(self.eigs)]
        return "\n".join(lines) + "\n"


# -- selection and crossover -------------------------------------------------


def sus_select(fitnesses: Sequence[float], n: int, rng: random.Random, offset: float | None = None) -> list[int]:
    """Indices of ``n`` parents from one spin with ``n`` evenly spaced pointers.

    ``offset`` in [0, 1) fixes the spin (as a fraction of the pointer spacing).
    """
    if not fitnesses:
        raise ValueError("cannot select from an empty population")
    if any(f <= 0 for f in fitnesses):
        raise ValueError("SUS needs strictly positive fitnesses")
    total = float(sum(fitnesses))
    step = total / n
    start = (rng.random() if offset is None else offset) * step
    out = []
    i = 0
    acc = fitnesses[0]
    for k in range(n):
        p = start + k * step
        while acc <= p and i < len(fitnesses) - 1:
            i += 1
            acc += fitnesses[i]
        out.append(i)
    return out


def two_point_crossover(a: str, b: str, rng: random.Random) -> tuple[str, str]:
    """Exchange the block span ``[i, j)`` between two genomes.

    Cut points are shared, so identical parents yield identical children and
    the total block count is conserved; lengths move when ``j`` passes the
    end of the shorter parent.
    """
    ba, bb = split_blocks(a), split_blocks(b)
    if not ba or not bb:
        raise GenomeError("crossover needs parents with at least one block")
    i = rng.randint(0, min(len(ba), len(bb)))
    j = rng.randint(max(i, 1), max(len(ba), len(bb)))
    c1 = ba[:i] + bb[i:j] + ba[j:]
    c2 = bb[:i] + ba[i:j] + bb[j:]
    return join_blocks(c1), join_blocks(c2)


# -- mutation ----------------------------------------------------------------


def _restrictions_allow(p: Placement, lex: Lexicon, restrictions: Restrictions | None) -> bool:
    return restriction_for(p.gate, lex, restrictions).allows(p.wires)


def _replace_in_block(block: list[Placement], new: Placement, sampler: GateSampler, rng) -> tuple:
    """Put ``new`` into ``block``, evicting overlaps and refilling freed wires."""
    ws = set(new.wires)
    kept = [q for q in block if not ws & set(q.wires)]
    return sampler.fill(kept + [new], rng)


def mutate(text: str, cfg: GAConfig, sampler: GateSampler, rng: random.Random) -> str:
    """Per-gate Bernoulli(``cfg.mutation_rate``) replacement.

    ``structure-preserving`` swaps a gate for another on the same wire set;
    ``free`` places any admissible gate touching one of the old wires;
    ``block-replace`` redraws whole blocks with the same per-block rate.
    """
    rate = cfg.mutation_rate
    if rate == 0:
        return text
    lex = sampler.lex
    out = []
    changed = False
    for seg in split_blocks(text):
        if cfg.mutation_kind == "block-replace":
            if rng.random() < rate:
                seg = block_text(sampler.random_block(rng), lex)
                changed = True
            out.append(seg)
            continue
        block = block_placements(seg, lex)
        for p in list(block):
            if p not in block or rng.random() >= rate:
                continue
            if cfg.mutation_kind == "structure-preserving":
                cands = sampler.same_wires(p.wires)
                if not cands:
                    continue
                q = cands[rng.randrange(len(cands))]
                block[block.index(p)] = q
            else:
                anchor = p.wires[rng.randrange(len(p.wires))]
                cands = sampler.candidates(anchor, frozenset(range(lex.n_wires)))
                q = cands[rng.randrange(len(cands))]
                block = list(_replace_in_block(block, q, sampler, rng))
            changed = True
        out.append(block_text(complete_block(block, lex), lex))
    return join_blocks(out) if changed else text


def wgs_mutate(text: str, eigs: Eigs, sampler: GateSampler, rng: random.Random) -> str:
    """Replace the gate at one random position with a gfitness-weighted EIGS draw.

    An empty EIGS degrades to a uniform choice over the sampler's pool.
    """
    lex = sampler.lex
    blocks = [block_placements(seg, lex) for seg in split_blocks(text)]
    bi = rng.randrange(len(blocks))
    block = blocks[bi]
    p = block[rng.randrange(len(block))]
    anchor = p.wires[rng.randrange(len(p.wires))]
    full = frozenset(range(lex.n_wires))

    def options(gid: str) -> list[Placement]:
        return [
            Placement(gid, w)
            for w in lex.placements_of(gid)
            if anchor in w and sampler.allows(Placement(gid, w))
        ]

    if len(eigs):
        e = eigs.draw(rng, lambda e: bool(options(e.gate.id)))
        if e is None:
            log.debug("WGS: no admissible EIGS gate for wire %d; skipped", anchor)
            return text
        opts = options(e.gate.id)
    else:
        opts = sampler.candidates(anchor, full)
    q = opts[rng.randrange(len(opts))]
    blocks[bi] = list(_replace_in_block(block, q, sampler, rng))
    return join_blocks([block_text(complete_block(b, lex), lex) for b in blocks])


# -- the run -----------------------------------------------------------------


def _merged_restriction(g: GateDef, restrictions: dict) -> WireRestriction:
    allowed = None
    for src in g.sources:
        r = restrictions.get(src)
        if r is None or r.allowed is None:
            continue
        allowed = r.allowed if allowed is None else allowed & r.allowed
    if allowed is not None and not allowed:
        return WireRestriction()
    return WireRestriction(allowed)


def pool_lexicon(pool: Sequence[str], n_wires: int, radix: int) -> Lexicon:
    """Lexicon holding just ``pool`` (plus Wire), tokens in pool order."""
    wire = "Wire" if radix == 3 else "Wire2"
    try:
        gates = [get_gate(g) for g in dict.fromkeys([*pool, wire])]
    except CatalogError as e:
        raise ConfigError(str(e)) from None
    return Lexicon(gates, n_wires, radix)


class _Engine:
    def __init__(self, cfg: GAConfig, target: TargetSpec, lex: Lexicon | None):
        cfg.validate()
        self.cfg = cfg
        self.target = target
        if lex is None:
            lex = pool_lexicon(cfg.pool, target.n_wires, target.radix)
        missing = [g for g in cfg.pool if g not in lex.gates]
        if missing:
            raise ConfigError(f"pool gates unavailable for this register: {missing}")
        unknown = [g for g in cfg.restrictions if g not in lex.gates]
        if unknown:
            raise ConfigError(f"restrictions name unknown gates: {unknown}")
        if cfg.mode == "lamarckian":
            lex.merged_cap = max(0, cfg.eigs_cap - len(cfg.pool))
        self.lex = lex
        self.restrictions = dict(cfg.restrictions)
        self.sampler = GateSampler(lex, cfg.pool, self.restrictions)
        for w in range(lex.n_wires):
            if not self.sampler.candidates(w, frozenset(range(lex.n_wires))):
                raise ConfigError(f"no pool gate may occupy wire {w} under the restrictions")
        self.evaluator = Evaluator(target, lex, cfg.fitness)
        self.rng = random.Random(cfg.rng_seed)
        self.eigs = Eigs(cfg.eigs_cap)
        self.cache: dict[str, tuple[str, Evaluation]] = {}
        self.suppressed = 0
        self._known = len(lex.gates)
        self._gate_token: dict[str, str] = {}

    # evaluation -------------------------------------------------------------

    def _sync_lexicon(self) -> None:
        """Make gates registered by minimization available to mutation."""
        if len(self.lex.gates) == self._known:
            return
        for gid in list(self.lex.gates)[self._known :]:
            g = self.lex.gates[gid]
            self.restrictions[gid] = _merged_restriction(g, self.restrictions)
            self.sampler.restrictions[gid] = self.restrictions[gid]
            self.sampler.add(gid)
        self._known = len(self.lex.gates)

    def _minimized(self, text: str) -> tuple[str, Evaluation]:
        mode = self.cfg.mode
        c = decode(text, self.lex)
        res = minimize(c, self.lex, mode, drop_idle=self.cfg.drop_idle)
        self.suppressed += res.suppressed
        if mode == "lamarckian":
            self._sync_lexicon()
            new = encode(res.phenotype, self.lex)
            return new, self.evaluator.score(new)
        # baldwinian: same function, cost read off the private phenotype
        ev = self.evaluator.score(text)
        cost = sum(self.evaluator.gate_cost(res.lexicon.gates[p.gate]) for p in res.phenotype.placements())
        prim = sum(self.evaluator.primitive_gate_cost(res.lexicon.gates[p.gate]) for p in res.phenotype.placements())
        return text, self.evaluator.with_cost(ev, cost, prim)

    def evaluate(self, texts: list[str]) -> list[Individual]:
        cfg = self.cfg
        out: list[Individual | None] = [None] * len(texts)
        if cfg.mode == "classical":
            todo = sorted({t for t in texts if t not in self.cache})
            if cfg.workers > 1 and len(todo) > 1:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    evs = list(pool.map(self.evaluator.score, todo))
            else:
                evs = [self.evaluator.score(t) for t in todo]
            for t, ev in zip(todo, evs):
                self.cache[t] = (t, ev)
        for i, t in enumerate(texts):
            hit = self.cache.get(t)
            if hit is None:
                hit = self._minimized(t)
                self.cache[t] = hit
                self.cache.setdefault(hit[0], hit)
            new, ev = hit
            out[i] = Individual(new, ev)
            if cfg.mode == "lamarckian":
                self._feed_eigs(new, ev)
        return out

    def _feed_eigs(self, text: str, ev: Evaluation) -> None:
        lex = self.lex
        gates = []
        for seg in text.split(DELIM):
            for k in range(0, len(seg), 3):
                gid = lex.entry(seg[k : k + 3]).gate
                tok = self._gate_token.get(gid)
                if tok is None:
                    # a gate is named by the token of its first placement
                    tok = self._gate_token[gid] = lex.token(Placement(gid, lex.placements_of(gid)[0]))
                gates.append((lex.gates[gid], tok))
        self.eigs.update(gates, ev.fitness)

    # operators --------------------------------------------------------------

    def offspring(self, parents: list[Individual]) -> list[str]:
        cfg, rng = self.cfg, self.rng
        texts = [p.genome for p in parents]
        rng.shuffle(texts)
        kids = []
        for k in range(0, len(texts) - 1, 2):
            a, b = texts[k], texts[k + 1]
            if rng.random() < cfg.crossover_rate:
                a, b = two_point_crossover(a, b, rng)
            kids += [a, b]
        if len(texts) % 2:
            kids.append(texts[-1])
        return [self.mutate(t) for t in kids]

    def mutate(self, text: str) -> str:
        cfg = self.cfg
        if cfg.mode == "lamarckian" and cfg.use_wgs:
            n_gates = sum(len(seg) // 3 for seg in text.split(DELIM))
            hits = sum(self.rng.random() < cfg.mutation_rate for _ in range(n_gates))
            for _ in range(hits):
                text = wgs_mutate(text, self.eigs, self.sampler, self.rng)
            return text
        return mutate(text, cfg, self.sampler, self.rng)

    # main loop --------------------------------------------------------------

    def initial(self) -> list[str]:
        cfg = self.cfg
        texts = []
        for s in cfg.seed_genomes:
            check_grammar(s)
            decode(s, self.lex)
            texts.append(s)
        while len(texts) < cfg.population_size:
            n = self.rng.randint(*cfg.block_range)
            texts.append(join_blocks([block_text(self.sampler.random_block(self.rng), self.lex) for _ in range(n)]))
        return texts

    def run(self) -> RunReport:
        cfg = self.cfg
        pop = self.evaluate(self.initial())
        gen = 0
        best = _best(pop)
        while not best.eval.correct and gen < cfg.max_generations:
            gen += 1
            elite = sorted(pop, key=_rank_key, reverse=True)[: cfg.elitism]
            idx = sus_select([ind.eval.fitness for ind in pop], cfg.population_size - len(elite), self.rng)
            kids = self.evaluate(self.offspring([pop[i] for i in idx]))
            for ind in kids:
                ind.age = gen
            pop = elite + kids
            best = _best(pop)
        return RunReport(
            success=best.eval.correct,
            generations_used=gen,
            best=best,
            config=cfg,
            target_name=self.target.name or self.target.kind,
            eigs=self.eigs.snapshot(),
            eigs_refused=list(self.eigs.refused),
            merged_gates=self.lex.n_merged,
            suppressed_merges=self.suppressed,
        )


def _rank_key(ind: Individual):
    return (ind.eval.correctness, ind.eval.fitness)


def _best(pop: list[Individual]) -> Individual:
    # first maximal individual, so ties resolve by population order
    best = pop[0]
    for ind in pop[1:]:
        if _rank_key(ind) > _rank_key(best):
            best = ind
    return best


def run(cfg: GAConfig, target: TargetSpec, lex: Lexicon | None = None) -> RunReport:
    """Evolve until a 100%-correct individual appears or generations run out."""
    return _Engine(cfg, target, lex).run()


def with_seed(cfg: GAConfig, seed: int) -> GAConfig:
    return replace(cfg, rng_seed=seed)
