import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqls.bench import SWAP_FROM_CNOTS
from eqls.evaluate import circuit_cost, circuit_matrix
from eqls.gates import PRIMITIVE_SET, get_gate
from eqls.genome import Lexicon, decode, encode, identity_block, make_circuit, random_genome
from eqls.minimize import cancel_adjacent_inverses, format_merge_events, merge_adjacent, minimize
from eqls.tensor import approx_equal


def gates_of(c, lex):
    return [p for p in c.placements() if p.gate != lex.wire_gate]


def test_h3_pair_cancels():
    lex = Lexicon.builtin(3)
    c = cancel_adjacent_inverses(make_circuit([[("H3", (2,))], [("H3", (2,))]], lex), lex)
    assert gates_of(c, lex) == []


def test_cnot_pair_cancels():
    lex = Lexicon.builtin(3)
    c = cancel_adjacent_inverses(make_circuit([[("CNOT3", (0, 1))], [("CNOT3", (0, 1))]], lex), lex)
    assert gates_of(c, lex) == []


def test_different_wires_untouched():
    lex = Lexicon.builtin(3)
    c = make_circuit([[("H3", (2,))], [("H3", (1,))]], lex)
    assert cancel_adjacent_inverses(c, lex) == c


def test_non_adjacent_pair_not_cancelled():
    lex = Lexicon.builtin(3)
    c = make_circuit([[("H3", (2,))], [("CNOT3", (0, 2))], [("H3", (2,))]], lex)
    assert cancel_adjacent_inverses(c, lex) == c


def test_swap_from_cnots_merges_to_one_gate():
    lex = Lexicon.builtin(2)
    c = make_circuit(SWAP_FROM_CNOTS, lex)
    res = minimize(c, lex)
    left = gates_of(res.phenotype, lex)
    assert len(left) == 1
    assert approx_equal(circuit_matrix(res.phenotype, lex), circuit_matrix(c, lex))
    assert approx_equal(circuit_matrix(res.phenotype, lex), get_gate("SWAP3").matrix)
    # the merged product equals a catalog gate, which is reused rather than registered
    assert left[0].gate == "SWAP3"
    assert res.genotype_action == "replace"


def test_cz_pair_becomes_identity():
    lex = Lexicon.builtin(3)
    c, events = merge_adjacent(make_circuit([[("CZ3", (0, 1))], [("CZ3", (0, 1))]], lex), lex)
    assert gates_of(c, lex) == []
    assert events and events[0].produced_gate is None


def test_merged_gate_registered_and_costed():
    lex = Lexicon.builtin(3)
    n = len(lex.gates)
    c = make_circuit([[("CH3", (0, 1))], [("CZ3", (1, 0))]], lex)
    res = minimize(c, lex)
    left = gates_of(res.phenotype, lex)
    assert len(left) == 1 and lex.gates[left[0].gate].merged
    assert len(lex.gates) == n + 1
    assert circuit_cost(res.phenotype, lex) == 1
    ev = res.events[-1]
    want = circuit_matrix(c, lex)
    assert approx_equal(circuit_matrix(res.phenotype, lex), want)
    assert ev.produced_gate is not None and ev.source_gates == ("CH3", "CZ3")
    assert format_merge_events(res.events, lex).count("\n") == len(res.events)


def test_baldwinian_leaves_lexicon_alone():
    lex = Lexicon.builtin(3)
    n = len(lex)
    c = make_circuit([[("CH3", (0, 1))], [("CZ3", (1, 0))]], lex)
    res = minimize(c, lex, "baldwinian")
    assert len(lex) == n and res.genotype_action == "keep"
    assert len(gates_of(res.phenotype, res.lexicon)) == 1


def test_off_returns_input():
    lex = Lexicon.builtin(3)
    c = make_circuit(SWAP_FROM_CNOTS, lex)
    res = minimize(c, lex, "off")
    assert res.phenotype == c and res.genotype_action == "none"
    with pytest.raises(ValueError):
        minimize(c, lex, "sometimes")


def test_cap_suppresses_registration():
    lex = Lexicon(Lexicon.builtin(3).gates.values(), 3, 3, merged_cap=0)
    c = make_circuit([[("CH3", (0, 1))], [("CZ3", (1, 0))]], lex)
    res = minimize(c, lex)
    assert res.suppressed >= 1
    assert res.phenotype == c


def test_idle_blocks_kept_unless_asked():
    lex = Lexicon.builtin(3)
    c = make_circuit([[("H3", (2,))], [("H3", (2,))], [("CNOT3", (0, 1))]], lex)
    assert len(minimize(c, lex).phenotype.blocks) == 3
    dropped = minimize(c, lex, drop_idle=True).phenotype
    assert len(dropped.blocks) == 1
    c = make_circuit([[("H3", (2,))], [("H3", (2,))]], lex)
    assert minimize(c, lex, drop_idle=True).phenotype.blocks == (identity_block(lex),)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_function_preserved_idempotent_cost_monotone(seed):
    lex = Lexicon.builtin(3)
    rng = random.Random(seed)
    c = decode(random_genome(lex, (1, 12), rng, pool=PRIMITIVE_SET), lex)
    res = minimize(c, lex)
    assert approx_equal(circuit_matrix(res.phenotype, lex), circuit_matrix(c, lex))
    assert circuit_cost(res.phenotype, lex) <= circuit_cost(c, lex)
    again = minimize(res.phenotype, lex)
    assert again.events == []
    assert encode(again.phenotype, lex) == encode(res.phenotype, lex)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_baldwinian_matches_lamarckian_function(seed):
    lex = Lexicon.builtin(3)
    c = decode(random_genome(lex, (1, 12), random.Random(seed), pool=PRIMITIVE_SET), lex)
    b = minimize(c, lex, "baldwinian")
    assert approx_equal(circuit_matrix(b.phenotype, b.lexicon), circuit_matrix(c, lex))
    assert np.isfinite(circuit_cost(b.phenotype, b.lexicon))
