import cmath
import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqls.bench import TS_02, TS_12, _with_h, toffoli_fn, toffoli_variant_fn
from eqls.evaluate import (
    Evaluator,
    FitnessParams,
    TargetError,
    TargetSpec,
    boolean_error,
    circuit_cost,
    circuit_matrix,
    correctness,
    fitness,
    format_target,
    parse_target,
    read_target,
    truth_table_target,
    unitary_target,
)
from eqls.gates import P02, PRIMITIVE_SET, get_gate
from eqls.genome import Lexicon, decode, make_circuit, random_genome
from eqls.tensor import ShapeError, approx_equal

LEX1 = Lexicon.builtin(1)
LEX2 = Lexicon.builtin(2)
LEX3 = Lexicon.builtin(3)
TOFFOLI = truth_table_target(toffoli_fn, 3)
IDENTITY3 = make_circuit([[]], LEX3)


def test_single_block_matrix():
    assert approx_equal(circuit_matrix(make_circuit([[("[0-2]", (0,))]], LEX1), LEX1), P02)


def test_h3_twice_is_identity():
    c = make_circuit([[("H3", (0,))], [("H3", (0,))]], LEX1)
    assert approx_equal(circuit_matrix(c, LEX1), np.eye(3))


def test_h_cz_h_is_cnot():
    c = make_circuit([[("H3", (1,))], [("CZ3", (0, 1))], [("H3", (1,))]], LEX2)
    assert approx_equal(circuit_matrix(c, LEX2), get_gate("CNOT3").matrix)


def test_construction_error_against_variant_is_zero():
    c = make_circuit(_with_h(TS_02), LEX3)
    variant = truth_table_target(toffoli_variant_fn, 3)
    assert boolean_error(c, variant, LEX3) == pytest.approx(0, abs=1e-12)
    assert correctness(c, variant, LEX3) == 100.0


def test_construction_with_12_matches_standard_toffoli():
    c = make_circuit(_with_h(TS_12), LEX3)
    assert correctness(c, TOFFOLI, LEX3) == 100.0
    assert boolean_error(c, TOFFOLI, LEX3) == pytest.approx(0, abs=1e-12)


def test_unitary_target_self_error_zero():
    c = make_circuit([[("CNOT3", (0, 2)), ("H3", (1,))], [("CZ3", (1, 2))]], LEX3)
    t = unitary_target(circuit_matrix(c, LEX3))
    ev = Evaluator(t, LEX3).score_circuit(c)
    assert ev.error == pytest.approx(0, abs=1e-12) and ev.correct


def test_identity_vs_toffoli_frozen():
    # independent brute-force oracle: 2 mismapped inputs, 6 of 8 correct
    assert boolean_error(IDENTITY3, TOFFOLI, LEX3) == 2.0
    assert correctness(IDENTITY3, TOFFOLI, LEX3) == 75.0


def test_width_mismatch():
    with pytest.raises(ShapeError):
        boolean_error(make_circuit([[]], LEX2), TOFFOLI, LEX3)
    with pytest.raises(ShapeError):
        Evaluator(TOFFOLI, LEX2)


def test_costs():
    c = make_circuit([[("CNOT3", (0, 1))], [("CNOT3", (1, 2))], [("CNOT3", (0, 2))]], LEX3)
    assert circuit_cost(c, LEX3) == 3
    assert circuit_cost(IDENTITY3, LEX3) == 0
    ev = Evaluator(TOFFOLI, LEX3).score_circuit(IDENTITY3)
    assert ev.circuit_cost == 0 and ev.cost == 1
    assert circuit_cost(make_circuit(_with_h(TS_02), LEX3), LEX3) == 3


def test_fitness_examples():
    f0 = FitnessParams(mode="f0")
    assert fitness(0, 1, f0) == 1.0
    assert fitness(1, 1, f0) == 0.5
    assert fitness(0, 10, FitnessParams(0.9, 0.1)) == pytest.approx(0.91, rel=1e-15)
    with pytest.raises(ValueError):
        fitness(0, 0, FitnessParams())


@pytest.mark.parametrize("a,b,mode", [(0.5, 0.6, "f1"), (-0.1, 1.1, "f1"), (0.9, 0.1, "f2")])
def test_fitness_params_invalid(a, b, mode):
    with pytest.raises(ValueError):
        FitnessParams(a, b, mode)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 50), st.floats(1e-6, 50), st.integers(1, 100), st.floats(0.01, 0.99))
def test_fitness_monotone(e1, gap, cost, alpha):
    p = FitnessParams(alpha, 1 - alpha)
    e2 = e1 + gap
    assert fitness(e1, cost, FitnessParams(mode="f0")) > fitness(e2, cost, FitnessParams(mode="f0"))
    assert fitness(e1, cost, p) > fitness(e2, cost, p)
    assert fitness(e1, cost, p) > fitness(e1, cost + 1, p)


def test_phase_insensitivity():
    rng = random.Random(2)
    ev = Evaluator(TOFFOLI, LEX3)
    for _ in range(10):
        blocks = [list(b) for b in decode(random_genome(LEX3, (1, 6), rng, pool=PRIMITIVE_SET), LEX3).blocks]
        pairs = [[(p.gate, p.wires) for p in b if p.gate != "Wire"] for b in blocks]
        c = make_circuit(pairs, LEX3)
        m = circuit_matrix(c, LEX3)
        for phi in (np.pi / 4, np.pi / 2, np.pi):
            t = unitary_target(m * cmath.exp(1j * phi))
            assert Evaluator(t, LEX3).score_circuit(c).error == pytest.approx(0, abs=1e-9)
        # diagonal phase gates after the circuit change no output probability
        phased = make_circuit(pairs + [[("Z3", (0,)), ("CZ3", (1, 2))]], LEX3)
        assert ev.score_circuit(phased).error == pytest.approx(ev.score_circuit(c).error, abs=1e-12)
        assert ev.score_circuit(phased).correctness == ev.score_circuit(c).correctness


def test_no_leakage_from_embedded_gates():
    rng = random.Random(3)
    pool = ["CNOT3", "CZ3", "CH3", "H3", "Wire"]
    boolean = [int("".join(map(str, w)), 3) for w in itertools.product((0, 1), repeat=3)]
    for _ in range(30):
        c = decode(random_genome(LEX3, (1, 8), rng, pool=pool), LEX3)
        m = circuit_matrix(c, LEX3)
        for j in boolean:
            assert np.sum(np.abs(m[boolean, j]) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_parallel_scores_match_serial():
    rng = random.Random(4)
    texts = [random_genome(LEX3, (2, 10), rng, pool=PRIMITIVE_SET) for _ in range(40)]
    ev = Evaluator(TOFFOLI, LEX3)
    assert ev.score_many(texts, workers=1) == Evaluator(TOFFOLI, LEX3).score_many(texts, workers=8)


def test_genome_and_circuit_scores_agree():
    rng = random.Random(6)
    ev = Evaluator(TOFFOLI, LEX3)
    for _ in range(20):
        t = random_genome(LEX3, (1, 6), rng, pool=PRIMITIVE_SET)
        a, b = ev.score(t), ev.score_circuit(decode(t, LEX3))
        assert a.error == pytest.approx(b.error, abs=1e-12)
        assert (a.cost, a.correctness) == (b.cost, b.correctness)


def test_partial_target_ignores_other_wires():
    t = truth_table_target(lambda x: (x[0] ^ x[1],), 3, outputs=(2,))
    c = make_circuit([[("CNOT3", (0, 2))], [("CNOT3", (1, 2))], [("H3", (0,))]], LEX3)
    t_in = truth_table_target(lambda x: (x[0], x[1], x[2] ^ x[0] ^ x[1]), 3, inputs=[(a, b, 0) for a in (0, 1) for b in (0, 1)])
    assert correctness(c, t_in, LEX3) < 100.0
    t2 = TargetSpec("partial-truth-table", 3, 3, table={(a, b, 0): (a ^ b,) for a in (0, 1) for b in (0, 1)}, outputs=(2,))
    assert correctness(c, t2, LEX3) == 100.0
    assert t.kind == "partial-truth-table"


def test_variants_take_best():
    t = TargetSpec("truth-table", 3, 3, table=TOFFOLI.table, variants=(truth_table_target(toffoli_variant_fn, 3),))
    c = make_circuit(_with_h(TS_02), LEX3)
    assert correctness(c, t, LEX3) == 100.0


def test_target_validation():
    with pytest.raises(TargetError):
        TargetSpec("unitary", 1, 3)
    with pytest.raises(TargetError):
        TargetSpec("unitary", 1, 3, unitary=np.ones((3, 3)))
    with pytest.raises(TargetError):
        TargetSpec("truth-table", 1, 3, table={(0,): (0,), (1,): (0,)})
    with pytest.raises(TargetError):
        TargetSpec("bogus", 1, 3)


def test_target_file_round_trip(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text(format_target(TOFFOLI))
    t = read_target(p)
    assert t.table == TOFFOLI.table and t.outputs == TOFFOLI.outputs
    u = unitary_target(get_gate("CNOT3").matrix)
    p.write_text(format_target(u))
    assert approx_equal(read_target(p).unitary, u.unitary)
    with pytest.raises(TargetError):
        parse_target("01 1x\n")
