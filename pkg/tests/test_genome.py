import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqls.gates import PRIMITIVE_SET, WireRestriction
from eqls.genome import (
    ALPHABET,
    DELIM,
    Genome,
    GateSampler,
    GenomeError,
    Lexicon,
    Placement,
    StructuralError,
    decode,
    encode,
    identity_block,
    make_circuit,
    random_genome,
    read_genomes,
    split_blocks,
    validate_restrictions,
    write_genomes,
)
from eqls.minimize import minimize

LEX3 = Lexicon.builtin(3)
H3_ON_2 = {"H3": WireRestriction(frozenset({2}))}


def test_alphabet_excludes_delimiter_and_space():
    assert DELIM not in ALPHABET and " " not in ALPHABET


def test_tokens_are_a_bijection():
    toks = [LEX3.token(LEX3.entry(t)) for t in LEX3._entry]
    assert len(set(toks)) == len(toks) == len(LEX3)
    assert len({LEX3.entry(t) for t in toks}) == len(toks)


def test_first_tokens_are_wire():
    assert LEX3.entry("!!!") == Placement("Wire", (0,))
    assert LEX3.entry('"!!') == Placement("Wire", (1,))


def test_pp_is_identity():
    c = decode("pp", LEX3)
    assert c.blocks == (identity_block(LEX3),)


def test_illustrative_string_shape():
    text = 'p!!!#!!pp$!!pp"!!!!!!!!pp'
    assert [len(b) // 3 for b in split_blocks(text)] == [2, 1, 3]
    # shape only: this lexicon's tokens put Wire(0) twice in the last block
    with pytest.raises(StructuralError):
        decode(text, LEX3)


def test_unknown_token_reports_offset():
    with pytest.raises(GenomeError, match="offset 1"):
        decode("p~~~p", Lexicon.builtin(1))


@pytest.mark.parametrize("text", ["", "p", "!!!", "p!!", "p!!!", "p!!!!p"])
def test_grammar_errors(text):
    with pytest.raises(GenomeError):
        decode(text, LEX3)


def test_partial_block_strict_is_structural_error():
    tok = LEX3.token(Placement("CNOT3", (0, 1)))
    assert decode(f"p{tok}p", LEX3).blocks[0][-1] == Placement("Wire", (2,))
    with pytest.raises(StructuralError):
        decode(f"p{tok}p", LEX3, strict=True)


def test_overlap_is_structural_error():
    a = LEX3.token(Placement("CNOT3", (0, 1)))
    b = LEX3.token(Placement("H3", (1,)))
    with pytest.raises(StructuralError):
        decode(f"p{a}{b}p", LEX3)


def test_identity_encoding():
    c = make_circuit([[]], LEX3)
    wire = "".join(LEX3.token(Placement("Wire", (w,))) for w in range(3))
    assert encode(c, LEX3) == f"p{wire}p"


def test_encode_unregistered_placement():
    lex = Lexicon.builtin(3)
    c = make_circuit([[("CNOT3", (0, 1))]], lex)
    other = Lexicon([lex.gates["Wire"]], 3, 3)
    with pytest.raises(GenomeError):
        encode(c, other)


def test_minimized_swap_encodes_differently():
    lex = Lexicon.builtin(2)
    c = make_circuit([[("CNOT3", (0, 1))], [("CNOT3", (1, 0))], [("CNOT3", (0, 1))]], lex)
    res = minimize(c, lex)
    assert encode(res.phenotype, lex) != encode(c, lex)


def test_validate_restrictions_examples():
    lex = LEX3
    r = {"[0-2]": WireRestriction(frozenset({2}))}
    assert validate_restrictions(make_circuit([[("[0-2]", (2,))]], lex), lex, r)
    assert not validate_restrictions(make_circuit([[("[0-2]", (0,))]], lex), lex, r)
    assert validate_restrictions(make_circuit([[("CNOT3", (2, 0))]], lex), lex, r)


def test_random_genome_wire_only_is_identity():
    g = random_genome(LEX3, (1, 1), random.Random(0), pool=["Wire"])
    assert decode(g, LEX3).blocks == (identity_block(LEX3),)


def test_random_genomes_respect_restrictions():
    rng = random.Random(5)
    sampler = GateSampler(LEX3, PRIMITIVE_SET, H3_ON_2)
    for _ in range(1000):
        c = decode(random_genome(LEX3, (1, 6), rng, sampler=sampler), LEX3)
        assert validate_restrictions(c, LEX3, H3_ON_2)
        assert all(p.wires == (2,) for p in c.placements() if p.gate == "H3")


def test_impossible_restrictions_raise():
    with pytest.raises(GenomeError):
        random_genome(LEX3, (1, 1), random.Random(0), pool=["H3"], restrictions=H3_ON_2)
    with pytest.raises(ValueError):
        random_genome(LEX3, (3, 1), random.Random(0))


def test_genome_file_round_trip(tmp_path):
    gs = [Genome("pp", 3, 3), Genome(random_genome(LEX3, (2, 4), random.Random(1)), 3, 3)]
    write_genomes(tmp_path / "g.txt", gs)
    assert read_genomes(tmp_path / "g.txt") == gs


def test_overlay_keeps_parent_untouched():
    lex = Lexicon.builtin(2)
    child = lex.overlay()
    g = lex.gates["CNOT3"]
    child.register(replace(g, id="M0", sources=("CNOT3", "CNOT3")))
    assert "M0" in child.gates and "M0" not in lex.gates
    assert len(child) > len(lex)


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_decode_encode_round_trip(seed, n_wires):
    lex = Lexicon.builtin(n_wires)
    text = random_genome(lex, (1, 8), random.Random(seed))
    c = decode(text, lex)
    assert encode(c, lex) == text
    assert decode(encode(c, lex), lex) == c
