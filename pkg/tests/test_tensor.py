from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqls.gates import H, P02, X, Z
from eqls.tensor import (
    DEFAULT_TOL,
    ShapeError,
    Tolerance,
    approx_equal,
    batch_matmul,
    dagger,
    identity,
    is_unitary,
    kron,
    matmul,
    matmul_chain,
    parse_fixture,
    read_fixture,
    write_fixture,
)

FIXTURES = Path(__file__).parent / "fixtures"


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_hadamard_and_z_are_involutions():
    assert approx_equal(matmul(H, H), np.eye(2))
    assert approx_equal(matmul(Z, Z), np.eye(2))


def test_hzh_is_x():
    assert approx_equal(matmul_chain([H, Z, H]), X)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.eye(2), np.eye(3))


def test_kron_identity_and_shape():
    assert approx_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert kron(np.ones((3, 3)), np.ones((3, 3))).shape == (9, 9)


def test_kron_matches_frozen_loop_oracle():
    assert approx_equal(kron(P02, np.eye(3)), read_fixture(FIXTURES / "kron_p02_i3.txt"), Tolerance(0.0))


def test_kron_empty_rejected():
    with pytest.raises(ShapeError):
        kron(np.zeros((0, 2)), np.eye(2))


def test_is_unitary_examples():
    h3 = np.eye(3, dtype=complex)
    h3[:2, :2] = H
    assert is_unitary(np.eye(3))
    assert is_unitary(h3)
    m = np.eye(3)
    m[1] = 0
    assert not is_unitary(m)
    with pytest.raises(ShapeError):
        is_unitary(np.ones((2, 3)))


def test_approx_equal_examples():
    m = np.arange(4).reshape(2, 2)
    assert approx_equal(m, m)
    assert not approx_equal(np.eye(2), X)
    with pytest.raises(ShapeError):
        approx_equal(np.eye(2), np.eye(3))


def test_tolerance_rejects_negative():
    with pytest.raises(ValueError):
        Tolerance(-1.0)


def test_results_are_read_only():
    m = matmul(np.eye(2), X)
    with pytest.raises(ValueError):
        m[0, 0] = 5
    assert not identity(3).flags.writeable


def test_batch_matmul_matches_serial():
    rng = np.random.default_rng(3)
    pairs = [(random_unitary(9, rng), random_unitary(9, rng)) for _ in range(12)]
    serial = batch_matmul(pairs, workers=1)
    threaded = batch_matmul(pairs, workers=4)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a, b)


def test_fixture_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    m = random_unitary(3, rng)
    write_fixture(tmp_path / "m.txt", m)
    assert np.array_equal(read_fixture(tmp_path / "m.txt"), m)


@pytest.mark.parametrize(
    "text",
    ["", "2 2\n1+0j 0j\n", "2 2\n1+0j\n0j 1+0j\n", "x y\n"],
)
def test_bad_fixtures(text):
    with pytest.raises(ValueError):
        parse_fixture(text)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_kron_associative(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3))
    assert approx_equal(kron(kron(a, b), c), kron(a, kron(b, c)), Tolerance(1e-9))


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_mixed_product(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c, d = (random_unitary(n, rng) for _ in range(4))
    assert approx_equal(matmul(kron(a, b), kron(c, d)), kron(matmul(a, c), matmul(b, d)), DEFAULT_TOL)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_unitary_closed_under_products(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_unitary(n, rng), random_unitary(n, rng)
    assert is_unitary(matmul(a, b))
    assert is_unitary(kron(a, b))
    assert is_unitary(dagger(a))
