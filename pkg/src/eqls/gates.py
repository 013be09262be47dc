"""Gate catalog: binary gates, ternary permutations, embedded Boolean gates.

Wire 0 is the most significant digit of a basis index.  For controlled
gates the first wire of a placement is the control.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .tensor import DEFAULT_TOL, ShapeError, as_matrix, is_unitary, kron

SQ2 = 1 / np.sqrt(2)


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class WireRestriction:
    """Wires a gate may touch; ``None`` means any wire."""

    allowed: frozenset[int] | None = None

    def __post_init__(self):
        if self.allowed is not None and not self.allowed:
            raise CatalogError("a restriction must allow at least one wire")

    def allows(self, wires: Iterable[int]) -> bool:
        return self.allowed is None or set(wires) <= self.allowed

    def __str__(self):
        if self.allowed is None:
            return "any"
        return ",".join(str(w) for w in sorted(self.allowed))

    @classmethod
    def parse(cls, text: str) -> "WireRestriction":
        text = text.strip()
        if text in ("", "any", "*"):
            return cls()
        return cls(frozenset(int(w) for w in text.split(",")))


ANY_WIRE = WireRestriction()


@dataclass(frozen=True)
class CostModel:
    two_wire_cost: int = 1
    single_wire_cost: int = 0


DEFAULT_COST = CostModel()


@dataclass(frozen=True, eq=False)
class GateDef:
    id: str
    name: str
    radix: int
    arity: int
    matrix: np.ndarray = field(repr=False)
    cost: int
    restriction: WireRestriction = ANY_WIRE
    # cost counted in primitive gates; differs from ``cost`` for merged gates
    raw_cost: int | None = None
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        dim = self.radix**self.arity
        if self.matrix.shape != (dim, dim):
            raise CatalogError(f"{self.id}: matrix {self.matrix.shape} != radix^arity = {dim}")
        if self.raw_cost is None:
            object.__setattr__(self, "raw_cost", self.cost)

    @property
    def merged(self) -> bool:
        return bool(self.sources)

    def with_restriction(self, restriction: WireRestriction) -> "GateDef":
        return replace(self, restriction=restriction)


def gate_cost(g: GateDef, model: CostModel = DEFAULT_COST) -> int:
    if g.arity == 1:
        return model.single_wire_cost
    if g.arity == 2:
        return model.two_wire_cost
    return g.cost


# -- matrix helpers ----------------------------------------------------------


def ket_bra(i: int, j: int, radix: int) -> np.ndarray:
    m = np.zeros((radix, radix), dtype=np.complex128)
    m[i, j] = 1
    return m


def level_swap(a: int, b: int, radix: int = 3) -> np.ndarray:
    m = np.eye(radix, dtype=np.complex128)
    m[[a, b]] = m[[b, a]]
    return m


def controlled(target: np.ndarray, radix: int, control_value: int = 1) -> np.ndarray:
    """Projector sum: identity unless the control wire holds ``control_value``."""
    idle = sum(ket_bra(v, v, radix) for v in range(radix) if v != control_value)
    eye = np.eye(target.shape[0], dtype=np.complex128)
    return kron(idle, eye) + kron(ket_bra(control_value, control_value, radix), target)


def _digits(n_wires: int, radix: int) -> np.ndarray:
    """Row ``i`` holds the base-``radix`` digits of ``i``, wire 0 first."""
    return np.array(list(itertools.product(range(radix), repeat=n_wires)), dtype=np.intp).reshape(-1, n_wires)


def _make(gid, name, radix, arity, m, cost=None, **kw) -> GateDef:
    m = as_matrix(m)
    if cost is None:
        cost = 0 if arity == 1 else 1
    return GateDef(gid, name, radix, arity, m, cost, **kw)


# -- embedding and expansion -------------------------------------------------


def embed_boolean(g: GateDef, gid: str | None = None, name: str | None = None) -> GateDef:
    """Lift a qubit gate to qutrits: acts as ``g`` on Boolean words, identity otherwise."""
    if g.radix != 2:
        raise CatalogError(f"{g.id} is not a binary gate")
    if not is_unitary(g.matrix, DEFAULT_TOL):
        raise CatalogError(f"{g.id} is not unitary")
    digits = _digits(g.arity, 3)
    boolean = np.all(digits < 2, axis=1)
    bidx = np.flatnonzero(boolean)
    # index of each Boolean ternary word inside the binary matrix
    sub = digits[bidx] @ (2 ** np.arange(g.arity - 1, -1, -1))
    m = np.eye(3**g.arity, dtype=np.complex128)
    m[np.ix_(bidx, bidx)] = g.matrix[np.ix_(sub, sub)]
    return _make(gid or f"{g.id}3", name or f"{g.name}^3", 3, g.arity, m, cost=g.cost)


def expand_to_circuit_width(g: GateDef, placement: Sequence[int], n_wires: int) -> np.ndarray:
    """Matrix of ``g`` acting on ``placement`` inside an ``n_wires`` register."""
    placement = tuple(placement)
    if len(placement) != g.arity:
        raise ShapeError(f"{g.id} spans {g.arity} wires, placement has {len(placement)}")
    if len(set(placement)) != len(placement):
        raise ShapeError(f"duplicate wires in placement {placement}")
    if any(w < 0 or w >= n_wires for w in placement):
        raise ShapeError(f"placement {placement} outside 0..{n_wires - 1}")
    return _expand(g.matrix.tobytes(), g.radix, g.arity, placement, n_wires)


@lru_cache(maxsize=4096)
def _expand(mbytes: bytes, radix: int, arity: int, placement: tuple, n_wires: int) -> np.ndarray:
    dim = radix**arity
    gm = np.frombuffer(mbytes, dtype=np.complex128).reshape(dim, dim)
    digits = _digits(n_wires, radix)
    rest = [w for w in range(n_wires) if w not in placement]
    sub = digits[:, placement] @ (radix ** np.arange(arity - 1, -1, -1))
    key = digits[:, rest] @ (radix ** np.arange(len(rest) - 1, -1, -1)) if rest else np.zeros(len(digits), int)
    m = gm[sub[:, None], sub[None, :]] * (key[:, None] == key[None, :])
    m = np.ascontiguousarray(m)
    m.flags.writeable = False
    return m


# -- the catalog -------------------------------------------------------------

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])
H = SQ2 * np.array([[1, 1], [1, -1]])
SWAP = np.eye(4)[[0, 2, 1, 3]]
MILLER = np.eye(8)[[0, 6, 2, 3, 4, 5, 1, 7]]

P02 = level_swap(0, 2)
P12 = level_swap(1, 2)
P01 = level_swap(0, 1)


def _ternary_swap() -> np.ndarray:
    m = np.zeros((9, 9), dtype=np.complex128)
    for a, b in itertools.product(range(3), repeat=2):
        m[3 * b + a, 3 * a + b] = 1
    return m


# primitive set the synthesis runs draw from by default
PRIMITIVE_SET = ("CNOT3", "CZ3", "[0-2]", "[1-2]", "CH3", "C[0-2]", "C[0-1]", "H3", "Wire")
# gates the Toffoli/majority restriction confines to the target wire
SINGLE_QUTRIT_RESTRICTED = ("[0-2]", "[1-2]", "H3")


def builtin_catalog() -> list[GateDef]:
    binary = [
        _make("Wire2", "Wire (binary)", 2, 1, I2),
        _make("X", "NOT", 2, 1, X),
        _make("Z", "Z", 2, 1, Z),
        _make("H", "Hadamard", 2, 1, H),
        _make("CNOT", "CNOT", 2, 2, controlled(X, 2)),
        _make("CZ", "Controlled-Z", 2, 2, controlled(Z, 2)),
        _make("CH", "Controlled-H", 2, 2, controlled(H, 2)),
        _make("SWAP", "SWAP", 2, 2, SWAP),
        # three-wire Boolean costs: best known Boolean realizations
        _make("Toffoli", "Toffoli (CCNOT)", 2, 3, controlled(controlled(X, 2), 2), cost=5),
        _make("Fredkin", "Fredkin (CSWAP)", 2, 3, controlled(SWAP, 2), cost=7),
        _make("Miller", "Miller", 2, 3, MILLER, cost=9),
    ]
    by_id = {g.id: g for g in binary}

    ternary = [
        _make("Wire", "Wire", 3, 1, np.eye(3)),
        _make("[0-2]", "[0-2]", 3, 1, P02),
        _make("[1-2]", "[1-2]", 3, 1, P12),
        _make("[0-1]", "[0-1]", 3, 1, P01),
        embed_boolean(by_id["Z"], "Z3", "Z^3"),
        embed_boolean(by_id["H"], "H3", "Hadamard^3"),
        _make("CZ3", "Controlled-Z^3", 3, 2, controlled(np.diag([1, -1, 1]), 3)),
        embed_boolean(by_id["CNOT"], "CNOT3", "CNOT^3"),
        embed_boolean(by_id["CH"], "CH3", "Controlled-H^3"),
        _make("C1X3", "Controlled-X on |1> (labeled SWAP^3)", 3, 2, controlled(P01, 3)),
        embed_boolean(by_id["SWAP"], "SWAP3", "SWAP^3"),
        _make("C[0-2]", "Controlled-[0-2]", 3, 2, controlled(P02, 3)),
        _make("C[0-1]", "Controlled-[0-1]", 3, 2, controlled(P01, 3)),
        _make("C[1-2]", "Controlled-[1-2]", 3, 2, controlled(P12, 3)),
        _make("S3", "Ternary SWAP S_3", 3, 2, _ternary_swap()),
        # don't-care block for control |1> instantiated as identity
        _make("CS12", "Controlled-S_3 on |2>", 3, 3, controlled(_ternary_swap(), 3, control_value=2), cost=1),
        embed_boolean(by_id["Toffoli"], "Toffoli3", "Toffoli^3"),
        embed_boolean(by_id["Fredkin"], "Fredkin3", "Fredkin^3"),
        embed_boolean(by_id["Miller"], "Miller3", "Miller^3"),
    ]
    return binary + ternary


@lru_cache(maxsize=1)
def _catalog_index() -> dict[str, GateDef]:
    return {g.id: g for g in builtin_catalog()}


def get_gate(gid: str) -> GateDef:
    try:
        return _catalog_index()[gid]
    except KeyError:
        raise CatalogError(f"unknown gate {gid!r}") from None


def catalog_listing(gates: Iterable[GateDef] | None = None) -> str:
    """Tab-separated listing: id, name, arity, radix, cost, restriction."""
    gates = builtin_catalog() if gates is None else gates
    rows = ["id\tname\tarity\tradix\tcost\trestriction"]
    rows += [f"{g.id}\t{g.name}\t{g.arity}\t{g.radix}\t{g.cost}\t{g.restriction}" for g in gates]
    return "\n".join(rows)
