"""Dense complex matrices: products, Kronecker products, comparisons.

Matrices are plain ``numpy`` arrays of ``complex128`` in row-major order.
Arrays returned from this module are read-only so they can be shared between
concurrent evaluators.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels

DEFAULT_EPS = 1e-9


class ShapeError(ValueError):
    """Raised when matrix dimensions are incompatible with an operation."""


@dataclass(frozen=True)
class Tolerance:
    abs_eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not self.abs_eps >= 0:
            raise ValueError(f"abs_eps must be nonnegative, got {self.abs_eps}")


DEFAULT_TOL = Tolerance()


def as_matrix(data) -> np.ndarray:
    """Copy ``data`` into a frozen, C-contiguous complex128 2-D array."""
    m = np.array(data, dtype=np.complex128, order="C", copy=True)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    m.flags.writeable = False
    return m


def _c(m) -> np.ndarray:
    return np.ascontiguousarray(m, dtype=np.complex128)


def _freeze(m: np.ndarray) -> np.ndarray:
    m.flags.writeable = False
    return m


def identity(n: int) -> np.ndarray:
    return _freeze(np.eye(n, dtype=np.complex128))


def matmul(a, b) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return _freeze(kernels.matmul(_c(a), _c(b)))


def matmul_chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Left-to-right product ``mats[0] @ mats[1] @ ...``."""
    if not mats:
        raise ShapeError("empty product")
    out = mats[0]
    for m in mats[1:]:
        out = matmul(out, m)
    return out


def batch_matmul(pairs: Iterable[tuple[np.ndarray, np.ndarray]], workers: int = 1) -> list[np.ndarray]:
    """Multiply independent pairs, optionally on a thread pool.

    The compiled kernel releases the GIL, so threads give real overlap there.
    Output order follows input order regardless of ``workers``.
    """
    pairs = list(pairs)
    if workers <= 1:
        return [matmul(a, b) for a, b in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: matmul(*ab), pairs))


def kron(a, b) -> np.ndarray:
    if a.size == 0 or b.size == 0:
        raise ShapeError("kron of an empty matrix")
    return _freeze(kernels.kron(_c(a), _c(b)))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def dagger(m) -> np.ndarray:
    return _freeze(np.ascontiguousarray(np.conj(m).T))


def is_unitary(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"unitarity needs a square matrix, got {m.shape}")
    dev = matmul(dagger(m), m) - np.eye(m.shape[0])
    return bool(np.max(np.abs(dev)) <= tol.abs_eps)


def approx_equal(a, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare {a.shape} with {b.shape}")
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol.abs_eps)


# -- fixture files -----------------------------------------------------------
# First line "rows cols", then one line per row of "re+imj" entries.


def format_entry(z: complex) -> str:
    return f"{z.real!r}{z.imag:+}j"


def write_fixture(path, m) -> None:
    rows, cols = m.shape
    lines = [f"{rows} {cols}"]
    lines += [" ".join(format_entry(complex(z)) for z in row) for row in np.asarray(m)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_fixture(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix fixture")
    try:
        rows, cols = (int(x) for x in lines[0].split())
    except ValueError:
        raise ValueError(f"bad fixture header {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"fixture declares {rows} rows, found {len(body)}")
    data = []
    for n, line in enumerate(body, start=2):
        entries = [complex(tok) for tok in line.split()]
        if len(entries) != cols:
            raise ValueError(f"line {n}: expected {cols} entries, found {len(entries)}")
        data.append(entries)
    return as_matrix(data)


def read_fixture(path) -> np.ndarray:
    return parse_fixture(Path(path).read_text())
