"""numpy implementations of the compiled kernels, used when the extension is absent."""
import numpy as np


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def kron(a, b):
    return np.kron(a, b)


def apply_chain(blocks, state):
    """Return ``blocks[-1] @ ... @ blocks[0] @ state``."""
    out = np.array(state, dtype=np.complex128, copy=True)
    for m in blocks:
        if m.shape != (out.shape[0], out.shape[0]):
            raise ValueError(f"block shape {m.shape} does not act on dimension {out.shape[0]}")
        out = m @ out
    return out


def masked_probability(state, mask):
    if mask.shape != state.shape:
        raise ValueError("mask shape does not match state")
    return (mask * (state.real**2 + state.imag**2)).sum(axis=0)
