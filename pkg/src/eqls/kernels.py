"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``EQLS_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    BACKENDS["cython"] = _kernels

if _kernels is not None and not os.environ.get("EQLS_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
matmul = _impl.matmul
kron = _impl.kron
apply_chain = _impl.apply_chain
masked_probability = _impl.masked_probability


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        name = BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
