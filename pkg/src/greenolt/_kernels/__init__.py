"""Hot-loop kernels: compiled extension when available, pure Python otherwise.

The cycle simulator and the Monte-Carlo chain walk are strictly sequential,
so they cannot be vectorized away; the Cython build makes million-cycle runs
near-instant. Both backends implement identical integer semantics and return
bit-identical results. Set ``GREENOLT_PURE=1`` to force the fallback (used by
the benchmark).
"""

import os

from . import _pure

if os.environ.get("GREENOLT_PURE"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _speed as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"

simulate_cycles = _impl.simulate_cycles
chain_walk = _impl.chain_walk


def backend() -> str:
    """Name of the kernel backend in use: ``cython`` or ``python``."""
    return BACKEND
