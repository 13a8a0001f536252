"""Backend selection for the hot loops.

The compiled extension is used when it was built; setting the environment
variable ``NSBESOV_PURE_PYTHON=1`` forces the NumPy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_compiled = None
if os.environ.get("NSBESOV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def lattice_accumulate(target, vals, nodes, patch, offset) -> None:
    """See :func:`nsbesov._kernels._pykernels.lattice_accumulate`."""
    if not (target.flags.c_contiguous and target.dtype == np.complex128):
        raise ValueError("target must be a C-contiguous complex128 array")
    _impl.lattice_accumulate(
        target,
        np.ascontiguousarray(vals, dtype=np.complex128),
        np.ascontiguousarray(nodes, dtype=np.int64),
        np.ascontiguousarray(patch, dtype=np.complex128),
        np.ascontiguousarray(offset, dtype=np.int64),
    )


def power_sum(mod, p: float) -> float:
    """``sum(mod ** p)``; NumPy's vectorized ``pow`` is faster for non-integer ``p``."""
    p = float(p)
    impl = _impl if p in (1.0, 2.0, 4.0) else _pykernels
    return float(impl.power_sum(mod, p))


__all__ = ["BACKEND", "lattice_accumulate", "power_sum"]
