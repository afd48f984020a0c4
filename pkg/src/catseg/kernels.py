"""Kernel dispatch.

The compiled ``_kernels`` extension is used when it imports; otherwise (or
with ``CATSEG_PURE_PYTHON=1`` in the environment) the numpy versions in
``_pykernels`` are used. ``BACKEND`` names the active choice.
"""
import os

import numpy as np

from . import _pykernels

_compiled = None
if not os.environ.get("CATSEG_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def available_backends() -> dict:
    out = {"python": _pykernels}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def jacobi_sweep(g: np.ndarray, vt: np.ndarray, tol: float) -> float:
    return _impl.jacobi_sweep(g, vt, tol)


def pk_disagreements(ref_seg: np.ndarray, hyp_seg: np.ndarray, k: int) -> int:
    return int(_impl.pk_disagreements(ref_seg, hyp_seg, k))


def window_average(probs: np.ndarray, starts: np.ndarray, lengths: np.ndarray, n: int):
    return _impl.window_average(probs, starts, lengths, n)
