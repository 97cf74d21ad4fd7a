"""Hot block-diagonal kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``ANPRECODE_DISABLE_NUMBA`` is set to a non-empty value other than
``0``. Both implementations are importable directly as ``numpy_impl`` and
``numba_impl`` (the latter is ``None`` when numba is unavailable).
"""

import os

import numpy as np

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover
    numba_impl = None

_flag = os.environ.get("ANPRECODE_DISABLE_NUMBA", "")
USE_NUMBA = numba_impl is not None and _flag in ("", "0")

_impl = numba_impl if USE_NUMBA else numpy_impl

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "gram_forms",
    "assemble_blocks",
    "block_matvec",
    "block_cholesky_solve",
    "numpy_impl",
    "numba_impl",
]

BACKEND = "numba" if USE_NUMBA else "numpy"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


# Above this block size the BLAS-backed numpy contractions beat the numba
# loops for the Gram kernels (see benchmarks/bench_kernels.py).
_GRAM_NUMBA_MAX_N = 4


def _gram_impl(n):
    return _impl if n <= _GRAM_NUMBA_MAX_N else numpy_impl


def gram_forms(grams, V):
    return _gram_impl(V.shape[-1]).gram_forms(_c(grams), _c(V))


def assemble_blocks(grams, coef):
    return _gram_impl(grams.shape[-1]).assemble_blocks(_c(grams), np.ascontiguousarray(coef, dtype=np.float64))


def block_matvec(blocks, shift, V):
    return _impl.block_matvec(_c(blocks), float(shift), _c(V))


def block_cholesky_solve(blocks, shift, rhs):
    return _impl.block_cholesky_solve(_c(blocks), float(shift), _c(rhs))
