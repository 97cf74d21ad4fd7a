import os
import subprocess
import sys

import numpy as np
import pytest

from anprecode import kernels
from anprecode.kernels import numba_impl, numpy_impl

pytestmark = pytest.mark.skipif(numba_impl is None, reason="numba not installed")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def hermitian_psd(rng, count, n):
    A = crandn(rng, count, n, n)
    return A @ np.conj(np.swapaxes(A, -1, -2))


@pytest.mark.parametrize("n,nb,L", [(1, 1, 1), (4, 3, 5), (8, 12, 9)])
def test_gram_forms_match(rng, n, nb, L):
    G, V = hermitian_psd(rng, L, n), crandn(rng, nb, n)
    np.testing.assert_allclose(numba_impl.gram_forms(G, V), numpy_impl.gram_forms(G, V), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n,nb,L", [(1, 1, 1), (4, 3, 5), (8, 12, 9)])
def test_assemble_blocks_match(rng, n, nb, L):
    G, coef = hermitian_psd(rng, L, n), rng.standard_normal((L, nb))
    np.testing.assert_allclose(numba_impl.assemble_blocks(G, coef), numpy_impl.assemble_blocks(G, coef), rtol=1e-12, atol=1e-12)


def test_block_matvec_match(rng):
    B, V = crandn(rng, 6, 5, 5), crandn(rng, 6, 5)
    np.testing.assert_allclose(numba_impl.block_matvec(B, 0.7, V), numpy_impl.block_matvec(B, 0.7, V), rtol=1e-12)


def test_block_cholesky_match(rng):
    B, rhs = hermitian_psd(rng, 7, 4), crandn(rng, 7, 4)
    xa, ba = numba_impl.block_cholesky_solve(B, 1e-3, rhs)
    xb, bb = numpy_impl.block_cholesky_solve(B, 1e-3, rhs)
    assert ba == bb == -1
    np.testing.assert_allclose(xa, xb, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(np.einsum("bij,bj->bi", B, xa) + 1e-3 * xa, rhs, rtol=1e-9, atol=1e-9)


def test_block_cholesky_reports_bad_block(rng):
    B = hermitian_psd(rng, 3, 3)
    B[1] = -np.eye(3)
    for impl in (numba_impl, numpy_impl):
        _, bad = impl.block_cholesky_solve(B, 0.0, crandn(rng, 3, 3))
        assert bad == 1


@pytest.mark.parametrize("flag,expect", [("1", "numpy"), ("0", "numba"), ("", "numba")])
def test_env_flag_selects_backend(flag, expect):
    env = dict(os.environ, ANPRECODE_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import anprecode; print(anprecode.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expect


def test_solver_output_backend_independent():
    code = (
        "import numpy as np, anprecode as a;"
        "cfg = a.SystemConfig(4, 2, 2, 4, tx_power_dbm=20);"
        "r = a.js_gpip(a.drop_network(cfg, seed=1), cfg);"
        "print(repr(r.sum_secrecy), r.iterations)"
    )
    vals = []
    for flag in ("1", "0"):
        env = dict(os.environ, ANPRECODE_DISABLE_NUMBA=flag)
        vals.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split())
    assert float(vals[0][0]) == pytest.approx(float(vals[1][0]), rel=1e-9)
