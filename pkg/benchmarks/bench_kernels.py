"""Numba vs numpy kernel timings, plus one end-to-end JS-GPIP solve.

Usage::

    python benchmarks/bench_kernels.py [--repeat 200]

The end-to-end comparison runs each backend in a fresh interpreter because
the backend is fixed at import time by ``ANPRECODE_DISABLE_NUMBA``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from anprecode.kernels import numba_impl, numpy_impl

SOLVE = """
import time, anprecode as a
cfg = a.SystemConfig({n}, {k}, 4, {n}, tx_power_dbm=20)
chs = [a.drop_network(cfg, seed=s) for s in range(6)]
a.js_gpip(chs[0], cfg)  # warm-up / jit
t = time.perf_counter()
for ch in chs[1:]:
    a.js_gpip(ch, cfg)
print((time.perf_counter() - t) / 5 * 1e3)
"""


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def kernel_case(rng, n, k, eves):
    nb = k + n
    L = 1 + k + eves
    A = crandn(rng, L, n, n)
    grams = A @ np.conj(np.swapaxes(A, -1, -2))
    coef = rng.standard_normal((L, nb))
    V = crandn(rng, nb, n)
    blocks = numpy_impl.assemble_blocks(grams, np.abs(coef))
    return {
        "gram_forms": (grams, V),
        "assemble_blocks": (grams, coef),
        "block_matvec": (blocks, 0.1, V),
        "block_cholesky_solve": (blocks, 0.1, V),
    }


def dense_solve(blocks, shift, rhs):
    # what a solver ignoring the block structure would do
    nb, n, _ = blocks.shape
    full = np.zeros((nb * n, nb * n), complex)
    for b in range(nb):
        full[b * n:(b + 1) * n, b * n:(b + 1) * n] = blocks[b]
    return np.linalg.solve(full + shift * np.eye(nb * n), rhs.reshape(-1))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)

    print(f"{'kernel':22s} {'N':>3s} {'K':>3s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for n, k in ((4, 1), (8, 4), (16, 4), (32, 8)):
        for name, call_args in kernel_case(rng, n, k, 4).items():
            getattr(numba_impl, name)(*call_args)  # compile outside the timing
            t_np = min(timeit.repeat(lambda: getattr(numpy_impl, name)(*call_args), number=args.repeat, repeat=3)) / args.repeat
            t_nb = min(timeit.repeat(lambda: getattr(numba_impl, name)(*call_args), number=args.repeat, repeat=3)) / args.repeat
            print(f"{name:22s} {n:3d} {k:3d} {t_np * 1e6:10.1f} {t_nb * 1e6:10.1f} {t_np / t_nb:8.2f}")
        blocks, shift, rhs = kernel_case(rng, n, k, 4)["block_cholesky_solve"]
        t_dense = min(timeit.repeat(lambda: dense_solve(blocks, shift, rhs), number=20, repeat=3)) / 20
        t_blk = min(timeit.repeat(lambda: numba_impl.block_cholesky_solve(blocks, shift, rhs), number=args.repeat, repeat=3)) / args.repeat
        print(f"{'dense solve (numpy)':22s} {n:3d} {k:3d} {t_dense * 1e6:10.1f} {t_blk * 1e6:10.1f} {t_dense / t_blk:8.2f}")

    print()
    print(f"{'js-gpip solve':22s} {'N':>3s} {'K':>3s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for n, k in ((8, 4), (16, 4)):
        times = []
        for flag in ("1", "0"):
            env = dict(os.environ, ANPRECODE_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", SOLVE.format(n=n, k=k)], env=env,
                                 capture_output=True, text=True, check=True)
            times.append(float(out.stdout.strip()))
        print(f"{'':22s} {n:3d} {k:3d} {times[0]:10.1f} {times[1]:10.1f} {times[0] / times[1]:8.2f}")


if __name__ == "__main__":
    main()
