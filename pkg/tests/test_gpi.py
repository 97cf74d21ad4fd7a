import math

import numpy as np
import pytest

from anprecode.baselines import nullspace_an
from anprecode.chanmodel import ChannelRealization, SystemConfig, drop_network
from anprecode.errors import BlockDecompositionError, DimensionError, ParameterError
from anprecode.gpi import (
    GpiSettings,
    assemble_kkt,
    blockdiag_solve,
    fixed_point_residual,
    gpi_iterate,
    softmax_weights,
)
from anprecode.harness.oracle import brute_force_secrecy
from anprecode.ratecore import (
    LN2,
    BlockDiagHermitian,
    build_covariance_matrices,
    build_nullspace_matrices,
    build_perfect_matrices,
    build_sumrate_matrices,
    grad_surrogate,
    surrogate_objective,
)
from anprecode.solvers import initial_design


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


@pytest.fixture(scope="module")
def drop():
    cfg = SystemConfig(6, 2, 3, 2, tx_power_dbm=15)
    return cfg, drop_network(cfg, seed=21)


def all_variants(cfg, ch):
    phi = nullspace_an(ch.h_users, cfg.n_an_cols)
    return {
        "perfect": build_perfect_matrices(ch, cfg),
        "covariance": build_covariance_matrices(ch, cfg),
        "nullspace": build_nullspace_matrices(ch, cfg, phi, 0.4),
        "nullspace_xi0": build_nullspace_matrices(ch, cfg, phi, 0.0),
        "sumrate": build_sumrate_matrices(ch, cfg),
    }


class TestAssembleKkt:
    def test_structure_and_definiteness(self, drop, rng):
        cfg, ch = drop
        for variant, mats in all_variants(cfg, ch).items():
            v = crandn(rng, mats.dim)
            kkt = assemble_kkt(variant, v, mats, cfg.alpha)
            assert kkt.a_kkt.n_blocks == kkt.b_kkt.n_blocks == mats.n_blocks
            assert kkt.a_kkt.hermitian_error() < 1e-12 * np.abs(kkt.a_kkt.blocks).max()
            assert np.linalg.eigvalsh(kkt.b_kkt.to_dense()).min() > 0

    def test_eigen_identity(self, drop, rng):
        cfg, ch = drop
        for variant, mats in all_variants(cfg, ch).items():
            for _ in range(25):
                v = crandn(rng, mats.dim)
                kkt = assemble_kkt(variant, v, mats, cfg.alpha)
                L = surrogate_objective(v, mats, cfg.alpha)
                assert abs(kkt.log_lambda / LN2 - L) < 1e-9
                assert abs(kkt.objective - L) < 1e-9

    def test_rayleigh_values(self, drop, rng):
        # with the normalized pencil both quadratic forms equal 2K/ln2
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        v = crandn(rng, mats.dim)
        kkt = assemble_kkt("perfect", v, mats, cfg.alpha)
        assert kkt.a_kkt.quad(v) == pytest.approx(2 * 2 / LN2, rel=1e-12)
        assert kkt.b_kkt.quad(v) == pytest.approx(2 * 2 / LN2, rel=1e-12)

    def test_single_eavesdropper_weight(self, rng):
        ch = ChannelRealization.from_channels(crandn(rng, 3, 1), crandn(rng, 3, 1))
        mats = build_perfect_matrices(ch, (0.1, 0.1), n_an_cols=1)
        for alpha in (0.05, 0.3, 2.0):
            kkt = assemble_kkt("perfect", crandn(rng, mats.dim), mats, alpha)
            beta = 1 / (alpha * LN2)
            assert alpha * beta * kkt.weights[0, 0] == pytest.approx(1 / LN2, rel=1e-14)

    def test_softmax_weights(self, rng):
        c, d = rng.uniform(1, 5, (4, 3)), rng.uniform(1, 5, (4, 3))
        w, lse = softmax_weights(c, d, 0.3)
        assert np.all(w > 0)
        np.testing.assert_allclose(w.sum(axis=0), 1.0, rtol=1e-14)
        beta = 1 / (0.3 * LN2)
        np.testing.assert_allclose(lse, np.log(((c / d) ** beta).sum(axis=0)), rtol=1e-12)

    def test_covariance_collapse(self, rng):
        ch = ChannelRealization.from_channels(crandn(rng, 4, 2), crandn(rng, 4, 2))
        p = build_perfect_matrices(ch, (0.1, 0.2), n_an_cols=1)
        c = build_covariance_matrices(ch, (0.1, 0.2), n_an_cols=1)
        v = crandn(rng, p.dim)
        kp, kc = assemble_kkt("perfect", v, p, 0.3), assemble_kkt("covariance", v, c, 0.3)
        np.testing.assert_array_equal(kp.a_kkt.to_dense(), kc.a_kkt.to_dense())
        np.testing.assert_array_equal(kp.b_kkt.to_dense(), kc.b_kkt.to_dense())

    def test_gradient_parallel_to_kkt_residual(self, drop, rng):
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        for _ in range(10):
            v = crandn(rng, mats.dim)
            kkt = assemble_kkt("perfect", v, mats, cfg.alpha)
            g = grad_surrogate(v, mats, cfg.alpha)
            r = kkt.a_kkt.matvec(v) - kkt.b_kkt.matvec(v)
            np.testing.assert_allclose(r, g, rtol=1e-10, atol=1e-12 * np.abs(g).max())

    def test_guards(self, drop, rng):
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        v = crandn(rng, mats.dim)
        with pytest.raises(ParameterError):
            assemble_kkt("bogus", v, mats, 0.3)
        with pytest.raises(ParameterError):
            assemble_kkt("perfect", v, mats, 0.0)
        with pytest.raises(DimensionError):
            assemble_kkt("nullspace", v, mats, 0.3)

    def test_no_eavesdropper_rejected(self, rng):
        ch = ChannelRealization.from_channels(crandn(rng, 3, 1))
        mats = build_perfect_matrices(ch, 0.1)
        with pytest.raises(ParameterError):
            gpi_iterate("perfect", crandn(rng, mats.dim), mats)


class TestBlockdiagSolve:
    def test_identity(self, rng):
        B = BlockDiagHermitian(np.broadcast_to(np.eye(3), (4, 3, 3)).copy(), 0.0)
        rhs = crandn(rng, 12)
        np.testing.assert_array_equal(blockdiag_solve(B, rhs), rhs)

    def test_diagonal(self):
        B = BlockDiagHermitian(np.array([[[2.0, 0.0], [0.0, 4.0]]]), 0.0)
        np.testing.assert_allclose(blockdiag_solve(B, np.array([1.0, 1.0])), [0.5, 0.25])

    def test_random_vs_dense(self, rng):
        for _ in range(30):
            N, nb = rng.integers(1, 9), rng.integers(1, 8)
            X = crandn(rng, nb, N, N)
            B = BlockDiagHermitian(X @ X.conj().transpose(0, 2, 1), 0.05)
            rhs = crandn(rng, N * nb)
            ref = np.linalg.solve(B.to_dense(), rhs)
            assert np.linalg.norm(blockdiag_solve(B, rhs) - ref) / np.linalg.norm(ref) < 1e-10

    def test_indefinite_block_reported(self):
        blocks = np.stack([np.eye(2), -np.eye(2)]).astype(complex)
        with pytest.raises(BlockDecompositionError) as err:
            blockdiag_solve(BlockDiagHermitian(blocks, 0.0), np.ones(4))
        assert err.value.block == 1

    def test_shape_mismatch(self):
        B = BlockDiagHermitian(np.broadcast_to(np.eye(2), (2, 2, 2)).copy(), 0.0)
        with pytest.raises(DimensionError):
            blockdiag_solve(B, np.ones(6))


class TestGpiIterate:
    def test_unit_norm_trace_and_monotone_start(self, drop):
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        out = gpi_iterate("perfect", initial_design(ch.h_users, 2), mats, GpiSettings(max_iters=50), cfg.alpha)
        assert abs(np.linalg.norm(out.vbar) - 1) < 1e-12
        assert out.trace[0][0] == 0 and math.isnan(out.trace[0][1])
        assert [t[0] for t in out.trace] == list(range(len(out.trace)))
        assert out.objective >= out.trace[0][2]

    def test_every_iterate_unit_norm(self, drop):
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        v = initial_design(ch.h_users, 2)
        for _ in range(5):
            v = gpi_iterate("perfect", v, mats, GpiSettings(max_iters=1), cfg.alpha).vbar
            assert abs(np.linalg.norm(v) - 1) < 1e-12

    def test_non_convergence_returns_best(self, drop):
        cfg, ch = drop
        mats = build_perfect_matrices(ch, cfg)
        out = gpi_iterate("perfect", initial_design(ch.h_users, 2), mats, GpiSettings(epsilon=1e-14, max_iters=3), cfg.alpha)
        assert not out.converged and out.iterations == 3
        assert out.objective == max(t[2] for t in out.trace)

    def test_converged_point_is_stationary(self):
        cfg = SystemConfig(4, 2, 2, 0, tx_power_dbm=10)
        ch = drop_network(cfg, seed=3)
        mats = build_perfect_matrices(ch, cfg)
        out = gpi_iterate("perfect", initial_design(ch.h_users, 0), mats, GpiSettings(epsilon=1e-8, max_iters=20000), cfg.alpha)
        assert out.converged
        assert fixed_point_residual("perfect", out.vbar, mats, cfg.alpha) < 1e-5
        g = grad_surrogate(out.vbar, mats, cfg.alpha)
        g_perp = g - np.vdot(out.vbar, g) * out.vbar
        assert np.linalg.norm(g_perp) < 1e-6

    def test_residual_off_stationarity(self):
        cfg = SystemConfig(4, 2, 2, 0, tx_power_dbm=10)
        ch = drop_network(cfg, seed=3)
        mats = build_perfect_matrices(ch, cfg)
        out = gpi_iterate("perfect", initial_design(ch.h_users, 0), mats, GpiSettings(epsilon=1e-10, max_iters=20000), cfg.alpha)
        rng = np.random.default_rng(0)
        assert fixed_point_residual("perfect", crandn(rng, mats.dim), mats, cfg.alpha) > 1e-2
        d = crandn(rng, mats.dim)
        d /= np.linalg.norm(d)
        r1 = fixed_point_residual("perfect", out.vbar + 1e-3 * d, mats, cfg.alpha)
        r2 = fixed_point_residual("perfect", out.vbar + 2e-3 * d, mats, cfg.alpha)
        assert r1 > 0 and 1.5 < r2 / r1 < 2.5

    def test_brute_force_small_instance(self):
        cfg = SystemConfig(2, 1, 1, 1, tx_power_dbm=20)
        ch = drop_network(cfg, seed=8)
        _, best = brute_force_secrecy(ch, cfg, resolution=8, objective="surrogate")
        out = gpi_iterate("perfect", initial_design(ch.h_users, 1), build_perfect_matrices(ch, cfg),
                          GpiSettings(max_iters=20000), cfg.alpha)
        assert out.objective >= 0.999 * best

    def test_improves_on_initial_point(self):
        cfg = SystemConfig(6, 2, 3, 6, tx_power_dbm=20)
        better = 0
        for s in range(200):
            ch = drop_network(cfg, seed=s)
            out = gpi_iterate("perfect", initial_design(ch.h_users, 6), build_perfect_matrices(ch, cfg),
                              GpiSettings(max_iters=30), cfg.alpha)
            better += out.objective >= out.trace[0][2]
        assert better >= 190

    def test_sumrate_single_user_mrt(self, rng):
        h = crandn(rng, 5, 1)
        ch = ChannelRealization.from_channels(h)
        mats = build_sumrate_matrices(ch, 0.1, n_an_cols=0)
        out = gpi_iterate("sumrate", crandn(rng, 5), mats, GpiSettings(max_iters=200))
        cos = abs(np.vdot(out.vbar, h[:, 0])) / np.linalg.norm(h)
        assert cos > 0.999999

    def test_settings_validation(self):
        with pytest.raises(ParameterError):
            GpiSettings(epsilon=0)
        with pytest.raises(ParameterError):
            GpiSettings(max_iters=0)
