import numpy as np
import pytest

from oracles import ball_quad_max_dense, ball_quad_max_sweep_2d
from smallmax.krylov import (QuadraticForm, approx_max, block_lanczos,
                             krylov_dimension, solve_reduced)


def _random_sym(rng, d, norm=None):
    M = rng.standard_normal((d, d))
    H = 0.5 * (M + M.T)
    if norm is not None:
        H *= norm / np.linalg.norm(H, 2)
    return H


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


class TestBlockLanczos:
    def test_identity_breaks_down_after_first_block(self):
        rng = np.random.default_rng(0)
        qf = QuadraticForm.from_dense(np.eye(5), rng.standard_normal(5))
        Q, Ht, info = block_lanczos(qf, _unit(rng, 5), 4)
        assert Q.shape[1] == 2 and info["breakdown"] and info["m_used"] == 1
        assert np.allclose(Ht, np.eye(2), atol=1e-12)

    def test_orthonormality_and_similarity(self):
        rng = np.random.default_rng(1)
        H = _random_sym(rng, 6)
        qf = QuadraticForm.from_dense(H, rng.standard_normal(6))
        Q, Ht, info = block_lanczos(qf, _unit(rng, 6), 3)
        assert np.linalg.norm(Q.T @ Q - np.eye(Q.shape[1]), 2) <= 1e-8
        assert np.linalg.norm(Q.T @ H @ Q - Ht, 2) <= 1e-8

    def test_first_block_spans_g_and_xi(self):
        rng = np.random.default_rng(2)
        g = rng.standard_normal(7)
        xi = _unit(rng, 7)
        qf = QuadraticForm.from_dense(_random_sym(rng, 7), g)
        Q, _, _ = block_lanczos(qf, xi, 3)
        q1 = Q[:, :2]
        for v in (g, xi):
            assert np.linalg.norm(v - q1 @ (q1.T @ v)) <= 1e-10 * np.linalg.norm(v)

    def test_pentadiagonal_structure(self):
        rng = np.random.default_rng(3)
        H = _random_sym(rng, 12)
        qf = QuadraticForm.from_dense(H, rng.standard_normal(12))
        _, Ht, _ = block_lanczos(qf, _unit(rng, 12), 5)
        n = Ht.shape[0]
        for i in range(n):
            for j in range(n):
                if abs(i - j) > 3:
                    assert Ht[i, j] == 0.0
        # bandwidth is at most 3 by the 2x2-block structure; entries beyond
        # the blocks are zero by construction

    def test_degenerate_start_rejected(self):
        qf = QuadraticForm.from_dense(np.eye(3), np.array([1.0, 0, 0]))
        with pytest.raises(ValueError):
            block_lanczos(qf, np.array([1.0, 0, 0]), 2)

    def test_hvp_linearity_and_symmetry(self):
        rng = np.random.default_rng(4)
        H = _random_sym(rng, 9)
        qf = QuadraticForm.from_dense(H, rng.standard_normal(9))
        for _ in range(20):
            u, v = rng.standard_normal((2, 9))
            a, b = rng.standard_normal(2)
            assert np.allclose(qf.apply(a * u + b * v),
                               a * qf.apply(u) + b * qf.apply(v), atol=1e-10)
            assert abs(u @ qf.apply(v) - v @ qf.apply(u)) <= 1e-10


class TestSolveReduced:
    def test_interior_concave(self):
        gt = np.array([0.2, 0.1, 0.0])
        z, branch = solve_reduced(-np.eye(3), gt, 1.0)
        assert branch == "interior" and np.allclose(z, gt, atol=1e-12)

    def test_boundary_matches_angle_sweep(self):
        H = np.diag([1.0, -1.0])
        gt = np.array([0.1, 0.0])
        z, branch = solve_reduced(H, gt, 1.0)
        assert branch == "boundary"
        val = 0.5 * z @ H @ z + gt @ z
        ref = ball_quad_max_sweep_2d(H, gt, 1.0)
        assert abs(np.linalg.norm(z) - 1.0) <= 1e-9
        assert val >= ref - 1e-8

    def test_hard_case_zero_linear_term(self):
        H = np.diag([2.0, -1.0, 0.5])
        z, branch = solve_reduced(H, np.zeros(3), 1.0)
        assert branch == "boundary"
        # reference: R * top eigenvector, value R^2 lam_max / 2
        assert np.isclose(0.5 * z @ H @ z, 1.0, atol=1e-10)

    def test_hard_case_orthogonal_linear_term(self):
        # g orthogonal to the top eigenspace, small enough that the
        # pseudo-inverse solution stays inside the ball
        H = np.diag([1.0, -2.0])
        g = np.array([0.0, 0.1])
        z, branch = solve_reduced(H, g, 1.0)
        yref, vref = ball_quad_max_dense(H, g, 1.0)
        assert np.isclose(0.5 * z @ H @ z + g @ z, vref, atol=1e-9)

    def test_interior_rank_deficient(self):
        H = np.diag([0.0, -1.0])
        g = np.array([0.0, 0.5])  # in range(H): least-norm solution inside
        z, branch = solve_reduced(H, g, 2.0)
        assert branch == "interior" and np.allclose(z, [0.0, 0.5], atol=1e-8)

    def test_random_agree_with_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            d = rng.integers(2, 9)
            H = _random_sym(rng, d)
            g = rng.standard_normal(d) * rng.choice([1e-3, 1.0, 10.0])
            R = rng.uniform(0.3, 2.0)
            z, _ = solve_reduced(H, g, R)
            _, vref = ball_quad_max_dense(H, g, R)
            val = 0.5 * z @ H @ z + g @ z
            assert np.linalg.norm(z) <= R * (1 + 1e-9)
            assert val >= vref - 1e-7 * max(1.0, abs(vref))


class TestApproxMax:
    def test_small_dimension_is_exact(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            H = _random_sym(rng, 2)
            g = rng.standard_normal(2)
            qf = QuadraticForm.from_dense(H, g)
            res = approx_max(qf, 1.0, 1e-6, np.linalg.norm(H, 2) + 0.1, 0.1, rng)
            _, vref = ball_quad_max_dense(H, g, 1.0)
            assert abs(res.value - vref) <= 1e-8

    def test_zero_g_negative_semidefinite(self):
        qf = QuadraticForm.from_dense(-np.eye(4), np.zeros(4))
        res = approx_max(qf, 1.0, 1e-8, 1.0, 0.1, np.random.default_rng(0))
        assert np.allclose(res.y, 0.0) and res.value == 0.0

    def test_value_dominates_krylov2_candidates(self):
        # both 0 and the scaled gradient lie in the subspace, so the returned
        # value can never fall below either candidate
        rng = np.random.default_rng(7)
        for _ in range(25):
            d = 16
            H = _random_sym(rng, d, norm=1.0)
            g = rng.standard_normal(d)
            qf = QuadraticForm.from_dense(H, g)
            R = 0.8
            res = approx_max(qf, R, 1e-3, 1.0, 0.1, rng)
            yg = R * g / np.linalg.norm(g)
            assert res.value >= max(0.0, 0.5 * yg @ H @ yg + g @ yg) - 1e-9
            assert np.linalg.norm(res.y) <= R + 1e-9

    def test_monotone_in_m(self):
        rng = np.random.default_rng(8)
        H = _random_sym(rng, 24, norm=1.0)
        g = rng.standard_normal(24)
        xi = _unit(rng, 24)
        vals = []
        for m in range(1, 9):
            qf = QuadraticForm.from_dense(H, g)
            Q, Ht, info = block_lanczos(qf, xi, m)
            z, _ = solve_reduced(Ht, Q.T @ g, 1.0)
            y = Q @ z
            vals.append(0.5 * y @ H @ y + g @ y)
        assert all(vals[i + 1] >= vals[i] - 1e-9 for i in range(len(vals) - 1))

    def test_cost_contract(self):
        rng = np.random.default_rng(9)
        H = _random_sym(rng, 20, norm=1.0)
        qf = QuadraticForm.from_dense(H, rng.standard_normal(20))
        res = approx_max(qf, 1.0, 1e-2, 1.0, 0.1, rng)
        assert qf.hvp_count == 2 * res.m_used + 1

    def test_dimension_formula(self):
        # m = ceil(min{2R sqrt(rho1/delta (2 + log^2(2 sqrt(d)/q))), d/2})
        d, R, delta, rho1, q = 32, 1.0, 1e-4, 1.0, 0.1
        L = 2.0 + np.log(2 * np.sqrt(d) / q) ** 2
        expect = int(np.ceil(min(2 * R * np.sqrt(rho1 / delta * L), d / 2)))
        assert krylov_dimension(R, delta, rho1, q, d) == expect
        assert krylov_dimension(R, delta, rho1, q, d) == 16

    def test_suboptimality_statistics_d32(self):
        # acceptance-style check at reduced count (the full 100-run version
        # lives in the acceptance suite)
        rng = np.random.default_rng(10)
        ok = 0
        n = 20
        for i in range(n):
            H = _random_sym(np.random.default_rng(100 + i), 32, norm=1.0)
            g = np.random.default_rng(200 + i).standard_normal(32)
            qf = QuadraticForm.from_dense(H, g)
            res = approx_max(qf, 1.0, 1e-4, 1.0, 0.1, np.random.default_rng(300 + i))
            _, vref = ball_quad_max_dense(H, g, 1.0)
            bound = 4 * np.linalg.norm(H, 2) / res.m_used**2 \
                * (2 + np.log(2 * np.sqrt(32) / 0.1) ** 2)
            if vref - res.value <= bound:
                ok += 1
        assert ok >= int(0.9 * n)
