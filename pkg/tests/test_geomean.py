import numpy as np
import pytest

from siglap import (ConvergenceError, PencilOperator, ShiftConfig,
                    SparseSymMatrix, a_orthonormalize, apply_geometric_mean,
                    dense_geometric_mean, dense_sym_eig, eksm_apply_inv_sqrt,
                    ipm_smallest_eigenpair, matrix_smallest_k_eigenpairs,
                    shifted_pair, smallest_k_eigenpairs)
from siglap.densela import pencil_inv_sqrt_apply, subspace_angle
from siglap.graphs import SignedGraph, signed_laplacian
from siglap.sbm import (SbmParams, conditions, expected_graph, indicator_basis,
                        sample)


def sbm_pencil(n_half, seed, shift=ShiftConfig(1e-4, 1e-4), pcg_tol=1e-10, **kw):
    params = SbmParams(k=2, cluster_size=n_half,
                       p_in_plus=kw.get("pip", 0.4), p_out_plus=kw.get("pop", 0.08),
                       p_in_minus=kw.get("pim", 0.08), p_out_minus=kw.get("pom", 0.4))
    g = sample(params, seed=seed)
    a, b = shifted_pair(g, shift)
    return PencilOperator(a, b, pcg_tol=pcg_tol)


def dense_pair(pencil):
    return pencil.a.to_dense(), pencil.b.to_dense()


class TestAOrthonormalize:
    def test_plain_normalization(self):
        res = a_orthonormalize(None, np.array([3.0, 4.0]), lambda v: v)
        np.testing.assert_allclose(res[0], [0.6, 0.8])

    def test_euclidean_gram_schmidt(self):
        basis = np.eye(2)[:, :1]
        q, _ = a_orthonormalize(basis, np.array([1.0, 1.0]), lambda v: v)
        np.testing.assert_allclose(q, [0.0, 1.0], atol=1e-15)

    def test_weighted_norm(self):
        a = np.diag([4.0, 1.0])
        q, aq = a_orthonormalize(None, np.array([1.0, 0.0]), lambda v: a @ v)
        np.testing.assert_allclose(q, [0.5, 0.0])
        np.testing.assert_allclose(aq, [2.0, 0.0])

    def test_breakdown_signal(self):
        basis = np.eye(3)[:, :2]
        w = np.array([1.0, -2.0, 0.0])
        assert a_orthonormalize(basis, w, lambda v: v) is None

    def test_result_is_a_orthonormal(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((8, 8))
        a = m @ m.T + 8 * np.eye(8)
        apply_a = lambda v: a @ v
        basis = np.empty((8, 0))
        for _ in range(5):
            q, _ = a_orthonormalize(basis, rng.standard_normal(8), apply_a)
            basis = np.column_stack([basis, q])
        gram = basis.T @ a @ basis
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)


class TestEksm:
    def test_equal_operands_returns_input(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((12, 12))
        spd = SparseSymMatrix.from_dense(m @ m.T + 12 * np.eye(12))
        pencil = PencilOperator(spd, spd)
        y = rng.standard_normal(12)
        res = eksm_apply_inv_sqrt(pencil, y)
        np.testing.assert_allclose(res.x, y, atol=1e-8 * np.linalg.norm(y))
        assert res.s <= 4

    def test_commuting_diagonal(self):
        pencil = PencilOperator(SparseSymMatrix.diagonal([1.0, 4.0]),
                                SparseSymMatrix.diagonal([4.0, 1.0]))
        res = eksm_apply_inv_sqrt(pencil, np.array([1.0, 1.0]))
        np.testing.assert_allclose(res.x, [0.5, 2.0], atol=1e-10)

    def test_sbm_pencil_matches_dense_oracle(self):
        pencil = sbm_pencil(75, seed=11)
        rng = np.random.default_rng(11)
        y = rng.standard_normal(150)
        res = eksm_apply_inv_sqrt(pencil, y, tol=1e-12)
        x_dense = pencil_inv_sqrt_apply(*dense_pair(pencil), y)
        rel = np.linalg.norm(res.x - x_dense) / np.linalg.norm(x_dense)
        assert rel <= 1e-8

    def test_error_decays_with_subspace_growth(self):
        pencil = sbm_pencil(60, seed=3, pcg_tol=1e-13)
        rng = np.random.default_rng(3)
        y = rng.standard_normal(120)
        res = eksm_apply_inv_sqrt(pencil, y, tol=1e-11, return_history=True)
        x_dense = pencil_inv_sqrt_apply(*dense_pair(pencil), y)
        errs = np.array([np.linalg.norm(xs - x_dense) for xs in res.history])
        errs /= np.linalg.norm(x_dense)
        above = errs > 1e-10
        assert errs[-1] <= 1e-8
        # log-linear decrease on the pre-floor stretch
        seg = np.log(errs[above])
        assert seg.size >= 3
        slopes = np.diff(seg)
        assert np.median(slopes) < -0.5

    def test_residual_structure_on_settled_columns(self):
        # M V restricted to all but the two frontier columns reproduces V H
        pencil = sbm_pencil(40, seed=5, shift=ShiftConfig(1e-2, 1e-2),
                            pcg_tol=1e-14)
        rng = np.random.default_rng(5)
        y = rng.standard_normal(80)
        res = eksm_apply_inv_sqrt(pencil, y, tol=1e-10)
        v = res.state.basis
        h = res.state.projected
        mv = np.column_stack(
            [pencil.solve_a(pencil.apply_b(v[:, j])) for j in range(v.shape[1])]
        )
        mismatch = mv - v @ h
        settled = mismatch[:, : v.shape[1] - 2]
        assert np.abs(settled).max() <= 1e-8
        assert res.state.projected.shape[0] == v.shape[1]
        np.testing.assert_allclose(h, h.T, atol=1e-12)

    def test_basis_is_a_orthonormal(self):
        pencil = sbm_pencil(30, seed=9)
        y = np.random.default_rng(9).standard_normal(60)
        res = eksm_apply_inv_sqrt(pencil, y)
        v = res.state.basis
        gram = v.T @ pencil.a.matmat(v)
        assert np.abs(gram - np.eye(v.shape[1])).max() <= 1e-8

    def test_nonconvergence_carries_iterate(self):
        pencil = sbm_pencil(40, seed=7, shift=ShiftConfig(1e-6, 1e-6))
        y = np.random.default_rng(7).standard_normal(80)
        with pytest.raises(ConvergenceError) as err:
            eksm_apply_inv_sqrt(pencil, y, tol=1e-12, max_s=2)
        assert err.value.iterate.shape == (80,)
        assert err.value.residual > 0

    def test_zero_vector_rejected(self):
        pencil = sbm_pencil(10, seed=1)
        with pytest.raises(ValueError, match="nonzero"):
            eksm_apply_inv_sqrt(pencil, np.zeros(20))

    def test_apply_geometric_mean_matches_dense(self):
        pencil = sbm_pencil(30, seed=13)
        x = np.random.default_rng(13).standard_normal(60)
        gm = dense_geometric_mean(*dense_pair(pencil))
        got = apply_geometric_mean(pencil, x)
        np.testing.assert_allclose(got, gm @ x, atol=1e-7 * np.linalg.norm(gm @ x))


class TestIpm:
    def test_identity_pencil(self):
        pencil = PencilOperator(SparseSymMatrix.identity(6),
                                SparseSymMatrix.identity(6))
        pair = ipm_smallest_eigenpair(pencil)
        assert pair.value == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(pair.vector) == pytest.approx(1.0)

    def test_commuting_diagonal(self):
        pencil = PencilOperator(SparseSymMatrix.diagonal([1.0, 4.0]),
                                SparseSymMatrix.diagonal([9.0, 1.0]))
        pair = ipm_smallest_eigenpair(pencil, tol=1e-12)
        assert pair.value == pytest.approx(2.0, abs=1e-9)
        assert abs(pair.vector[1]) == pytest.approx(1.0, abs=1e-6)

    def test_expected_sbm_pencil_matches_dense(self):
        params = SbmParams(k=2, cluster_size=30, p_in_plus=0.6, p_out_plus=0.1,
                           p_in_minus=0.1, p_out_minus=0.6)
        wp, wm = expected_graph(params)
        shift = ShiftConfig(1e-3, 1e-3)
        n = params.n
        lsym = np.eye(n) - wp / wp.sum(axis=1)[0]
        qsym = np.eye(n) + wm / wm.sum(axis=1)[0]
        a = SparseSymMatrix.from_dense(lsym + shift.eps1 * np.eye(n))
        b = SparseSymMatrix.from_dense(qsym + shift.eps2 * np.eye(n))
        pencil = PencilOperator(a, b)
        pair = ipm_smallest_eigenpair(pencil, tol=1e-10)
        gm = dense_geometric_mean(a.to_dense(), b.to_dense())
        w, v = dense_sym_eig(gm)
        assert abs(pair.value - w[0]) <= 1e-6 * w[0]
        assert subspace_angle(pair.vector[:, None], v[:, :1]) <= 1e-4

    def test_residual_is_small_and_measured(self):
        pencil = sbm_pencil(25, seed=2)
        pair = ipm_smallest_eigenpair(pencil, tol=1e-9)
        gm = dense_geometric_mean(*dense_pair(pencil))
        true_resid = np.linalg.norm(gm @ pair.vector - pair.value * pair.vector)
        assert pair.residual <= 1e-7
        assert pair.residual == pytest.approx(true_resid, rel=1e-2, abs=1e-9)

    def test_deflation_requires_orthonormal_vectors(self):
        pencil = sbm_pencil(10, seed=1)
        bad = np.ones((20, 1))
        with pytest.raises(ValueError, match="orthonormal"):
            ipm_smallest_eigenpair(pencil, deflate=bad)


class TestSmallestK:
    def test_identity_pencil_degenerate(self):
        pencil = PencilOperator(SparseSymMatrix.identity(5),
                                SparseSymMatrix.identity(5))
        pairs = smallest_k_eigenpairs(pencil, 3)
        vals = [p.value for p in pairs]
        np.testing.assert_allclose(vals, np.ones(3), atol=1e-9)
        basis = np.column_stack([p.vector for p in pairs])
        np.testing.assert_allclose(basis.T @ basis, np.eye(3), atol=1e-8)

    def test_commuting_diagonal_multiplicity(self):
        pencil = PencilOperator(SparseSymMatrix.diagonal([1.0, 4.0, 9.0]),
                                SparseSymMatrix.diagonal([9.0, 4.0, 1.0]))
        pairs = smallest_k_eigenpairs(pencil, 2, tol=1e-11)
        np.testing.assert_allclose([p.value for p in pairs], [3.0, 3.0], atol=1e-8)
        span = np.column_stack([p.vector for p in pairs])
        target = np.eye(3)[:, [0, 2]]
        assert subspace_angle(span, target) <= 1e-5

    def test_expected_pencil_recovers_indicator_span(self):
        params = SbmParams(k=2, cluster_size=30, p_in_plus=0.7, p_out_plus=0.1,
                           p_in_minus=0.1, p_out_minus=0.7)
        shift = ShiftConfig(1e-3, 1e-3)
        assert conditions(params, shift).e_g_shifted
        wp, wm = expected_graph(params)
        n = params.n
        lsym = np.eye(n) - wp / wp.sum(axis=1)[0]
        qsym = np.eye(n) + wm / wm.sum(axis=1)[0]
        pencil = PencilOperator(
            SparseSymMatrix.from_dense(lsym + shift.eps1 * np.eye(n)),
            SparseSymMatrix.from_dense(qsym + shift.eps2 * np.eye(n)),
        )
        pairs = smallest_k_eigenpairs(pencil, 2, tol=1e-10)
        span = np.column_stack([p.vector for p in pairs])
        chi = indicator_basis(params)
        assert subspace_angle(span, chi) <= 1e-4

    def test_values_ascending_and_vectors_orthogonal(self):
        pencil = sbm_pencil(40, seed=21)
        pairs = smallest_k_eigenpairs(pencil, 4, tol=1e-8, max_iter=3000)
        vals = np.array([p.value for p in pairs])
        assert np.all(np.diff(vals) >= -1e-8)
        basis = np.column_stack([p.vector for p in pairs])
        off = basis.T @ basis - np.eye(4)
        assert np.abs(off).max() <= 1e-6

    def test_shared_eigenbasis_pairs_match_dense(self):
        # 50 random commuting SPD pairs: values must be the paired geometric means
        rng = np.random.default_rng(77)
        for _ in range(50):
            n = 8
            q = np.linalg.qr(rng.standard_normal((n, n)))[0]
            lam = rng.uniform(0.5, 5.0, size=n)
            # spread the geometric means so inverse iteration stays well posed
            geo = np.sort(rng.uniform(0.5, 5.0, size=n))
            while np.min(np.diff(geo) / geo[1:]) < 0.15:
                geo = np.sort(rng.uniform(0.5, 5.0, size=n))
            perm = rng.permutation(n)
            mu = geo[perm] ** 2 / lam

            def spd(vals):
                m = (q * vals) @ q.T
                return SparseSymMatrix.from_dense(0.5 * (m + m.T))

            a, b = spd(lam), spd(mu)
            pairs = smallest_k_eigenpairs(PencilOperator(a, b), 3, tol=1e-9)
            np.testing.assert_allclose([p.value for p in pairs], geo[:3], atol=1e-8)

    def test_k_validation(self):
        pencil = PencilOperator(SparseSymMatrix.identity(4),
                                SparseSymMatrix.identity(4))
        with pytest.raises(ValueError):
            smallest_k_eigenpairs(pencil, 0)
        with pytest.raises(ValueError):
            smallest_k_eigenpairs(pencil, 5)


class TestMatrixEigensolver:
    def test_two_component_laplacian_kernel(self):
        w = SparseSymMatrix.from_undirected_edges(
            6, [0, 1, 3, 4], [1, 2, 4, 5], np.ones(4)
        )
        from siglap.graphs import laplacian

        lap = laplacian(w)
        pairs = matrix_smallest_k_eigenpairs(lap, 3, tol=1e-10)
        vals = [p.value for p in pairs]
        assert abs(vals[0]) < 1e-8 and abs(vals[1]) < 1e-8
        assert vals[2] > 0.1
        for p in pairs:
            assert p.residual <= 1e-6

    def test_matches_dense_eigendecomposition(self):
        pencil = sbm_pencil(30, seed=17)
        m = pencil.a  # any SPD sparse matrix works here
        pairs = matrix_smallest_k_eigenpairs(m, 3, tol=1e-9, max_iter=3000)
        w = dense_sym_eig(m.to_dense())[0]
        np.testing.assert_allclose([p.value for p in pairs], w[:3], atol=1e-7)

    def test_indefinite_matrix_needs_flag(self):
        # one negative edge: the balance-normalized operator has eigenvalues -1, 1
        wm = SparseSymMatrix.from_undirected_edges(2, [0], [1], [1.0])
        g = SignedGraph(w_plus=wm * 0.0, w_minus=wm)
        bn = signed_laplacian(g, "BN")
        pair = matrix_smallest_k_eigenpairs(bn, 1, definite=False, tol=1e-12)[0]
        assert pair.value == pytest.approx(-1.0, abs=1e-8)
