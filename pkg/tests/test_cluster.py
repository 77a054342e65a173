import numpy as np
import pytest

from siglap import (ClusterLabels, ShiftConfig, SignedGraph, SparseSymMatrix,
                    clustering_error, kfn_neg_graph, kmeans, knn_pos_graph,
                    spectral_cluster)
from siglap.cluster import load_labels, load_points
from siglap.sbm import SbmParams, indicator_basis, sample


def labels_of(seq, k=None):
    seq = np.asarray(seq)
    return ClusterLabels(labels=seq, k=k or int(seq.max()) + 1)


class TestKmeans:
    def test_well_separated_1d(self):
        pts = np.array([[0.0], [0.1], [10.0], [10.1]])
        res = kmeans(pts, 2, seed=0)
        lab = res.labels.labels
        assert lab[0] == lab[1] and lab[2] == lab[3] and lab[0] != lab[2]
        assert res.labels.empty_clusters == ()

    def test_identical_points_flag_empty_cluster(self):
        pts = np.zeros((4, 2))
        res = kmeans(pts, 2, seed=0)
        assert len(res.labels.empty_clusters) == 1
        assert res.inertia == 0.0

    def test_exact_indicator_embedding_recovers_groups(self):
        params = SbmParams(k=3, cluster_size=5, p_in_plus=0, p_out_plus=0,
                           p_in_minus=0, p_out_minus=0)
        chi = np.linalg.qr(indicator_basis(params))[0]  # orthonormalized columns
        res = kmeans(chi, 3, seed=1)
        truth = labels_of(np.repeat([0, 1, 2], 5))
        assert clustering_error(res.labels, truth) == 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal((40, 3))
        a = kmeans(pts, 4, seed=5)
        b = kmeans(pts, 4, seed=5)
        assert np.array_equal(a.labels.labels, b.labels.labels)
        assert a.inertia == b.inertia

    def test_more_clusters_than_points_rejected(self):
        with pytest.raises(ValueError, match="at least"):
            kmeans(np.zeros((2, 1)), 3)

    def test_restarts_never_hurt(self):
        rng = np.random.default_rng(11)
        pts = np.concatenate([rng.normal(c, 0.3, size=(20, 2)) for c in (0, 3, 6)])
        one = kmeans(pts, 3, restarts=1, seed=2).inertia
        many = kmeans(pts, 3, restarts=10, seed=2).inertia
        assert many <= one + 1e-12


class TestClusteringError:
    def test_exact_match(self):
        t = labels_of([0, 0, 1, 1])
        assert clustering_error(t, t) == 0.0

    def test_permutation_invariance(self):
        truth = labels_of([0, 0, 1, 1])
        flipped = labels_of([1, 1, 0, 0])
        assert clustering_error(flipped, truth) == 0.0

    def test_tie_goes_to_smallest_class(self):
        truth = labels_of([0, 0, 1, 1])
        pred = labels_of([0, 1, 0, 1])
        # both predicted clusters tie between classes 0 and 1 -> both labeled 0
        assert clustering_error(pred, truth) == 0.5

    def test_random_relabeling_invariance(self):
        rng = np.random.default_rng(3)
        truth = labels_of(rng.integers(0, 4, size=50), k=4)
        pred = rng.integers(0, 4, size=50)
        base = clustering_error(labels_of(pred, k=4), truth)
        perm = rng.permutation(4)
        assert clustering_error(labels_of(perm[pred], k=4), truth) == base

    def test_size_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            clustering_error(labels_of([0, 1]), labels_of([0, 1, 1]))

    def test_plain_arrays_accepted(self):
        assert clustering_error([0, 0, 1], [1, 1, 0]) == 0.0


class TestNeighborGraphs:
    def test_collinear_nearest(self):
        pts = np.array([[0.0], [1.0], [10.0]])
        w = knn_pos_graph(pts, 1).to_dense()
        expect = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        np.testing.assert_array_equal(w, expect)

    def test_collinear_farthest(self):
        pts = np.array([[0.0], [1.0], [10.0]])
        w = kfn_neg_graph(pts, 1).to_dense()
        expect = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=float)
        np.testing.assert_array_equal(w, expect)

    def test_two_points(self):
        pts = np.array([[0.0], [1.0]])
        assert knn_pos_graph(pts, 1).nnz == 2
        assert kfn_neg_graph(pts, 1).nnz == 2

    def test_union_symmetrization_only_adds(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((100, 2))
        w = knn_pos_graph(pts, 3)
        degrees = (w.to_dense() > 0).sum(axis=1)
        assert degrees.min() >= 3

    def test_distance_ties_break_to_smaller_index(self):
        # three corners of a unit square: 1 and 2 are equidistant from 0
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        w = knn_pos_graph(pts, 1).to_dense()
        assert w[0, 1] == 1.0  # vertex 0 picked index 1, not 2

    def test_duplicate_points_allowed(self):
        pts = np.zeros((5, 2))
        w = knn_pos_graph(pts, 2)
        assert w.nnz > 0

    def test_farthest_hub_concentration(self):
        # two distant blobs: each blob's farthest neighbors live in the other,
        # and the extreme points soak up most of the edges
        rng = np.random.default_rng(9)
        blob1 = rng.normal(0.0, 0.5, size=(60, 2))
        blob2 = rng.normal(8.0, 0.5, size=(60, 2))
        w = kfn_neg_graph(np.vstack([blob1, blob2]), 3)
        deg = (w.to_dense() > 0).sum(axis=1)
        top = np.sort(deg)[-12:]
        assert top.sum() >= 0.5 * deg.sum()

    def test_k_validation(self):
        with pytest.raises(ValueError, match="k"):
            knn_pos_graph(np.zeros((3, 1)), 3)


def two_clique_graph(m=8):
    """Two positive m-cliques joined by all negative cross edges."""
    n = 2 * m
    ip, jp = [], []
    for base in (0, m):
        for i in range(m):
            for j in range(i + 1, m):
                ip.append(base + i)
                jp.append(base + j)
    im, jm = np.meshgrid(np.arange(m), np.arange(m, n))
    w_plus = SparseSymMatrix.from_undirected_edges(n, ip, jp, np.ones(len(ip)))
    w_minus = SparseSymMatrix.from_undirected_edges(
        n, im.ravel(), jm.ravel(), np.ones(m * m)
    )
    return SignedGraph(w_plus=w_plus, w_minus=w_minus), labels_of(
        np.repeat([0, 1], m)
    )


class TestSpectralCluster:
    @pytest.mark.parametrize("method", ["SN", "BN", "AM", "GM"])
    def test_perfectly_balanced_two_cliques(self, method):
        g, truth = two_clique_graph()
        res = spectral_cluster(g, 2, method=method, seed=0)
        assert clustering_error(res.labels, truth) == 0.0
        assert res.embedding.shape == (g.n, 2)
        np.testing.assert_allclose(np.linalg.norm(res.embedding, axis=0),
                                   np.ones(2), atol=1e-8)

    def test_balanced_sbm_sample_gm(self):
        params = SbmParams(k=2, cluster_size=50, p_in_plus=1.0, p_out_plus=0.0,
                           p_in_minus=0.0, p_out_minus=1.0)
        g = sample(params, seed=4)
        truth = labels_of(np.repeat([0, 1], 50))
        res = spectral_cluster(g, 2, method="GM", seed=1)
        assert clustering_error(res.labels, truth) == 0.0

    def test_eigen_residuals_recorded(self):
        g, _ = two_clique_graph(6)
        for method in ("SN", "GM"):
            res = spectral_cluster(g, 2, method=method, seed=3)
            for pair in res.eigenpairs:
                assert pair.residual <= 1e-6

    def test_validation(self):
        g, _ = two_clique_graph(3)
        with pytest.raises(ValueError, match="method"):
            spectral_cluster(g, 2, method="XX")
        with pytest.raises(ValueError, match="k"):
            spectral_cluster(g, g.n + 1)


class TestLoaders:
    def test_points_whitespace_and_csv(self, tmp_path):
        p1 = tmp_path / "a.txt"
        p1.write_text("0.0 1.0\n2.0 3.0\n")
        p2 = tmp_path / "b.csv"
        p2.write_text("0.0,1.0\n2.0,3.0\n")
        np.testing.assert_array_equal(load_points(p1), load_points(p2))

    def test_labels(self, tmp_path):
        p = tmp_path / "labels.txt"
        p.write_text("0\n1\n1\n")
        lab = load_labels(p)
        assert lab.k == 2
        np.testing.assert_array_equal(lab.labels, [0, 1, 1])

    def test_negative_labels_rejected(self, tmp_path):
        p = tmp_path / "labels.txt"
        p.write_text("0\n-1\n")
        with pytest.raises(ValueError, match="nonnegative"):
            load_labels(p)
