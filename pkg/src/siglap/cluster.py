"""Spectral clustering pipelines: embeddings, k-means, the majority-vote
error, and the neighborhood graph constructions for point-cloud input.

The positive graph connects mutual nearest neighbors, the negative graph
mutual *farthest* neighbors; both are unweighted and symmetrized by union.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._util import as_seed_sequence
from .csr import SparseSymMatrix
from .geomean import (PencilOperator, matrix_smallest_k_eigenpairs,
                      smallest_k_eigenpairs)
from .graphs import ShiftConfig, shifted_pair, signed_laplacian

METHODS = ("SN", "BN", "AM", "GM")


@dataclass(frozen=True)
class ClusterLabels:
    """Vertex-to-cluster assignment; empty clusters are allowed but flagged."""

    labels: np.ndarray
    k: int
    empty_clusters: tuple = ()

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError("labels out of range")

    @property
    def n(self):
        return self.labels.shape[0]

    def sizes(self):
        return np.bincount(self.labels, minlength=self.k)


@dataclass
class KmeansResult:
    labels: ClusterLabels
    centers: np.ndarray
    inertia: float


def _plus_plus_seed(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[i:] = points[rng.integers(n, size=k - i)]
            break
        centers[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def _lloyd(points, centers, max_iter, rtol):
    prev = np.inf
    labels = None
    for _ in range(max_iter):
        d2 = (
            np.sum(points**2, axis=1)[:, None]
            - 2.0 * points @ centers.T
            + np.sum(centers**2, axis=1)[None, :]
        )
        labels = np.argmin(d2, axis=1)  # ties go to the lowest centroid index
        inertia = float(np.sum(np.take_along_axis(d2, labels[:, None], axis=1)))
        inertia = max(inertia, 0.0)
        assert inertia <= prev + 1e-9 * max(1.0, abs(prev)), "k-means objective increased"
        for c in range(centers.shape[0]):
            mask = labels == c
            if np.any(mask):
                centers[c] = points[mask].mean(axis=0)
        if prev - inertia <= rtol * max(prev, 1e-300) or inertia == 0.0:
            prev = inertia
            break
        prev = inertia
    return labels, centers, prev


def kmeans(points, k, restarts=10, seed=0, max_iter=300, rtol=1e-9):
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` runs.

    Deterministic given the seed.  If fewer than ``k`` distinct points exist,
    some clusters come back empty and are flagged on the result.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.ndim != 2:
        raise ValueError("points must be an n x d array")
    n = points.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    best = None
    for child in as_seed_sequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        centers = _plus_plus_seed(points, k, rng)
        labels, centers, inertia = _lloyd(points, centers.copy(), max_iter, rtol)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    present = np.bincount(labels, minlength=k) > 0
    empties = tuple(int(c) for c in np.flatnonzero(~present))
    return KmeansResult(
        labels=ClusterLabels(labels=labels, k=k, empty_clusters=empties),
        centers=centers,
        inertia=inertia,
    )


def clustering_error(pred, truth):
    """Fraction of mislabeled vertices after majority-vote cluster labeling.

    Each predicted cluster adopts the most frequent ground-truth class among
    its vertices (ties to the smallest class id); the error is invariant
    under permutations of the predicted cluster ids.
    """
    pred_labels = pred.labels if isinstance(pred, ClusterLabels) else np.asarray(pred)
    true_labels = truth.labels if isinstance(truth, ClusterLabels) else np.asarray(truth)
    if pred_labels.shape != true_labels.shape:
        raise ValueError("prediction and ground truth differ in length")
    n = pred_labels.shape[0]
    wrong = 0
    for c in np.unique(pred_labels):
        members = true_labels[pred_labels == c]
        counts = np.bincount(members)
        majority = int(np.argmax(counts))  # ties resolve to the smallest class
        wrong += int(members.size - counts[majority])
    return wrong / n


def _neighbor_graph(data, k_neigh, farthest):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n = data.shape[0]
    if k_neigh < 1 or k_neigh >= n:
        raise ValueError(f"need 1 <= k < n, got k={k_neigh}, n={n}")
    sq = np.sum(data**2, axis=1)
    d2 = np.maximum(sq[:, None] - 2.0 * data @ data.T + sq[None, :], 0.0)
    np.fill_diagonal(d2, -np.inf if farthest else np.inf)
    idx = np.arange(n)
    rows = np.repeat(idx, k_neigh)
    cols = np.empty(n * k_neigh, dtype=np.int64)
    for i in range(n):
        key = -d2[i] if farthest else d2[i]
        order = np.lexsort((idx, key))  # distance first, ties to the smaller index
        cols[i * k_neigh:(i + 1) * k_neigh] = order[:k_neigh]
    adj = sp.coo_array((np.ones(rows.size), (rows, cols)), shape=(n, n)).tocsr()
    sym = adj + adj.T  # union symmetrization
    sym.data[:] = 1.0
    return SparseSymMatrix(sym)


def knn_pos_graph(data, k_plus):
    """Symmetric (union) k-nearest-neighbor graph, unit weights, Euclidean metric."""
    return _neighbor_graph(data, k_plus, farthest=False)


def kfn_neg_graph(data, k_minus):
    """Symmetric (union) k-farthest-neighbor graph, unit weights."""
    return _neighbor_graph(data, k_minus, farthest=True)


@dataclass
class SpectralClusteringResult:
    labels: ClusterLabels
    embedding: np.ndarray
    eigenpairs: list
    method: str


def spectral_cluster(g, k, method="GM", shift=None, seed=0, restarts=10,
                     tol=1e-8, eksm_tol=None, pcg_tol=None, max_iter=500,
                     resid_tol=1e-4):
    """Cluster a signed graph from the k smallest eigenvectors of an operator.

    ``method`` selects the operator: the geometric mean of the shifted
    normalized pair (``GM``, solved matrix-free) or one of the explicit
    matrices ``SN``/``BN``/``AM``.  The embedding rows are then clustered with
    k-means.

    ``resid_tol`` accepts an eigenvector once its backward error is below the
    threshold even while it still rotates inside a cluster of nearly equal
    eigenvalues; that wander is irrelevant to k-means (the embedding subspace
    is what matters) and waiting it out would cost thousands of iterations on
    block-model graphs, whose planted eigenvalues are nearly degenerate by
    construction.  Pass ``resid_tol=0`` for strict per-vector convergence.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if g.n == 0:
        raise ValueError("graph is empty")
    if not 2 <= k <= g.n:
        raise ValueError(f"k must be in [2, {g.n}], got {k}")
    eig_seed, km_seed = as_seed_sequence(seed).spawn(2)
    if method == "GM":
        shift = shift if shift is not None else ShiftConfig()
        a, b = shifted_pair(g, shift)
        pencil = PencilOperator(a, b, pcg_tol=pcg_tol)
        pairs = smallest_k_eigenpairs(pencil, k, tol=tol, max_iter=max_iter,
                                      eksm_tol=eksm_tol, seed=eig_seed,
                                      resid_tol=resid_tol)
    else:
        m = signed_laplacian(g, method)
        pairs = matrix_smallest_k_eigenpairs(
            m, k, definite=method != "BN", tol=tol, max_iter=max_iter,
            pcg_tol=pcg_tol, seed=eig_seed, resid_tol=resid_tol,
        )
    embedding = np.column_stack([p.vector for p in pairs])
    km = kmeans(embedding, k, restarts=restarts, seed=km_seed)
    return SpectralClusteringResult(
        labels=km.labels, embedding=embedding, eigenpairs=pairs, method=method
    )


def load_points(path):
    """Numeric point matrix, one point per row, comma- or whitespace-separated."""
    with open(path, "r", encoding="utf-8") as fh:
        sample_line = ""
        for line in fh:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                sample_line = stripped
                break
    delim = "," if "," in sample_line else None
    pts = np.loadtxt(path, delimiter=delim, comments="#", ndmin=2)
    return pts.astype(np.float64)


def load_labels(path):
    """Ground-truth labels, one integer per row."""
    labels = np.loadtxt(path, comments="#", dtype=np.int64, ndmin=1)
    if labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    return ClusterLabels(labels=labels, k=int(labels.max()) + 1)
