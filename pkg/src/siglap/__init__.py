"""Spectral clustering of signed graphs with the geometric mean of Laplacians.

The package splits into a small stack of layers:

* :mod:`siglap.csr`, :mod:`siglap.pcg`, :mod:`siglap.precond`,
  :mod:`siglap.densela` -- sparse/dense linear algebra primitives;
* :mod:`siglap.graphs` -- signed graphs and their Laplacian operators;
* :mod:`siglap.geomean` -- matrix-free eigensolver for the geometric mean of
  an SPD pair (extended Krylov inverse square root + inverse power method);
* :mod:`siglap.sbm` -- signed stochastic block model, expected spectra, and
  the eigenvalue-ordering condition calculus;
* :mod:`siglap.cluster` -- embeddings, k-means, error metrics, neighborhood
  graphs;
* :mod:`siglap.cli` -- command-line front end (``siglap`` entry point).
"""

from .cluster import (ClusterLabels, clustering_error, kfn_neg_graph, kmeans,
                      knn_pos_graph, spectral_cluster)
from .csr import SparseSymMatrix, spmv
from .densela import (dense_geometric_mean, dense_inv_sqrt, dense_sym_eig,
                      ORACLE_CAP)
from .errors import ConvergenceError, EdgeListParseError, IndefiniteOperatorError
from .geomean import (EigenPair, PencilOperator, a_orthonormalize,
                      apply_geometric_mean, eksm_apply_inv_sqrt,
                      ipm_smallest_eigenpair, matrix_smallest_k_eigenpairs,
                      smallest_k_eigenpairs)
from .graphs import (ShiftConfig, SignedGraph, degrees, laplacian,
                     load_edge_list, shifted_pair, signed_laplacian,
                     signless_laplacian)
from .pcg import pcg_solve
from .precond import IcPreconditioner, incomplete_cholesky
from .sbm import (SbmParams, conditions, corollary_bound, expected_graph,
                  expected_spectrum, indicator_basis, region_fraction, sample,
                  two_cluster_benchmark_graph)

__version__ = "0.1.0"

__all__ = [
    "ClusterLabels", "ConvergenceError", "EdgeListParseError", "EigenPair",
    "IcPreconditioner", "IndefiniteOperatorError", "ORACLE_CAP",
    "PencilOperator", "SbmParams", "ShiftConfig", "SignedGraph",
    "SparseSymMatrix", "a_orthonormalize", "apply_geometric_mean",
    "clustering_error", "conditions", "corollary_bound",
    "dense_geometric_mean", "dense_inv_sqrt", "dense_sym_eig", "degrees",
    "eksm_apply_inv_sqrt", "expected_graph", "expected_spectrum",
    "incomplete_cholesky", "indicator_basis", "ipm_smallest_eigenpair",
    "kfn_neg_graph", "kmeans", "knn_pos_graph", "laplacian", "load_edge_list",
    "matrix_smallest_k_eigenpairs", "pcg_solve", "region_fraction", "sample",
    "shifted_pair", "signed_laplacian", "signless_laplacian",
    "smallest_k_eigenpairs", "spectral_cluster", "spmv",
    "two_cluster_benchmark_graph",
]
