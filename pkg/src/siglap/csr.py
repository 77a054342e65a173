"""Symmetric sparse matrices in compressed-sparse-row form.

A :class:`SparseSymMatrix` stores both triangles of a symmetric matrix so
that matrix-vector products are branch-free row sums.  Construction always
canonicalizes (sorted column indices, duplicates summed) and verifies exact
structural and numerical symmetry; everything downstream may rely on it.
"""

import numpy as np
import scipy.sparse as sp


class SparseSymMatrix:
    """Immutable symmetric sparse matrix (CSR, both triangles stored).

    Attributes
    ----------
    n : int
        Matrix order.
    row_ptr, col_idx, values : ndarray
        The raw CSR arrays (``row_ptr`` has length ``n + 1``).
    """

    __slots__ = ("_csr", "n")

    def __init__(self, csr, _skip_checks=False):
        if not sp.issparse(csr):
            raise TypeError("expected a scipy sparse matrix")
        csr = sp.csr_array(csr, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        self._csr = csr
        self.n = csr.shape[0]
        if not _skip_checks:
            self._check_symmetry()

    def _check_symmetry(self):
        diff = (self._csr - self._csr.T.tocsr()).tocoo()
        if diff.nnz and np.any(diff.data != 0.0):
            i = int(np.argmax(diff.data != 0.0))
            raise ValueError(
                "matrix is not exactly symmetric, e.g. entry "
                f"({diff.row[i]}, {diff.col[i]}) differs by {diff.data[i]:g}"
            )

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Build from COO triplets; duplicates are summed, symmetry is required.

        Duplicates are ordered by value before summing so that the (i, j) and
        (j, i) accumulations run in the same order and symmetry survives
        floating point exactly.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.shape != cols.shape or rows.shape != vals.shape:
            raise ValueError("rows, cols, vals must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= n or cols.max() >= n):
            raise ValueError("index out of range")
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.empty(rows.size, dtype=bool)
            first[0] = True
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(first)
            rows, cols = rows[starts], cols[starts]
            vals = np.add.reduceat(vals, starts)
        return cls(sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr())

    @classmethod
    def from_undirected_edges(cls, n, i, j, w):
        """Build from undirected edges: each (i, j, w) also inserts (j, i, w).

        Duplicate edges (in either orientation) are summed.  Self loops are
        rejected; drop them before calling.
        """
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if np.any(i == j):
            raise ValueError("self loops are not allowed here")
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        vals = np.concatenate([w, w])
        return cls.from_coo(n, rows, cols, vals)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        return cls(sp.csr_array(a))

    @classmethod
    def identity(cls, n):
        return cls(sp.identity(n, format="csr"), _skip_checks=True)

    @classmethod
    def diagonal(cls, d):
        d = np.asarray(d, dtype=np.float64)
        return cls(sp.diags_array(d, format="csr"), _skip_checks=True)

    # -- CSR views -------------------------------------------------------

    @property
    def row_ptr(self):
        return self._csr.indptr

    @property
    def col_idx(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    @property
    def nnz(self):
        return self._csr.nnz

    # -- algebra ---------------------------------------------------------

    def matvec(self, x):
        """Return ``M @ x`` as the deterministic row-major CSR sum."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {x.shape}")
        return self._csr @ x

    def matmat(self, X):
        """Product against an ``n x m`` block of column vectors."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.n:
            raise ValueError(f"expected {self.n} rows, got {X.shape[0]}")
        return self._csr @ X

    def __matmul__(self, other):
        if isinstance(other, np.ndarray) and other.ndim == 2:
            return self.matmat(other)
        return self.matvec(other)

    def __add__(self, other):
        self._check_same_order(other)
        return SparseSymMatrix(self._csr + other._csr, _skip_checks=True)

    def __sub__(self, other):
        self._check_same_order(other)
        return SparseSymMatrix(self._csr - other._csr, _skip_checks=True)

    def __mul__(self, alpha):
        return SparseSymMatrix(self._csr * float(alpha), _skip_checks=True)

    __rmul__ = __mul__

    def _check_same_order(self, other):
        if not isinstance(other, SparseSymMatrix):
            raise TypeError("expected a SparseSymMatrix")
        if other.n != self.n:
            raise ValueError(f"order mismatch: {self.n} vs {other.n}")

    def add_diagonal(self, shift):
        """Return ``M + diag(shift)``; ``shift`` may be a scalar or a vector."""
        shift = np.broadcast_to(np.asarray(shift, dtype=np.float64), (self.n,))
        return self + SparseSymMatrix.diagonal(shift)

    def scale_symmetric(self, d):
        """Return ``diag(d) @ M @ diag(d)``.

        Each entry is scaled by the single product ``d[i] * d[j]``, so the
        result stays exactly symmetric (the two-sided sparse product would
        not, by associativity).
        """
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.n,):
            raise ValueError("scaling vector has wrong length")
        csr = self._csr.copy()
        row_of_entry = np.repeat(np.arange(self.n), np.diff(csr.indptr))
        csr.data *= d[row_of_entry] * d[csr.indices]
        return SparseSymMatrix(csr, _skip_checks=True)

    def diagonal_vector(self):
        return self._csr.diagonal()

    def row_sums(self):
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def abs_offdiag_row_sums(self):
        """Row sums of absolute off-diagonal entries (Gershgorin radii)."""
        absed = sp.csr_array(
            (np.abs(self._csr.data), self._csr.indices, self._csr.indptr),
            shape=self._csr.shape,
        )
        return np.asarray(absed.sum(axis=1)).ravel() - np.abs(self.diagonal_vector())

    def to_dense(self):
        return self._csr.toarray()

    def to_scipy(self):
        return self._csr.copy()

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, nnz={self.nnz})"


def spmv(m, x):
    """Sparse symmetric matrix-vector product ``m @ x``."""
    return m.matvec(x)
