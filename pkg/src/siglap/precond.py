"""Zero-fill incomplete Cholesky preconditioning.

The factor keeps exactly the lower-triangular sparsity pattern of the input
(IC(0)).  If a pivot becomes non-positive the factorization falls back to the
Jacobi (diagonal) preconditioner instead of failing or shifting; the chosen
kind is recorded on the result.  Factorization and the two triangular solves
are numba-compiled, with plain-Python fallbacks when numba is unavailable.
"""

import numpy as np
import scipy.sparse as sp

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _ic0_factor(n, lp, lj, lx):
    """In-place IC(0) on lower-triangular CSR arrays; returns False on breakdown.

    Assumes each row's entries are sorted and end with the diagonal.
    """
    for i in range(n):
        row_start = lp[i]
        row_end = lp[i + 1]
        for ii in range(row_start, row_end - 1):
            j = lj[ii]
            # two-pointer dot of rows i and j over shared columns below j
            s = lx[ii]
            pa = row_start
            pb = lp[j]
            pb_end = lp[j + 1] - 1  # skip the diagonal of row j
            while pa < ii and pb < pb_end:
                ca = lj[pa]
                cb = lj[pb]
                if ca == cb:
                    s -= lx[pa] * lx[pb]
                    pa += 1
                    pb += 1
                elif ca < cb:
                    pa += 1
                else:
                    pb += 1
            djj = lx[lp[j + 1] - 1]
            lx[ii] = s / djj
        d = lx[row_end - 1]
        for ii in range(row_start, row_end - 1):
            d -= lx[ii] * lx[ii]
        if d <= 0.0:
            return False
        lx[row_end - 1] = np.sqrt(d)
    return True


@njit(cache=True)
def _lower_solve(n, lp, lj, lx, b, out):
    """Forward substitution L out = b (rows end with the diagonal)."""
    for i in range(n):
        s = b[i]
        for ii in range(lp[i], lp[i + 1] - 1):
            s -= lx[ii] * out[lj[ii]]
        out[i] = s / lx[lp[i + 1] - 1]


@njit(cache=True)
def _lower_t_solve(n, lp, lj, lx, x):
    """Backward substitution L^T x = x, in place."""
    for i in range(n - 1, -1, -1):
        xi = x[i] / lx[lp[i + 1] - 1]
        x[i] = xi
        for ii in range(lp[i], lp[i + 1] - 1):
            x[lj[ii]] -= lx[ii] * xi


class IcPreconditioner:
    """SPD preconditioner: either an IC(0) factor or the Jacobi diagonal.

    ``kind`` is ``"ic0"`` when the factorization succeeded and ``"diagonal"``
    when it fell back.  Applying it (`solve`) is always a symmetric positive
    definite operation.
    """

    __slots__ = ("kind", "n", "_lp", "_lj", "_lx", "_inv_diag")

    def __init__(self, kind, n, lower_csr=None, inv_diag=None):
        self.kind = kind
        self.n = n
        if kind == "ic0":
            self._lp = lower_csr.indptr
            self._lj = lower_csr.indices
            self._lx = lower_csr.data
            self._inv_diag = None
        elif kind == "diagonal":
            self._lp = self._lj = self._lx = None
            self._inv_diag = inv_diag
        else:
            raise ValueError(f"unknown preconditioner kind {kind!r}")

    @property
    def lower(self):
        """The lower-triangular factor as a scipy CSR array (IC(0) kind only)."""
        if self.kind != "ic0":
            return sp.diags_array(1.0 / np.sqrt(self._inv_diag), format="csr")
        return sp.csr_array((self._lx, self._lj, self._lp), shape=(self.n, self.n))

    def solve(self, r):
        """Return ``P^{-1} r``."""
        if self.kind == "diagonal":
            return r * self._inv_diag
        out = np.empty_like(r)
        _lower_solve(self.n, self._lp, self._lj, self._lx, r, out)
        _lower_t_solve(self.n, self._lp, self._lj, self._lx, out)
        return out


def _jacobi(diag):
    inv = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)
    return IcPreconditioner("diagonal", diag.shape[0], inv_diag=inv)


def incomplete_cholesky(m):
    """IC(0) factorization of a symmetric matrix with positive diagonal.

    On any pivot breakdown (including a non-positive or structurally missing
    diagonal) this silently returns the Jacobi preconditioner; the ``kind``
    flag on the result records which one you got.
    """
    diag = m.diagonal_vector()
    if diag.size == 0 or np.any(diag <= 0.0):
        return _jacobi(diag)
    lower = sp.tril(m.to_scipy(), format="csr")
    lower.sort_indices()
    lx = lower.data.copy()
    ok = _ic0_factor(m.n, lower.indptr, lower.indices, lx)
    if not ok:
        return _jacobi(diag)
    factored = sp.csr_array((lx, lower.indices, lower.indptr), shape=lower.shape)
    return IcPreconditioner("ic0", m.n, lower_csr=factored)
