"""Small dense symmetric linear algebra: eigensolves, matrix roots, and the
dense geometric-mean oracle.

Everything here is O(n^3) and guarded by :data:`ORACLE_CAP`; the sparse
solvers never call into this module except for the tiny projected matrices
they build themselves.
"""

import numpy as np
import scipy.linalg

from .errors import IndefiniteOperatorError

# Largest order accepted by the dense oracle routines.  Big enough for every
# verification task in the test suite, small enough that O(n^3) is instant.
ORACLE_CAP = 500

_SYM_RTOL = 1e-12


def check_symmetric(h, rtol=_SYM_RTOL):
    """Return ``h`` as a float array, rejecting asymmetric input."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = np.abs(h).max() if h.size else 0.0
    if scale and np.abs(h - h.T).max() > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return h


def _check_cap(h):
    if h.shape[0] > ORACLE_CAP:
        raise ValueError(
            f"dense oracle limited to order {ORACLE_CAP}, got {h.shape[0]}"
        )


def dense_sym_eig(h):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvector columns ``v``.
    """
    h = check_symmetric(h)
    return np.linalg.eigh(h)


def _spd_eig(h, what):
    w, v = dense_sym_eig(h)
    if w.size and w[0] <= 0.0:
        raise IndefiniteOperatorError(
            f"{what}: smallest eigenvalue {w[0]:.3e} is not positive"
        )
    return w, v


def dense_sqrt(h):
    """Principal square root of a symmetric positive definite matrix."""
    w, v = _spd_eig(h, "matrix square root")
    r = (v * np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)

def dense_inv_sqrt(h):
    """Inverse principal square root of a symmetric positive definite matrix."""
    w, v = _spd_eig(h, "inverse matrix square root")
    r = (v / np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)


def dense_geometric_mean(a, b):
    """Geometric mean of two SPD matrices: ``a^(1/2) (a^(-1/2) b a^(-1/2))^(1/2) a^(1/2)``.

    The result is the unique SPD solution of ``X a^(-1) X = b``; it is
    symmetric in its arguments, which the test suite verifies numerically.
    """
    a = check_symmetric(a)
    b = check_symmetric(b)
    if a.shape != b.shape:
        raise ValueError("operands must have equal order")
    _check_cap(a)
    wa, va = _spd_eig(a, "geometric mean (first operand)")
    a_half = (va * np.sqrt(wa)) @ va.T
    a_inv_half = (va / np.sqrt(wa)) @ va.T
    c = a_inv_half @ b @ a_inv_half
    c = 0.5 * (c + c.T)
    wc, vc = _spd_eig(c, "geometric mean (second operand)")
    g = a_half @ ((vc * np.sqrt(wc)) @ vc.T) @ a_half
    return 0.5 * (g + g.T)


def geometric_mean_representations(a, b):
    """The four product forms ``a (a^-1 b)^(1/2)``, ``(b a^-1)^(1/2) a``,
    ``b (b^-1 a)^(1/2)`` and ``(a b^-1)^(1/2) b`` of the geometric mean.

    Uses Schur-based square roots of the (non-symmetric) quotient matrices,
    which is a computation path independent of :func:`dense_geometric_mean`;
    agreement between the five values is a library acceptance check.
    """
    a = check_symmetric(a)
    b = check_symmetric(b)
    _check_cap(a)

    def rootm(m):
        r = scipy.linalg.sqrtm(m)
        if np.iscomplexobj(r):
            if np.abs(r.imag).max() > 1e-8 * max(np.abs(r.real).max(), 1.0):
                raise IndefiniteOperatorError("quotient matrix has no real square root")
            r = r.real
        return r

    return [
        a @ rootm(np.linalg.solve(a, b)),
        rootm(b @ np.linalg.inv(a)) @ a,
        b @ rootm(np.linalg.solve(b, a)),
        rootm(a @ np.linalg.inv(b)) @ b,
    ]


def pencil_inv_sqrt_apply(a, b, y):
    """Dense evaluation of ``(a^-1 b)^(-1/2) y`` for SPD ``a``, ``b``.

    With ``c = a^(-1/2) b a^(-1/2)`` the quotient satisfies
    ``a^-1 b = a^(-1/2) c a^(1/2)``, so the inverse square root is
    ``a^(-1/2) c^(-1/2) a^(1/2)``.  Serves as the oracle for the iterative
    Krylov solver.
    """
    a = check_symmetric(a)
    _check_cap(a)
    wa, va = _spd_eig(a, "pencil (first operand)")
    a_half = (va * np.sqrt(wa)) @ va.T
    a_inv_half = (va / np.sqrt(wa)) @ va.T
    c = a_inv_half @ b @ a_inv_half
    c = 0.5 * (c + c.T)
    return a_inv_half @ (dense_inv_sqrt(c) @ (a_half @ np.asarray(y, dtype=np.float64)))


def subspace_angle(u, v):
    """Largest principal angle (radians) between the column spans of u and v."""
    qu = np.linalg.qr(np.atleast_2d(u.T).T)[0]
    qv = np.linalg.qr(np.atleast_2d(v.T).T)[0]
    if qu.shape[1] != qv.shape[1]:
        raise ValueError("subspaces must have equal dimension")
    s = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))
