"""Preconditioned conjugate gradients for symmetric positive definite systems."""

import numpy as np

from .errors import ConvergenceError, IndefiniteOperatorError


def _as_apply(operator):
    if callable(operator):
        return operator
    return operator.matvec


def pcg_solve(apply_m, b, preconditioner=None, tol=1e-10, max_iter=None, x0=None):
    """Solve ``M x = b`` for SPD ``M`` given as a matrix or a callable.

    Iterates until ``||M x - b|| <= tol * ||b||``.  Returns ``(x, iterations)``.

    Raises
    ------
    IndefiniteOperatorError
        On a non-positive curvature direction (the operator or the
        preconditioner is not positive definite).
    ConvergenceError
        After ``max_iter`` iterations (default ``10 * n``); carries the last
        iterate and the relative residual reached.
    """
    apply_m = _as_apply(apply_m)
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b), 0

    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        x = np.array(x0, dtype=np.float64)
        r = b - apply_m(x)
    if np.linalg.norm(r) <= tol * b_norm:
        return x, 0

    z = preconditioner.solve(r) if preconditioner is not None else r.copy()
    p = z.copy()
    rz = float(r @ z)
    if rz <= 0.0:
        raise IndefiniteOperatorError("preconditioner produced a non-positive inner product")

    for k in range(1, max_iter + 1):
        mp = apply_m(p)
        p_mp = float(p @ mp)
        if p_mp <= 0.0:
            raise IndefiniteOperatorError(
                f"non-positive curvature {p_mp:.3e} at iteration {k}; operator is not SPD"
            )
        alpha = rz / p_mp
        x += alpha * p
        r -= alpha * mp
        if np.linalg.norm(r) <= tol * b_norm:
            return x, k
        z = preconditioner.solve(r) if preconditioner is not None else r
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            raise IndefiniteOperatorError("preconditioner produced a non-positive inner product")
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new

    raise ConvergenceError(
        f"pcg did not reach tol={tol:g} within {max_iter} iterations "
        f"(relative residual {np.linalg.norm(r) / b_norm:.3e})",
        iterate=x,
        residual=float(np.linalg.norm(r) / b_norm),
        iterations=max_iter,
    )
