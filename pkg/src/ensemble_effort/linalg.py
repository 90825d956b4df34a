"""Least-squares solves through a column-pivoted QR decomposition."""

import numpy as np
import scipy.linalg

from .errors import RankDeficient

RCOND = 1e-10


def lstsq_pivoted(A, b, rcond: float = RCOND) -> np.ndarray:
    """Solve ``min ||A x - b||`` for full-column-rank ``A``.

    Raises :class:`RankDeficient` when a diagonal entry of the pivoted ``R``
    falls below ``rcond`` times the largest one.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, k = A.shape
    if m < k:
        raise RankDeficient(f"{m} rows cannot determine {k} coefficients")
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or not diag[0] > 0.0 or diag[-1] < rcond * diag[0]:
        raise RankDeficient(
            f"pivoted QR: relative pivot {diag[-1] / diag[0] if diag.size and diag[0] > 0 else 0.0:.3g} < {rcond:g}"
        )
    z = scipy.linalg.solve_triangular(R, Q.T @ b, check_finite=False)
    x = np.empty(k)
    x[piv] = z
    return x


def ridge_solve(A, b, alpha: float) -> np.ndarray:
    """Solve ``(A'A + alpha I) x = A'b`` via the augmented least-squares system."""
    A = np.asarray(A, dtype=float)
    k = A.shape[1]
    if alpha == 0.0:
        return lstsq_pivoted(A, b)
    aug = np.vstack([A, np.sqrt(alpha) * np.eye(k)])
    rhs = np.concatenate([np.asarray(b, dtype=float), np.zeros(k)])
    # the augmented matrix has full column rank for any alpha > 0
    return lstsq_pivoted(aug, rhs, rcond=0.0)
