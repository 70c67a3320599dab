"""
Small dense linear solves used by the bid-function auctions.

Systems here are at most a few buyers wide, so plain Gaussian elimination
is used instead of a LAPACK call; the singular-pivot threshold comes from
``PIVOT_TOLERANCE``.
"""
import numpy as np

from clarke.exceptions import ShapeError, SingularSystem
from clarke.settings import clarke_settings

PIVOTING_STRATEGIES = ("partial", "scaled")


def gauss_solve(a, b, pivoting: str = "partial", tol: float = None) -> np.ndarray:
    """
    Solve ``a @ x = b`` by Gaussian elimination with row pivoting.

    :param pivoting: ``"partial"`` picks the largest pivot in the column,
        ``"scaled"`` divides each candidate by the largest entry of its row first.
    :raises clarke.exceptions.SingularSystem: when a pivot falls below ``tol``.
    """
    if pivoting not in PIVOTING_STRATEGIES:
        raise ValueError("Unknown pivoting strategy '{0}'.".format(pivoting))
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    if a.shape != (n, n):
        raise ShapeError("Expected a {0}x{0} matrix, got {1}.".format(n, a.shape))
    if n == 0:
        return b
    if tol is None:
        tol = clarke_settings.PIVOT_TOLERANCE

    scale = np.abs(a).max(axis=1) if pivoting == "scaled" else np.ones(n)
    if np.any(scale <= tol):
        raise SingularSystem("Matrix has a zero row.")

    for k in range(n - 1):
        p = int(np.argmax(np.abs(a[k:, k]) / scale[k:])) + k
        if abs(a[p, k]) <= tol:
            raise SingularSystem("Matrix is singular at column {0}.".format(k))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
            scale[[k, p]] = scale[[p, k]]
        for i in range(k + 1, n):
            if a[i, k] != 0.0:
                lam = a[i, k] / a[k, k]
                a[i, k + 1 :] -= lam * a[k, k + 1 :]
                a[i, k] = 0.0
                b[i] -= lam * b[k]
    if abs(a[n - 1, n - 1]) <= tol:
        raise SingularSystem("Matrix is singular at column {0}.".format(n - 1))

    # back substitution
    for k in range(n - 1, -1, -1):
        b[k] = (b[k] - np.dot(a[k, k + 1 :], b[k + 1 :])) / a[k, k]
    return b
