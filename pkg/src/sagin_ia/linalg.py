"""
Dense complex linear-algebra kernel shared by all schemes.

Everything here is deterministic and works on plain ``numpy.ndarray``
objects. The vectorization convention is column-major throughout, which
is the convention under which

    vec(A @ X @ B) == kron(B.T, A) @ vec(X)

holds.
"""

import numpy as np

DEFAULT_RANK_TOL = 1e-10


def _check_finite(a, name="a"):
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def svd(a):
    """
    Full singular value decomposition ``a = u @ diag(s) @ v^H``.

    Parameters
    ----------
    a : ndarray, shape (m, n)

    Returns
    -------
    u : ndarray, shape (m, m)
    s : ndarray, shape (min(m, n),)
        Nonnegative, nonincreasing.
    v : ndarray, shape (n, n)
        Note that ``v`` itself is returned, not ``v^H``.
    """
    a = _check_finite(a)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    return u, s, vh.conj().T


def pinv(a, rcond=DEFAULT_RANK_TOL):
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    a = _check_finite(a)
    if not np.any(a):
        return np.zeros(a.shape[::-1], dtype=np.result_type(a, np.complex128))
    return np.linalg.pinv(a, rcond=rcond)


def kron(a, b):
    """Kronecker product with the standard block layout."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > np.iinfo(np.int64).max // 16:
        raise OverflowError("Kronecker product dimensions overflow")
    return np.kron(a, b)


def vec(a):
    """Stack the columns of ``a`` into one vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape(rows, cols, order="F")


def selector_beta(l):
    """
    0/1 matrix of shape (l**2, l) lifting a vector to vec(diag(vector)).

    Column ``p`` (1-based) has its single one at row ``q = p*l - l + p``.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    beta = np.zeros((l * l, l))
    p = np.arange(1, l + 1)
    beta[p * l - l + p - 1, p - 1] = 1.0
    return beta


def rank_tol(a, tol=DEFAULT_RANK_TOL):
    """Number of singular values above ``tol * max(s)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def null_space(a, tol=DEFAULT_RANK_TOL):
    """Orthonormal basis (columns) for the right null space of ``a``."""
    a = np.asarray(a)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=np.complex128)
    _, s, v = svd(a)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return v[:, r:]
