"""Small dense linear algebra that works on exact (object) and complex arrays."""
import numpy as np
from gmpy2 import mpq

from .scalars import EXACT, FLOAT, convert, exact_abs


def mode_of(A):
    return EXACT if np.asarray(A).dtype == object else FLOAT


def as_matrix(rows, mode=None):
    """Build a square matrix from nested rows of scalars.

    In exact mode entries become ``mpq``/``QQi``; in float mode ``complex``.
    With ``mode=None`` exact is used when every entry is exact.
    """
    A = np.asarray(rows, dtype=object)
    if mode is None:
        from .scalars import is_exact
        mode = EXACT if all(is_exact(x) or isinstance(x, str) for x in A.ravel()) else FLOAT
    if mode == EXACT:
        out = np.empty(A.shape, dtype=object)
        for idx, x in np.ndenumerate(A):
            out[idx] = convert(x, EXACT)
        return out
    return np.array([[complex(convert(x, FLOAT)) for x in row] for row in A], dtype=complex)


def to_mode(A, mode):
    A = np.asarray(A)
    if mode == EXACT:
        if A.dtype == object:
            return A
        return as_matrix(A.tolist(), EXACT)
    return np.array(A.tolist(), dtype=complex) if A.dtype == object else A.astype(complex)


def eye(d, mode=EXACT):
    if mode == EXACT:
        out = np.full((d, d), mpq(0), dtype=object)
        for i in range(d):
            out[i, i] = mpq(1)
        return out
    return np.eye(d, dtype=complex)


def zeros(shape, mode=EXACT):
    if mode == EXACT:
        return np.full(shape, mpq(0), dtype=object)
    return np.zeros(shape, dtype=complex)


def is_lower(A):
    A = np.asarray(A)
    return all(A[i, j] == 0 for i in range(A.shape[0]) for j in range(i + 1, A.shape[1]))


def is_upper(A):
    return is_lower(np.asarray(A).T)


def solve(A, b):
    """Solve ``A x = b`` (vector or matrix ``b``).

    Triangular systems use substitution; otherwise exact Gaussian elimination
    with nonzero pivoting (exact) or LAPACK (float).
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.dtype != object and b.dtype != object:
        return np.linalg.solve(A, b)
    vec = b.ndim == 1
    B = b.reshape(len(b), -1).astype(object)
    n = A.shape[0]
    if is_lower(A):
        X = np.empty_like(B)
        for i in range(n):
            if A[i, i] == 0:
                raise ZeroDivisionError("singular matrix")
            acc = B[i].copy()
            for j in range(i):
                if A[i, j] != 0:
                    acc = acc - A[i, j] * X[j]
            X[i] = acc / A[i, i]
    elif is_upper(A):
        X = np.empty_like(B)
        for i in reversed(range(n)):
            if A[i, i] == 0:
                raise ZeroDivisionError("singular matrix")
            acc = B[i].copy()
            for j in range(i + 1, n):
                if A[i, j] != 0:
                    acc = acc - A[i, j] * X[j]
            X[i] = acc / A[i, i]
    else:
        M = np.concatenate([A.astype(object), B], axis=1)
        for c in range(n):
            piv = next((r for r in range(c, n) if M[r, c] != 0), None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            if piv != c:
                M[[c, piv]] = M[[piv, c]]
            M[c] = M[c] / M[c, c]
            for r in range(n):
                if r != c and M[r, c] != 0:
                    M[r] = M[r] - M[r, c] * M[c]
        X = M[:, n:]
    return X[:, 0] if vec else X


def inv(A):
    A = np.asarray(A)
    if A.dtype != object:
        return np.linalg.inv(A)
    return solve(A, eye(A.shape[0], EXACT))


def norm_inf(A):
    """Operator norm induced by the max norm: largest absolute row sum."""
    A = np.asarray(A)
    if A.ndim == 1:
        return max((float(abs(x)) for x in A), default=0.0)
    if A.dtype != object:
        return float(np.max(np.sum(np.abs(A), axis=1))) if A.size else 0.0
    return max(float(sum(abs(x) for x in row)) for row in A)


def norm_inf_exact(A):
    """Exact row-sum norm when every entry has a rational modulus, else a float."""
    A = np.asarray(A)
    rows = A if A.ndim > 1 else A[None, :]
    best = mpq(0)
    for row in rows:
        s = sum((exact_abs(x) for x in row), mpq(0))
        if s > best:
            best = s
    return best


def vec_max_abs(v):
    return max((float(abs(x)) for x in np.asarray(v).ravel()), default=0.0)


def diagonal(A):
    A = np.asarray(A)
    return [A[i, i] for i in range(A.shape[0])]


def dagger(A):
    return np.conj(np.asarray(A)).T
