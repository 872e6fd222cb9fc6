"""Conjugacy operators ``A_L p = L^{-1} p o L`` on degree-k homogeneous maps.

``A_L`` is contravariant, ``A_{LM} = A_M A_L``, preserves the strictly
triangular subspace when ``L`` is lower triangular, and is diagonal in the
monomial basis when ``L`` is diagonal: ``z**alpha e_i`` has eigenvalue
``delta**alpha / delta_i``.
"""
from dataclasses import asdict, dataclass
from itertools import permutations, product
from math import e

import numpy as np
from gmpy2 import mpq

from . import linalg
from .errors import SizeGuardError
from .jets import (HomogeneousMap, Jet, _PowerTable, basis_position,
                   binom_count, dim_H, left_linear, multi_indices,
                   quotient_positions, right_linear)
from .scalars import EXACT, exact_abs


class TriangularMatrix:
    """Invertible lower-triangular matrix.

    Parameters
    ----------
    entries : array_like
        Square matrix; exact entries are kept exact.
    """

    __slots__ = ("entries", "_inverse")

    def __init__(self, entries):
        A = np.asarray(entries)
        if A.dtype != object and not np.iscomplexobj(A):
            A = linalg.as_matrix(A.tolist()) if np.issubdtype(A.dtype, np.integer) else A.astype(complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        if not linalg.is_lower(A):
            raise ValueError("matrix is not lower triangular")
        if any(A[i, i] == 0 for i in range(A.shape[0])):
            raise ZeroDivisionError("singular matrix: zero diagonal entry")
        self.entries = A
        self._inverse = None

    @property
    def d(self):
        return self.entries.shape[0]

    @property
    def diagonal(self):
        return linalg.diagonal(self.entries)

    def inverse(self):
        if self._inverse is None:
            self._inverse = TriangularMatrix(linalg.inv(self.entries))
        return self._inverse

    def __matmul__(self, other):
        B = other.entries if isinstance(other, TriangularMatrix) else other
        out = self.entries @ B
        return TriangularMatrix(out) if isinstance(other, TriangularMatrix) else out

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"TriangularMatrix({self.entries.tolist()})"


def _entries(L):
    return L.entries if isinstance(L, TriangularMatrix) else np.asarray(L)


def _inverse_of(L):
    return L.inverse().entries if isinstance(L, TriangularMatrix) else linalg.inv(np.asarray(L))


def apply_conjugacy(L, p):
    """``L^{-1} (p o L)``.

    >>> L = np.array([[mpq(1), mpq(0)], [mpq(1), mpq(1)]], dtype=object)
    >>> apply_conjugacy(L, HomogeneousMap.monomial((2, 0), 0)).items()
    [(((2, 0), 0), mpq(1,1)), (((2, 0), 1), mpq(-1,1))]
    """
    A = _entries(L)
    if A.shape[0] != p.d:
        raise ValueError("dimension mismatch")
    return left_linear(_inverse_of(L), right_linear(p, A))


def conjugacy_matrix(L, k, max_dim=6000):
    """Matrix of ``A_L`` on degree-k maps in :func:`triconj.jets.basis` order.

    Built column by column: ``A_L(z**alpha e_i) = (L^{-1} e_i) * (Lz)**alpha``.
    """
    A = _entries(L)
    d = A.shape[0]
    n = dim_H(d, k)
    if n > max_dim:
        raise SizeGuardError(f"dim_H({d}, {k}) = {n} exceeds size guard {max_dim}", dim=n)
    Linv = _inverse_of(L)
    mode = linalg.mode_of(A)
    M = linalg.zeros((n, n), mode)
    pos = basis_position(d, k)
    table = _PowerTable(Jet.linear(A, k), k)
    unpack = table.packer.unpack
    for alpha in multi_indices(d, k):
        P = table.get(alpha).get(k, {})
        terms = [(unpack(key), c) for key, c in P.items() if c != 0]
        for i in range(d):
            col = pos[(alpha, i)]
            for r in range(d):
                m = Linv[r, i]
                if m == 0:
                    continue
                for beta, c in terms:
                    M[pos[(beta, r)], col] += m * c
    return M


def quotient_block(M, d, k):
    """Restriction of an operator preserving the triangular subspace to the quotient."""
    Q = list(quotient_positions(d, k))
    return M[np.ix_(Q, Q)]


class QuotientClass:
    """Class ``p + T^k`` represented by its part without strictly triangular terms."""

    __slots__ = ("representative",)

    def __init__(self, p):
        from .jets import project_T
        self.representative = project_T(p)[1]

    @property
    def d(self):
        return self.representative.d

    @property
    def k(self):
        return self.representative.k

    def __eq__(self, other):
        return isinstance(other, QuotientClass) and self.representative == other.representative

    __hash__ = None

    def __repr__(self):
        return f"QuotientClass({self.representative!r})"


def _phi(moduli, k):
    """``(max_h |x_h|)^(k-1) * max_{i<=j} |x_j|/|x_i|`` for a vector of moduli."""
    top = max(moduli) ** (k - 1)
    ratio = max(moduli[j] / moduli[i] for i in range(len(moduli)) for j in range(i, len(moduli)))
    return top * ratio


def diag_quotient_bound(delta, k):
    """Bound ``c(k,d) * max|delta|^(k-1) * max_{i<=j} |delta_j|/|delta_i|``.

    >>> diag_quotient_bound([mpq(1, 2), mpq(1, 4)], 2)
    mpq(3,2)
    """
    moduli = [exact_abs(x) for x in delta]
    if any(m == 0 for m in moduli):
        raise ZeroDivisionError("zero diagonal entry")
    return binom_count(k, len(moduli)) * _phi(moduli, k)


# ---------------------------------------------------------------------------
# representation formula


def _split(L):
    """Return ``D, F, D^{-1}, Ft`` with ``L = D(I + F)`` and ``L^{-1} = (I + Ft) D^{-1}``.

    ``D F = N`` (strict lower part of ``L``) and ``D^{-1} Ft = Nt`` (strict lower
    part of ``L^{-1}``), matching ``F = D^{-1} N`` and ``Ft = D Nt``.
    """
    A = _entries(L)
    d = A.shape[0]
    mode = linalg.mode_of(A)
    Ainv = _inverse_of(L)
    D = linalg.zeros((d, d), mode)
    Dinv = linalg.zeros((d, d), mode)
    for i in range(d):
        D[i, i] = A[i, i]
        Dinv[i, i] = 1 / A[i, i]
    N = A - D
    Nt = Ainv - Dinv
    return D, Dinv @ N, Dinv, D @ Nt


def _binary_words(ell, d):
    return [w for w in product((0, 1), repeat=ell) if sum(w) < d]


def _symmetric_tensor(p):
    """Tensor ``T[i, j_1..j_k]`` with ``p_i(x) = sum T x_{j_1}...x_{j_k}``, symmetric in j."""
    d, k = p.d, p.k
    mode = EXACT if all(not isinstance(c, complex) for c in p.coeffs.values()) else "float"
    T = linalg.zeros((d,) + (d,) * k, mode)
    for (alpha, i), c in p.coeffs.items():
        letters = [j for j, a in enumerate(alpha) for _ in range(a)]
        orderings = set(permutations(letters))
        share = c / len(orderings)
        for idx in orderings:
            T[(i,) + idx] += share
    return T


def _tensor_to_map(T, d, k):
    coeffs = {}
    for idx, c in np.ndenumerate(T):
        if c == 0:
            continue
        i, js = idx[0], idx[1:]
        alpha = tuple(js.count(j) for j in range(d))
        key = (alpha, i)
        coeffs[key] = coeffs[key] + c if key in coeffs else c
    return HomogeneousMap(d, k, coeffs, check=False)


def _contract(T, axis, A):
    """Substitute ``x_axis = A y``: contract tensor slot ``axis`` with ``A``."""
    moved = np.moveaxis(T, axis, -1)
    out = np.tensordot(moved, A, axes=([moved.ndim - 1], [0]))
    return np.moveaxis(out, -1, axis)


def svil_expansion(L_list, p, arrangement="conjugacy"):
    """Expand ``A_{L_ell ... L_1} p`` as a finite sum over binary words.

    With ``L_n = D_n + N_n`` and ``L_n^{-1} = D_n^{-1} + Nt_n`` the products
    ``L_ell ... L_1`` and ``L_1^{-1} ... L_ell^{-1}`` are sums over words
    ``w`` in ``{0,1}^ell`` with fewer than d ones (products with d strictly
    lower factors vanish). The result is::

        sum_{beta, alpha^1..alpha^k} P^-(beta) p[P^+(alpha^1), ..., P^+(alpha^k)]

    where ``P^+(w) = D_ell F_ell^{w_ell} ... D_1 F_1^{w_1}`` and
    ``P^-(w) = D_1^{-1} Ft_1^{w_1} ... D_ell^{-1} Ft_ell^{w_ell}``, and the
    bracket is the symmetric k-linear form of ``p``.

    Parameters
    ----------
    L_list : list of matrices
        ``[L_1, ..., L_ell]``; ``L_1`` acts first.
    arrangement : {"conjugacy", "swapped"}
        ``"swapped"`` puts ``P^+`` outside and ``P^-`` inside the bracket,
        which evaluates ``A`` of the inverse product instead.
    """
    if not L_list:
        raise ValueError("need at least one matrix")
    d, k = p.d, p.k
    parts = [_split(L) for L in L_list]
    ell = len(parts)
    words = _binary_words(ell, d)

    def forward(w):
        out = None
        for n in range(ell):
            D, F, _, _ = parts[n]
            f = D @ F if w[n] else D
            out = f if out is None else f @ out
        return out

    def backward(w):
        out = None
        for n in range(ell):
            _, _, Dinv, Ft = parts[n]
            f = Dinv @ Ft if w[n] else Dinv
            out = f if out is None else out @ f
        return out

    P_plus = [forward(w) for w in words]
    P_minus = [backward(w) for w in words]
    if arrangement == "swapped":
        outer, inner = P_plus, P_minus
    elif arrangement == "conjugacy":
        outer, inner = P_minus, P_plus
    else:
        raise ValueError(f"unknown arrangement {arrangement!r}")

    T = _symmetric_tensor(p)
    if linalg.mode_of(inner[0]) != linalg.mode_of(T):
        T = linalg.to_mode(T.reshape(d, -1), linalg.mode_of(inner[0])).reshape(T.shape)

    # sum over k-tuples of inner words, sharing partial contractions
    def tuples_sum(tensor, slot):
        if slot > k:
            return tensor
        acc = None
        for A in inner:
            part = tuples_sum(_contract(tensor, slot, A), slot + 1)
            acc = part if acc is None else acc + part
        return acc

    bracket = tuples_sum(T, 1)
    total = None
    for B in outer:
        term = np.tensordot(B, bracket, axes=([1], [0]))
        total = term if total is None else total + term
    return _tensor_to_map(total, d, k)


# ---------------------------------------------------------------------------
# cocycle certificate


@dataclass
class QuozCertificate:
    """Explicit bound for conjugacy operators of a product on the quotient.

    ``explicit_bound = e^(k+1) rho^N c(k,d)^(N+1) ell^N partition_max`` with
    ``N = (k+1)(d-1)`` and ``rho = max_n ||L_n|| ||L_n^{-1}|| + 1``.
    """

    k: int
    d: int
    N: int
    ell: int
    rho: float
    partition_max: float
    explicit_bound: float
    quotient_norm: float
    holds: bool

    def to_json(self):
        return asdict(self)


def partition_max(diagonals, k, segments):
    """Max over ``0 = n_0 <= ... <= n_segments = ell`` of ``prod phi(segment)``.

    ``phi`` of a segment is the diagonal quantity of :func:`diag_quotient_bound`
    (without the binomial factor) evaluated on the products of diagonal
    entries over the segment; an empty segment contributes 1.
    """
    ell = len(diagonals)
    d = len(diagonals[0])
    moduli = [[exact_abs(x) for x in diag] for diag in diagonals]
    one = mpq(1) if all(isinstance(m, type(mpq(1))) for row in moduli for m in row) else 1.0
    phi = {}
    for a in range(ell + 1):
        prod_ = [one] * d
        phi[(a, a)] = one
        for b in range(a + 1, ell + 1):
            prod_ = [x * y for x, y in zip(prod_, moduli[b - 1])]
            phi[(a, b)] = _phi(prod_, k)
    best = [phi[(0, m)] for m in range(ell + 1)]
    for _ in range(segments - 1):
        best = [max(best[j] * phi[(j, m)] for j in range(m + 1)) for m in range(ell + 1)]
    return best[ell]


def quoz_bound(L_list, k, max_dim=6000):
    """Certificate bounding ``||A_{L_ell...L_1}||`` on the quotient by the triangular subspace.

    The operator norm is the row-sum norm of the quotient block in the
    coefficient max norm, computed exactly when the entries allow it.
    """
    mats = [_entries(L) for L in L_list]
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].shape[0]
    ell = len(mats)
    N = (k + 1) * (d - 1)
    rho = max(linalg.norm_inf(A) * linalg.norm_inf(_inverse_of(A)) + 1 for A in mats)
    diags = [linalg.diagonal(A) for A in mats]
    pm = float(partition_max(diags, k, N + 1))
    c = binom_count(k, d)
    bound = e ** (k + 1) * rho ** N * c ** (N + 1) * ell ** N * pm
    prod_ = mats[0]
    for A in mats[1:]:
        prod_ = A @ prod_
    Q = quotient_block(conjugacy_matrix(prod_, k, max_dim), d, k)
    qn = float(linalg.norm_inf_exact(Q)) if Q.size else 0.0
    return QuozCertificate(k=k, d=d, N=N, ell=ell, rho=float(rho), partition_max=pm,
                           explicit_bound=float(bound), quotient_norm=qn, holds=qn <= bound)
