"""Unitary change of coordinates that makes a linear cocycle lower triangular."""
from dataclasses import dataclass

import numpy as np

from ..sequences import as_rule


@dataclass
class Triangularization:
    U: list
    L: list
    unitarity_defect: float

    def abs_diagonals(self):
        return np.array([np.abs(np.diag(L)) for L in self.L])

    def lyapunov(self):
        """Running means of ``log |L_n(j,j)|`` over the horizon, one per coordinate."""
        logs = np.log(self.abs_diagonals())
        return logs.mean(axis=0)


def ql(B):
    """``B = Q L`` with ``Q`` unitary and ``L`` lower triangular (via QR of the flipped matrix)."""
    J = np.eye(B.shape[0])[::-1]
    Q, R = np.linalg.qr(J @ B @ J)
    return J @ Q @ J, J @ R @ J


def cocycle_triangularize(M_rule, U0=None, horizon=50):
    """Unitaries ``U_n`` with ``L_n = U_{n+1} M_n U_n^*`` lower triangular.

    Starting from ``U_0``, each step takes the QL factorization
    ``M_n U_n^* = Q L`` and sets ``U_{n+1} = Q^*``. Entries above the diagonal
    of ``L_n`` are set to exact zeros.

    Parameters
    ----------
    M_rule : rule, list or callable of invertible (d, d) arrays
    U0 : (d, d) unitary array, optional
        Defaults to the identity.
    """
    rule = as_rule(M_rule)
    M0 = np.asarray(rule[0], dtype=complex)
    d = M0.shape[0]
    U = np.eye(d, dtype=complex) if U0 is None else np.asarray(U0, dtype=complex)
    Us, Ls = [U], []
    defect = float(np.max(np.abs(U @ U.conj().T - np.eye(d))))
    for n in range(horizon):
        M = np.asarray(rule[n], dtype=complex)
        if np.linalg.matrix_rank(M) < d:
            raise np.linalg.LinAlgError(f"M_{n} is singular")
        Q, L = ql(M @ U.conj().T)
        L = np.tril(L)
        U = Q.conj().T
        Us.append(U)
        Ls.append(L)
        defect = max(defect, float(np.max(np.abs(U @ U.conj().T - np.eye(d)))))
    return Triangularization(U=Us, L=Ls, unitarity_defect=defect)


def conjugation_defect(M_rule, tri):
    """Largest entry of ``U_{n+1} M_n U_n^* - L_n`` over the horizon."""
    rule = as_rule(M_rule)
    out = 0.0
    for n, L in enumerate(tri.L):
        M = np.asarray(rule[n], dtype=complex)
        out = max(out, float(np.max(np.abs(tri.U[n + 1] @ M @ tri.U[n].conj().T - L))))
    return out


def diagonal_unitary(phases):
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


def random_unitary(d, rng):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
