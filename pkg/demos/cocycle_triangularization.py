"""Unitary triangularization of a random matrix cocycle in C^3.

Each step is a QL factorization, so the transformed cocycle is lower
triangular with exact zeros above the diagonal. The moduli of the diagonal
do not depend on the phases of the starting frame, and their running log
means estimate the Lyapunov exponents.
"""
import numpy as np

from triconj.conjugacy import cocycle_triangularize, conjugation_defect
from triconj.conjugacy.cocycle import diagonal_unitary, random_unitary
from triconj.sequences import EventuallyPeriodic


def main():
    rng = np.random.default_rng(3)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(5)]
    rule = EventuallyPeriodic(mats)
    U0 = random_unitary(3, rng)
    a = cocycle_triangularize(rule, U0, horizon=200)
    b = cocycle_triangularize(rule, diagonal_unitary([0.4, 1.7, -2.2]) @ U0, horizon=200)
    print(f"unitarity defect {a.unitarity_defect:.1e}, conjugation defect {conjugation_defect(rule, a):.1e}")
    print("upper entries all zero:", all(np.all(np.triu(L, 1) == 0) for L in a.L))
    print(f"|diag| change under a phase change of U_0: {np.max(np.abs(a.abs_diagonals() - b.abs_diagonals())):.1e}")
    print("Lyapunov estimates:", np.round(a.lyapunov(), 4))
    # the sum of exponents is the mean log |det| over one period
    print("mean log|det| per step:", round(float(np.mean([np.log(abs(np.linalg.det(M))) for M in mats])), 4))


if __name__ == "__main__":
    main()
