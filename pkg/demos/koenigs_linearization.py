"""Linearize the constant scalar germ f(z) = z/2 + z^2.

With a single contracting eigenvalue there are no resonances, so the normal
form is linear and the conjugacy h solves h(f(z)) = h(z)/2. The formal jets
are exact rationals; the germ extension then shows the residual shrinking
like r^7 on small disks once h is carried to degree 6.
"""
from gmpy2 import mpq

from triconj.conjugacy import GermSequence, formal_conjugate, germ_conjugate
from triconj.jets import HomogeneousMap, Jet

HALF = mpq(1, 2)


def jet1(*coeffs):
    return Jet(1, len(coeffs), [HomogeneousMap.monomial((k + 1,), 0, mpq(c)) for k, c in enumerate(coeffs) if c])


def main():
    f = GermSequence([jet1(HALF, 1).with_K(4)])
    pair = formal_conjugate(f, K=4, horizon=5)
    print(f"cutoff m0 = {pair.m0}; the normal form is linear")
    h0 = pair.h[0]
    coeffs = [h0.part(k).coeff((k,), 0) for k in range(1, 5)]
    print("h_0(z) coefficients:", ", ".join(str(c) for c in coeffs))
    print("all residuals exactly zero:", pair.residuals_exact_zero())

    g = GermSequence([jet1(HALF).with_K(2)])
    rep = germ_conjugate(GermSequence([jet1(HALF, 1).with_K(2)]), g, [jet1(1, 4)], 2, K_ext=6, horizon=10)
    for r, s in zip(rep.r_grid, rep.sup_residual):
        print(f"  r = {r:<7} sup residual = {s:.3e}")
    print(f"log-log slope {rep.slope:.2f} (degree-6 jet, so about 7 is expected)")


if __name__ == "__main__":
    main()
