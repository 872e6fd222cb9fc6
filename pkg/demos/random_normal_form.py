"""Triangular normal form of a random eventually periodic germ sequence in C^2.

The linear parts share the diagonal (1/2, 1/4), so lam = 1/2 and mu = 4 and
the cutoff is m0 = 2. Degree-2 terms that cannot be removed land in the
strictly triangular slot (here the resonant monomial z1^2 in the second
component); everything above degree 2 is conjugated away.
"""
import numpy as np
from gmpy2 import mpq

from triconj.conjugacy import GermSequence, formal_conjugate, normal_form_violations
from triconj.instances import diagonal_decay, random_germ_rule


def main():
    diag = [mpq(1, 2), mpq(1, 4)]
    rule = random_germ_rule(2, 4, np.random.default_rng(7), diag=diag)
    f = GermSequence(rule, diagonal_decay(diag))
    print(f"preperiod {rule.preperiod}, period {rule.period}")
    pair = formal_conjugate(f, K=4, horizon=20)
    print(f"m0 = {pair.m0}, closure = {pair.closure}")
    for n in range(3):
        g2 = pair.g_jets[n].part(2)
        terms = {f"z^{alpha} -> e{i + 1}": str(c) for (alpha, i), c in sorted(g2.coeffs.items())}
        print(f"  g_{n} degree 2:", terms or "zero")
    print("shape violations:", normal_form_violations(f, pair))
    print("all residuals exactly zero:", pair.residuals_exact_zero())


if __name__ == "__main__":
    main()
