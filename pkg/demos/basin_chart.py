"""Full pipeline on a random germ sequence, from ordering check to iterates.

The stages are the ordering check, the cutoff m0, the rescaling factor
theta, the formal conjugacy through m0, its germ extension and the audit of
the rescaled triangular iterates. Points of the rescaled chart then reach
the attracting neighbourhood within the predicted number of steps.
"""
import numpy as np
from gmpy2 import mpq

from triconj.conjugacy import GermSequence, basin_chart
from triconj.instances import diagonal_decay, random_germ_rule
from triconj.triangular import basin_sample


def main():
    diag = [mpq(1, 2), mpq(1, 4)]
    f = GermSequence(random_germ_rule(2, 4, np.random.default_rng(11), diag=diag), diagonal_decay(diag))
    rep = basin_chart(f, K=4, horizon=20)
    print("stages:", " -> ".join(rep.stages))
    print(f"m0 = {rep.m0}, theta = {rep.theta:.4f}, germ residual slope {rep.germ.slope:.2f}")
    print(f"iterate constant C = {rep.iterate.C_coeff:.3g}, bounded: {rep.iterate.bounded}")
    pts = np.random.default_rng(0).uniform(-50, 50, (8, 2))
    for row in basin_sample(rep.g_tilde, pts, 400):
        print(f"  z = ({row['z1_re']:7.2f}, {row['z2_re']:7.2f})  steps = {row['steps']}")


if __name__ == "__main__":
    main()
