"""Switching between halving and doubling blocks breaks subexponential growth.

The diagonal of the switching sequence violates the ordering condition, and
the degree-2 coefficient of every candidate conjugacy grows faster than any
exponential along the block schedule. Both facts are checked below, together
with the exact scalar recursion that drives the growth.
"""
from math import log10

from triconj.conjugacy import counterexample_section4
from triconj.conjugacy.pipeline import scalar_recursion


def main():
    rep = counterexample_section4()
    n, l, lhs = rep.ord_report.witness
    print(f"ordering check fails at n = {n}, l = {l} with lhs = {lhs}")
    print(f"growth matches the schedule: {rep.growth_ok}")
    print(f"all {len(rep.u0_values)} initial values flagged non-subexponential: {rep.all_flagged}")
    schedule = (1, 3, 9, 27, 81)
    u = scalar_recursion(schedule, 0, 81)
    # multiply blocks end at 9 and 81; add blocks barely move the value
    for k in schedule[1:]:
        x = abs(u[k])
        print(f"  log10|u_{k}| = {log10(int(x.numerator)) - log10(int(x.denominator)):.1f}")


if __name__ == "__main__":
    main()
