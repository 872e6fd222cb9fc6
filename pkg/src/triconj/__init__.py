"""Triangular normal forms for sequences of contracting germs.

Exact jet arithmetic, conjugacy operators on homogeneous maps, controlled
solvers for linear recursions, special triangular automorphisms and the
degree-by-degree conjugacy built from them.
"""
from .conjop import apply_conjugacy, conjugacy_matrix, quoz_bound, svil_expansion
from .control import CocycleRule, DecayData, solve_subexp, solve_with_control, subexponential_test
from .conjugacy import (ConjugacyPair, GermSequence, basin_chart, check_ord, cocycle_triangularize,
                        counterexample_section4, formal_conjugate, germ_conjugate, select_m0,
                        spectral_bound)
from .jets import HomogeneousMap, Jet, compose_jets, evaluate
from .triangular import SpecialTriangularAuto, compose_special, invert_special

__version__ = "0.1.0"
