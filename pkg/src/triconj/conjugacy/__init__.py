"""Conjugacy of germ sequences to special triangular normal forms."""
from .cocycle import Triangularization, cocycle_triangularize, conjugation_defect
from .formal import (block, degree_decay, formal_conjugate, normal_form_violations,
                     rescale, residual_report)
from .germ import GermReport, germ_conjugate, loglog_slope, residual_order, spectral_bound
from .germs import ConjugacyPair, GermSequence
from .ord import DEFAULT_THETAS, OrdReport, check_ord, select_m0
from .pipeline import (BasinReport, CounterexampleReport, basin_chart, choose_theta,
                       counterexample_section4, switching_sequence, tetration,
                       tetration_gap_log10)
