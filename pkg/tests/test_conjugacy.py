import numpy as np
import pytest
from gmpy2 import mpq

from triconj.conjugacy import (GermSequence, basin_chart, block, check_ord, choose_theta,
                               cocycle_triangularize, conjugation_defect, counterexample_section4,
                               formal_conjugate, germ_conjugate, loglog_slope, normal_form_violations,
                               rescale, residual_report, select_m0, spectral_bound, switching_sequence,
                               tetration, tetration_gap_log10)
from triconj.conjugacy.cocycle import diagonal_unitary, random_unitary
from triconj.conjugacy.pipeline import (ADD, MULTIPLY, block_kind, default_u0_grid,
                                        degree2_coefficients, scalar_recursion)
from triconj.control import subexponential_test
from triconj.errors import CertificateError, ConjugacyCheckError, OrdViolation
from triconj.instances import diagonal_decay, random_germ_rule, random_lower
from triconj.jets import STRICT, HomogeneousMap, Jet, compose_jets, triangularity
from triconj.sequences import ClosedForm, EventuallyPeriodic

HALF = mpq(1, 2)


def jet1(*coeffs):
    return Jet(1, len(coeffs), [HomogeneousMap.monomial((k + 1,), 0, mpq(c)) for k, c in enumerate(coeffs) if c])


def sorted_germs(seed, K, **kw):
    diag = [HALF, mpq(1, 4)]
    rule = random_germ_rule(2, K, np.random.default_rng(seed), diag=diag, **kw)
    return GermSequence(rule, diagonal_decay(diag))


def koenigs_input(K=4):
    """``f_n(z) = z/2 + z^2`` for every n."""
    return GermSequence([jet1(HALF, 1).with_K(K)])


# ---------------------------------------------------------------- m0, ord


@pytest.mark.parametrize("lam,mu,m0", [(0.5, 4, 2), (0.5, 1.5, 1), (0.9, 1.01, 1), (0.9, 2.0, 6)])
def test_select_m0(lam, mu, m0):
    assert select_m0(lam, mu) == m0
    assert lam ** (m0 + 1) * mu < 1
    assert m0 == 1 or lam ** m0 * mu >= 1


def test_check_ord_constant_diagonal():
    rep = check_ord(EventuallyPeriodic([(HALF, mpq(1, 4))]), 0.5, horizon=30)
    assert rep.consistent and rep.witness is None
    assert all(np.isfinite(c) for c in rep.C.values())


def test_check_ord_switching_violation():
    diag = switching_sequence((1, 3, 9, 27)).diag_rule()
    rep = check_ord(diag, 0.5, horizon=30)
    assert rep.verdict == "violated"
    n, l, lhs = rep.witness
    assert lhs == 1


def test_check_ord_one_dimensional():
    rule = ClosedForm(lambda n: (mpq(1, 2 + n % 3),))
    assert check_ord(rule, 0.5, horizon=30).consistent


def test_check_ord_zero_entry():
    with pytest.raises(ZeroDivisionError):
        check_ord(EventuallyPeriodic([(HALF, mpq(0))]), 0.5, horizon=5)


# ---------------------------------------------------------------- formal conjugacy


def test_formal_koenigs_jet():
    pair = formal_conjugate(koenigs_input(), horizon=10)
    assert pair.m0 == 1
    assert pair.residuals_exact_zero()
    assert pair.h[0] == jet1(1, 4, mpq(32, 3), mpq(192, 7))
    assert all(pair.g_jets[n] == jet1(HALF).with_K(4) for n in range(5))


def test_formal_koenigs_degree_two_equation():
    # c2 a^2 + 1 = a c2 at a = 1/2
    c2 = formal_conjugate(koenigs_input(2), horizon=3).h[0].part(2).coeffs[((2,), 0)]
    assert c2 * HALF ** 2 + 1 == HALF * c2


def test_formal_linear_input():
    L = random_lower(2, np.random.default_rng(0), diag=[HALF, mpq(1, 4)])
    f = GermSequence([Jet.linear(L, 3)])
    pair = formal_conjugate(f, horizon=6)
    assert all(h == Jet.identity(2, 3) for h in pair.h)
    assert all(pair.g[n].poly.parts == {} for n in range(6))


@pytest.mark.parametrize("seed", range(3))
def test_formal_random_d2(seed):
    f = sorted_germs(seed, 4)
    pair = formal_conjugate(f, horizon=30)
    assert pair.m0 == 2
    assert pair.residuals_exact_zero()
    assert normal_form_violations(f, pair) == []
    for n in range(30):
        g2 = pair.g_jets[n].part(2)
        assert g2.is_zero() or triangularity(g2) == STRICT
        assert pair.g_jets[n].part(3).is_zero() and pair.g_jets[n].part(4).is_zero()


def test_formal_ord_violation():
    with pytest.raises(OrdViolation) as info:
        formal_conjugate(switching_sequence((1, 3, 9, 27)), K=2, horizon=10, ord_horizon=30)
    assert info.value.details["lhs"] == "1"


def test_formal_lambdamu_violation():
    f = sorted_germs(1, 3)
    with pytest.raises(CertificateError) as info:
        formal_conjugate(f, m0=1)
    assert info.value.condition == "lambdamu-violation"


def test_formal_closed_form_matches_periodic():
    base = jet1(HALF, 1).with_K(3)
    series = formal_conjugate(GermSequence(ClosedForm(lambda n: base)), horizon=8, tol=1e-13)
    exact = formal_conjugate(koenigs_input(3), horizon=8)
    for n in range(8):
        for k in (2, 3):
            got = complex(series.h[n].part(k).coeffs[((k,), 0)])
            want = complex(exact.h[n].part(k).coeffs[((k,), 0)])
            assert abs(got - want) < 1e-9
    assert series.max_residual() < 1e-9


def test_formal_high_degree_uniqueness():
    L = np.array([[0.5, 0.0], [0.25, 0.25]])
    quad = HomogeneousMap.monomial((0, 2), 0, 1.0) + HomogeneousMap.monomial((1, 1), 1, -0.5)
    rule = ClosedForm(lambda n: Jet(2, 3, [Jet.linear(L * (1 + 0.1 * np.sin(n)) / 1.1).part(1), quad]))
    f = GermSequence(rule)
    a = formal_conjugate(f, horizon=6, tol=1e-6, check=False)
    b = formal_conjugate(f, horizon=6, tol=1e-12, check=False)
    for n in range(6):
        for k in range(a.m0 + 1, 4):
            diff = (a.h[n].part(k) - b.h[n].part(k)).max_coeff()
            assert abs(diff) <= 1e-5


def test_subexponential_outputs():
    f = sorted_germs(4, 3)
    pair = formal_conjugate(f, horizon=30)
    for k in (2, 3):
        norms = [float(abs(pair.h[n].part(k).max_coeff())) for n in range(31)]
        assert subexponential_test(norms).is_subexp_consistent


# ---------------------------------------------------------------- transforms


@pytest.mark.parametrize("k,n,factor", [(1, 0, 2), (1, 5, 2), (2, 0, 2), (2, 1, 1), (3, 1, mpq(1, 2))])
def test_rescale_factors(k, n, factor):
    p = HomogeneousMap.monomial((k,), 0, mpq(1))
    out = rescale([Jet(1, 3, [p])] * (n + 1), mpq(2))[n]
    assert out.part(k) == p.scale(factor)


def test_rescale_germ_sequence_decay():
    f = koenigs_input()
    g = rescale(f, 1.5)
    assert g.decay.lam == pytest.approx(0.75) and g.decay.mu == pytest.approx(2 / 1.5)


def test_rescaled_pair_solves_rescaled_equation():
    f = sorted_germs(5, 3)
    pair = formal_conjugate(f, horizon=10)
    theta = mpq(5, 4)
    ft = rescale(f, theta)
    gt = rescale(pair.g_jets, theta)
    ht = rescale(pair.h_rule, theta, kind="conjugacy")
    res = residual_report(ft, gt, ht, 10, 3)
    assert all(v == 0 for v in res.values())


def test_block_identity_and_linear():
    rng = np.random.default_rng(6)
    mats = [random_lower(2, rng, diag=[HALF, mpq(1, 4)]) for _ in range(3)]
    rule = EventuallyPeriodic(mats[1:], mats[:1])
    one = block(rule, 1)
    assert all(np.all(one[n] == rule[n]) for n in range(8))
    two = block(rule, 2)
    assert all(np.all(two[n] == rule[2 * n + 1] @ rule[2 * n]) for n in range(8))


def test_block_germ_sequence():
    # per-step norm decay (c = 1) so the blocked norm audit is rigorous
    rule = random_germ_rule(2, 3, np.random.default_rng(7), diag=[HALF, mpq(1, 4)], preperiod=1, period=2)
    f = GermSequence(rule)
    fb = block(f, 2)
    assert fb.decay.lam == pytest.approx(f.decay.lam ** 2)
    for n in range(4):
        assert fb[n] == compose_jets(f[2 * n + 1], f[2 * n], 3)
        assert float(np.max(np.sum(np.abs(fb.L(n).astype(float)), axis=1))) <= f.decay.lam ** 2 + 1e-12


# ---------------------------------------------------------------- germ level


def test_germ_identity():
    f = GermSequence([jet1(HALF).with_K(3)])
    rep = germ_conjugate(f, f, [Jet.identity(1, 2)], 2, K_ext=4, horizon=5)
    assert all(h == Jet.identity(1, 4) for h in rep.h)
    assert max(rep.sup_residual) == 0


def test_germ_koenigs_slope():
    f = koenigs_input(2)
    g = GermSequence([jet1(HALF).with_K(2)])
    rep = germ_conjugate(f, g, [jet1(1, 4)], 2, K_ext=6, horizon=10)
    assert rep.slope >= 6.5
    assert all(v == 0 for (n, j), v in rep.degree_residuals.items() if j <= rep.K_ext)


def test_germ_bad_jet_conjugacy():
    f = koenigs_input(2)
    g = GermSequence([jet1(HALF).with_K(2)])
    with pytest.raises(ConjugacyCheckError):
        germ_conjugate(f, g, [jet1(1, 3)], 2, K_ext=4)


def test_germ_volata_condition():
    f = GermSequence([Jet.linear(random_lower(2, np.random.default_rng(0), diag=[HALF, mpq(1, 4)]), 2)])
    with pytest.raises(CertificateError) as info:
        germ_conjugate(f, f, [Jet.identity(2, 2)], 1)
    assert info.value.condition == "volata"


def test_germ_random_constructed_pair():
    f = sorted_germs(8, 4)
    pair = formal_conjugate(f, K=2, horizon=10)
    rep = germ_conjugate(f, GermSequence(pair.g_jets), pair.h_rule, 2, K_ext=4, horizon=10)
    assert all(v == 0 for (n, j), v in rep.degree_residuals.items() if j <= rep.K_ext)
    assert rep.slope >= 4.5


def test_loglog_slope():
    r = [0.1, 0.05, 0.025]
    assert loglog_slope(r, [x ** 3 for x in r]) == pytest.approx(3)


def test_spectral_one_dimensional():
    out = spectral_bound(EventuallyPeriodic([np.array([[0.5]])]), 2)
    assert out["rho_estimate"] == pytest.approx(0.25, abs=1e-12)
    assert out["analytic_bound"] == pytest.approx(0.25)
    assert out["holds"]


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_spectral_scaled_identity(lam):
    for k in (1, 2, 4):
        out = spectral_bound(EventuallyPeriodic([lam * np.eye(2)]), k, lam=lam, mu=1 / lam)
        assert out["rho_estimate"] == pytest.approx(lam ** k, abs=1e-8)
        assert out["holds"]


def test_spectral_small_radius():
    out = spectral_bound(EventuallyPeriodic([np.array([[0.5]])]), 7)
    assert out["rho_estimate"] < 0.01 and out["holds"]


def test_spectral_periodic_diagonal():
    L = [np.diag([0.5, 0.5j]), np.diag([0.25, 0.5])]
    out = spectral_bound(EventuallyPeriodic(L), 2)
    assert out["holds"]
    assert out["rho_estimate"] == pytest.approx(out["rho_eig"], rel=1e-8)


# ---------------------------------------------------------------- cocycle


def test_cocycle_lower_triangular_input():
    rng = np.random.default_rng(0)
    mats = [random_lower(3, rng, exact=False, complex_=True) for _ in range(10)]
    tri = cocycle_triangularize(mats, horizon=10)
    for U in tri.U:
        assert np.allclose(U, np.diag(np.diag(U)), atol=1e-12)
    for M, L in zip(mats, tri.L):
        assert np.allclose(np.abs(np.diag(M)), np.abs(np.diag(L)), atol=1e-12)


def test_cocycle_swap_matrix():
    tri = cocycle_triangularize([np.array([[0.0, 1.0], [1.0, 0.0]])], horizon=1)
    assert np.allclose(tri.abs_diagonals()[0], [1, 1])


def test_cocycle_random_structure_and_gauge():
    rng = np.random.default_rng(1)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(10)]
    rule = EventuallyPeriodic(mats)
    U0 = random_unitary(3, rng)
    a = cocycle_triangularize(rule, U0, horizon=50)
    b = cocycle_triangularize(rule, diagonal_unitary(rng.random(3) * 6) @ U0, horizon=50)
    assert a.unitarity_defect <= 1e-12
    assert conjugation_defect(rule, a) <= 1e-12
    assert all(np.all(np.triu(L, 1) == 0) for L in a.L)
    assert np.max(np.abs(a.abs_diagonals() - b.abs_diagonals())) <= 1e-12
    assert a.lyapunov().shape == (3,)


def test_cocycle_singular():
    with pytest.raises(np.linalg.LinAlgError):
        cocycle_triangularize([np.zeros((2, 2))], horizon=1)


# ---------------------------------------------------------------- pipeline


@pytest.mark.parametrize("lam,mu,m0", [(0.5, 1.5, 1), (0.5, 4.0, 2)])
def test_choose_theta(lam, mu, m0):
    theta = choose_theta(lam, mu, m0)
    assert 1 < theta < 1 / lam
    assert theta ** m0 * lam ** (m0 + 1) * mu <= 0.95 + 1e-12
    assert theta * lam <= 0.95 + 1e-12
    up = theta * 1.001
    assert up ** m0 * lam ** (m0 + 1) * mu > 0.95 or up * lam > 0.95


def test_basin_chart_linearizable():
    rep = basin_chart(koenigs_input(4), K=4, horizon=10)
    assert rep.m0 == 1
    assert rep.to_json()["g_linear"]
    assert all(rep.pair.g[n].poly.parts == {} for n in range(10))
    assert rep.stages == ["ord", "m0", "theta", "formal", "germ", "iterate"]
    assert rep.iterate.bounded


def test_basin_chart_random_d2():
    f = sorted_germs(11, 4)
    rep = basin_chart(f, K=4, horizon=20)
    assert rep.m0 == 2
    assert rep.germ.slope >= 4.5
    assert len(rep.stages) == 6


def test_basin_chart_ord_stage():
    with pytest.raises(OrdViolation) as info:
        basin_chart(switching_sequence((1, 3, 9, 27)), K=2)
    assert info.value.details["stage"] == "ord"


def test_block_kind():
    s = (1, 3, 9)
    assert [block_kind(s, n) for n in (0, 1, 2, 3, 8, 9, 10)] == [ADD, ADD, ADD, MULTIPLY, MULTIPLY, ADD, ADD]


def test_scalar_recursion_hand_example():
    u = scalar_recursion((0, 3, 6), 0, 6)
    assert u[3] == 3 and u[6] == 1536


def test_degree2_recursion_matches_scalar():
    s = (1, 3, 9)
    seq = switching_sequence(s)
    for u0 in (0, mpq(-3), mpq(5, 7)):
        assert degree2_coefficients(seq, u0, 12) == scalar_recursion(s, u0, 12)


def test_counterexample_default():
    rep = counterexample_section4()
    assert rep.growth_ok and rep.all_flagged and rep.recursion_matches
    assert len(rep.u0_values) == 20 and rep.u0_values == default_u0_grid()
    assert not rep.ord_report.consistent and rep.ord_report.witness[2] == 1


def test_counterexample_cancelling_u0():
    # u0 = -1 cancels at the first add block but the sequence still grows later
    rep = counterexample_section4((1, 3, 9, 27), u0_values=[-1, mpq(-3)])
    assert rep.all_flagged


def test_tetration():
    assert [tetration(k) for k in range(3)] == [1, 10, 10 ** 10]
    with pytest.raises(OverflowError):
        tetration(3)
    # 8^s / 10^s -> 0 for the successor 10^s of s
    gaps = [tetration_gap_log10(s) for s in (1, 10, 100)]
    assert gaps == sorted(gaps, reverse=True) and gaps[-1] < -9
