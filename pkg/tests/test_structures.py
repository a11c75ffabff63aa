import numpy as np
import pytest

from oddgeom import pointwise as P
from oddgeom.darboux import DarbouxSpec, darboux_contravariant, darboux_covariant
from oddgeom.expr import Chart, Sampler, nodes as N, parse_expr
from oddgeom.exterior import KForm, KVector
from oddgeom.structures import (ContravariantPair, CovariantPair, NonRegularError,
                                PairInvariantError, check_dOmega_decomposition,
                                check_involutivity, check_musical_identities, check_splittings,
                                classify_contravariant, classify_covariant,
                                dual_of_contravariant, dual_of_covariant, fundamental_form_residual,
                                fundamental_one_form)


def _omega(ch, text):
    return KForm.from_list(ch, [1.0, parse_expr(text, ch), 0.0])


def _W(ch):
    return KForm.basis(ch, "x1", "x2")


def _jacobi_pair(ch):
    E = KVector.basis(ch, "t")
    L = KVector.from_antisymmetric(ch, 2, [((2, 1), N.ONE), ((0, 2), N.neg(N.sym("x2")))])
    return E, L


def test_classify_covariant_examples(ch3, s3):
    cos = classify_covariant(CovariantPair(KForm.basis(ch3, "t"), _W(ch3)), s3)
    assert set(cos.labels) == {"pre-cosymplectic", "cosymplectic", "almost-cosymplectic-contact"}
    con = classify_covariant(CovariantPair(_omega(ch3, "-1*x2"), _W(ch3)), s3)
    assert set(con.labels) == {"pre-cosymplectic", "contact", "almost-cosymplectic-contact"}
    # d(dt + x2 dx1) = -dx1^dx2: neither closed nor equal to Omega
    acc = classify_covariant(CovariantPair(_omega(ch3, "x2"), _W(ch3)), s3)
    assert set(acc.labels) == {"pre-cosymplectic", "almost-cosymplectic-contact"}
    assert acc.residuals["d_omega"] > 0.1
    assert acc.rank == {"r": 1, "n": 1, "regular": True}


def test_classify_covariant_non_regular():
    ch = Chart(("t", "x1", "x2", "x3", "x4"))
    s = Sampler.uniform(ch, count=8)
    rep = classify_covariant(CovariantPair(KForm.basis(ch, "t"), KForm.basis(ch, "x1", "x3")), s)
    assert rep.labels == () and rep.rank["regular"] is False
    assert any("non-regular" in n for n in rep.notes)


def test_classify_covariant_rejects_degenerate(ch3, s3):
    with pytest.raises(PairInvariantError):
        classify_covariant(CovariantPair(KForm.basis(ch3, "x1"), _W(ch3)), s3)


def test_classify_contravariant_examples(ch3, s3):
    E = KVector.basis(ch3, "t")
    L = KVector.from_antisymmetric(ch3, 2, [((2, 1), N.ONE)])
    rep = classify_contravariant(ContravariantPair(E, L), s=s3)
    assert {"pre-coPoisson", "coPoisson"} <= set(rep.labels)
    assert "Jacobi" not in rep.labels
    E, L = _jacobi_pair(ch3)
    rep = classify_contravariant(ContravariantPair(E, L), _omega(ch3, "-1*x2"), s3)
    assert set(rep.labels) == {"pre-coPoisson", "Jacobi", "almost-coPoisson-Jacobi"}


def test_contravariant_rejects_zero_E_or_Lambda(ch3, s3):
    L = KVector.from_antisymmetric(ch3, 2, [((2, 1), N.ONE)])
    with pytest.raises(PairInvariantError, match="E vanishes"):
        classify_contravariant(ContravariantPair(KVector.zero(ch3, 1), L), s=s3)
    with pytest.raises(PairInvariantError, match="Lambda vanishes"):
        classify_contravariant(ContravariantPair(KVector.basis(ch3, "t"), KVector.zero(ch3, 2)), s=s3)


def test_even_chart_rejected():
    ch = Chart(("x1", "x2"))
    with pytest.raises(ValueError, match="odd"):
        CovariantPair(KForm.basis(ch, "x1"), KForm.basis(ch, "x1", "x2"))


def test_dual_of_cosymplectic(ch3, s3):
    d = dual_of_covariant(CovariantPair(KForm.basis(ch3, "t"), _W(ch3)), s3)
    np.testing.assert_allclose(d.E.value, np.tile([1.0, 0, 0], (32, 1)), atol=1e-14)
    # Omega(a#, b#) = -Lambda(a, b) fixes Lambda = d_x2 ^ d_x1 here
    np.testing.assert_allclose(d.Lambda.value[:, 1, 2], -1.0, atol=1e-14)
    assert max(d.residuals.values()) <= 1e-12


def test_dual_of_contact_is_the_jacobi_pair(ch3, s3):
    d = dual_of_covariant(CovariantPair(_omega(ch3, "-1*x2"), _W(ch3)), s3)
    E, L = _jacobi_pair(ch3)
    assert P.residual(d.E, P.tabulate(E, s3.points)) <= 1e-12
    assert P.residual(d.Lambda, P.tabulate(L, s3.points)) <= 1e-12
    rep = classify_contravariant(d.contravariant, s=s3)
    assert "Jacobi" in rep.labels


def test_dual_rejects_non_regular():
    ch = Chart(("t", "x1", "x2", "x3", "x4"))
    s = Sampler.uniform(ch, count=8)
    with pytest.raises(NonRegularError):
        dual_of_covariant(CovariantPair(KForm.basis(ch, "t"), KForm.basis(ch, "x1", "x3")), s)
    t = darboux_contravariant(DarbouxSpec.random(2, 1, np.random.default_rng(0)))
    with pytest.raises(NonRegularError):
        dual_of_contravariant(t.pair, s)
    with pytest.raises(NonRegularError):
        fundamental_one_form(t.pair, s)


def test_dual_of_constant_contravariant(ch3, s3):
    E = KVector.basis(ch3, "t")
    L = KVector.from_antisymmetric(ch3, 2, [((2, 1), N.ONE)])
    d = dual_of_contravariant(ContravariantPair(E, L), s3)
    assert P.residual(d.omega, P.tabulate(KForm.basis(ch3, "t"), s3.points)) <= 1e-14
    assert P.residual(d.Omega, P.tabulate(_W(ch3), s3.points)) <= 1e-14


def test_fundamental_one_form(ch3, s3):
    E = KVector.basis(ch3, "t")
    L = KVector.from_antisymmetric(ch3, 2, [((2, 1), N.ONE)])
    w = fundamental_one_form(ContravariantPair(E, L), s3)
    assert P.residual(w, P.tabulate(KForm.basis(ch3, "t"), s3.points)) <= 1e-14
    E, L = _jacobi_pair(ch3)
    p = ContravariantPair(E, L)
    w = fundamental_one_form(p, s3)
    assert P.residual(w, P.tabulate(_omega(ch3, "-1*x2"), s3.points)) <= 1e-12
    assert fundamental_form_residual(p, w, s3) <= 1e-12


def _random_pairs(rng, count):
    for k in range(count):
        n = 1 + k % 2
        spec = [DarbouxSpec.random(n, n, rng), DarbouxSpec.contact(n),
                DarbouxSpec.cosymplectic(n)][k % 3]
        yield spec


def test_duality_round_trip_and_identities(rng):
    for spec in _random_pairs(rng, 6):
        ch = spec.chart
        s = Sampler.uniform(ch, seed=5, count=16)
        cov = darboux_covariant(spec)
        d = dual_of_covariant(cov, s)
        back = dual_of_contravariant(d.contravariant, s)
        assert P.residual(back.omega, d.omega) <= 1e-8
        assert P.residual(back.Omega, d.Omega) <= 1e-8
        assert max(check_musical_identities(d).values()) <= 1e-10
        assert check_splittings(d, s, rng) <= 1e-10


def test_equivalence_theorem_over_generator(rng):
    # mix the three families with random perturbations of the omega functions
    for k in range(9):
        n = 1 + k % 2
        base = [DarbouxSpec.random(n, n, rng), DarbouxSpec.contact(n), DarbouxSpec.cosymplectic(n)][k % 3]
        if k >= 6:
            pert = DarbouxSpec.random(n, n, rng, scale=0.3)
            base = DarbouxSpec(n, n, tuple(N.add(a, b) for a, b in
                                             zip(base.omega_funcs, pert.omega_funcs)))
        s = Sampler.uniform(base.chart, seed=k, count=16)
        cov = classify_covariant(darboux_covariant(base), s)
        d = dual_of_covariant(darboux_covariant(base), s)
        con = classify_contravariant(d.contravariant, d.omega, s)
        assert cov.has("almost-cosymplectic-contact") == con.has("almost-coPoisson-Jacobi")
        assert cov.has("cosymplectic") == con.has("coPoisson")
        assert cov.has("contact") == con.has("Jacobi")


def test_equivalence_when_Omega_is_not_closed():
    ch = Chart(("t", "x1", "x2", "x3", "x4"))
    s = Sampler.uniform(ch, lo=-0.5, hi=0.5, seed=2, count=16)
    W = KForm(ch, 2, {(1, 3): parse_expr("1 + t*x2", ch), (2, 4): 1.0})
    pair = CovariantPair(KForm.from_list(ch, [1.0, parse_expr("x3", ch), 0, 0, 0]), W)
    cov = classify_covariant(pair, s)
    d = dual_of_covariant(pair, s)
    con = classify_contravariant(d.contravariant, d.omega, s)
    assert not cov.has("almost-cosymplectic-contact")
    assert not con.has("almost-coPoisson-Jacobi")
    assert not con.has("Jacobi") and not con.has("coPoisson")


def test_dOmega_decomposition(rng):
    ch = Chart(("t", "x1", "x2"))
    s = Sampler.uniform(ch, seed=1, count=16)
    cos = CovariantPair(KForm.basis(ch, "t"), _W(ch))
    assert check_dOmega_decomposition(cos, dual_of_covariant(cos, s), s, rng=rng) == 0.0
    con = darboux_covariant(DarbouxSpec.contact(1))
    assert check_dOmega_decomposition(con, dual_of_covariant(con, s), s, rng=rng) <= 1e-9
    for n in (1, 2):
        spec = DarbouxSpec.random(n, n, rng)
        s = Sampler.uniform(spec.chart, seed=n, count=16)
        cov = darboux_covariant(spec)
        assert check_dOmega_decomposition(cov, darboux_contravariant(spec), s, rng=rng) <= 1e-8


def test_dOmega_decomposition_holds_for_non_closed_Omega(rng):
    # every 2-form is closed in dimension 3, so twist Omega in dimension 5
    ch = Chart(("t", "x1", "x2", "x3", "x4"))
    s = Sampler.uniform(ch, lo=-0.5, hi=0.5, seed=1, count=16)
    W = KForm(ch, 2, {(1, 3): parse_expr("1 + t*x2", ch), (2, 4): 1.0})
    cov = CovariantPair(KForm.basis(ch, "t"), W)
    assert classify_covariant(cov, s).residuals["d_Omega"] > 0.1
    assert check_dOmega_decomposition(cov, dual_of_covariant(cov, s), s, rng=rng) <= 1e-8


@pytest.mark.parametrize("n,s_", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_involutivity_formulas(n, s_):
    rng = np.random.default_rng(n * 10 + s_)
    t = darboux_contravariant(DarbouxSpec.random(n, s_, rng))
    s = Sampler.uniform(t.chart, seed=3, count=16)
    res = check_involutivity(t, s, rng, trials=2)
    assert res["E_alpha_sharp"] <= 1e-8
    assert res["alpha_sharp_beta_sharp"] <= 1e-8
    res = check_involutivity(t, s, rng, trials=1, closed=False)
    assert res["E_alpha_sharp"] <= 1e-8
    assert res["alpha_sharp_beta_sharp"] <= 1e-8


def test_involutivity_quoted_variant_fails():
    rng = np.random.default_rng(3)
    t = darboux_contravariant(DarbouxSpec.random(2, 2, rng))
    s = Sampler.uniform(t.chart, seed=3, count=16)
    res = check_involutivity(t, s, rng, trials=2)
    assert res["E_alpha_sharp_printed"] > 1e-3
    assert res["alpha_sharp_beta_sharp_printed"] > 1e-3


def test_acpj_axioms_of_darboux_triple(rng):
    t = darboux_contravariant(DarbouxSpec.random(2, 1, rng))
    s = Sampler.uniform(t.chart, seed=3, count=16)
    assert max(t.axiom_residuals(s).values()) <= 1e-12
    rep = classify_contravariant(t.pair, t.omega, s)
    assert "almost-coPoisson-Jacobi" in rep.labels and rep.rank["s"] == 1
