import numpy as np
import pytest

from oddgeom import pointwise as P
from oddgeom.darboux import (DarbouxSpec, darboux_bracket_oracle, darboux_chart,
                             darboux_contravariant, darboux_covariant, darboux_domega_images)
from oddgeom.expr import Sampler, UnknownSymbolError, nodes as N, parse_expr
from oddgeom.exterior import KVector, ext_d, lie_derivative, schouten, sharp, wedge
from oddgeom.generators import random_polynomial
from oddgeom.structures import classify_contravariant, classify_covariant, dual_of_contravariant


def _sampler(spec, seed=0, count=16):
    return Sampler.uniform(spec.chart, seed=seed, count=count)


def test_spec_validation():
    with pytest.raises(ValueError):
        DarbouxSpec(1, 2, (0, 0))
    with pytest.raises(ValueError):
        DarbouxSpec(2, 1, (0, 0))
    with pytest.raises(UnknownSymbolError):
        DarbouxSpec(1, 1, ("y", "0"))
    with pytest.raises(KeyError):
        DarbouxSpec(1, 1, (N.sym("y"), 0))


@pytest.mark.parametrize("n", [1, 2])
def test_family_labels(n):
    for spec, cov_label, con_label in [
        (DarbouxSpec.cosymplectic(n), "cosymplectic", "coPoisson"),
        (DarbouxSpec.contact(n), "contact", "Jacobi"),
    ]:
        s = _sampler(spec)
        cov = classify_covariant(darboux_covariant(spec), s)
        assert cov.has(cov_label) and cov.has("almost-cosymplectic-contact")
        t = darboux_contravariant(spec)
        con = classify_contravariant(t.pair, t.omega, s)
        assert con.has(con_label) and con.has("almost-coPoisson-Jacobi")


def test_random_family_is_only_acc(rng):
    spec = DarbouxSpec.random(2, 2, rng)
    rep = classify_covariant(darboux_covariant(spec), _sampler(spec))
    assert set(rep.labels) == {"pre-cosymplectic", "almost-cosymplectic-contact"}


def test_jacobi_triple_components():
    spec = DarbouxSpec(1, 1, ("-1*x2", "0"))
    t = darboux_contravariant(spec)
    ch = spec.chart
    expect = KVector.from_antisymmetric(ch, 2, [((2, 1), N.ONE), ((0, 2), N.neg(N.sym("x2")))])
    s = _sampler(spec)
    assert t.Lambda.residual(expect, s) == 0.0
    assert t.E.residual(KVector.basis(ch, "t"), s) == 0.0


def test_oracle_pin_contact():
    # hand value: [L, L] = 2 d_t ^ d_x1 ^ d_x2 = -2 E ^ L for omega^1 = -x2
    spec = DarbouxSpec(1, 1, ("-1*x2", "0"))
    ELam, LamLam = darboux_bracket_oracle(spec)
    s = _sampler(spec)
    assert ELam.max_abs(s) == 0.0
    assert LamLam.residual(KVector(spec.chart, 3, {(0, 1, 2): 2.0}), s) == 0.0
    t = darboux_contravariant(spec)
    assert LamLam.residual(wedge(t.E, t.Lambda).scale(-2.0), s) <= 1e-15


def test_oracle_pin_time_dependent():
    # omega^1 = t x2, omega^2 = t^2: [E, L] = d_t ^ (-2t d_x1 + x2 d_x2)
    spec = DarbouxSpec(1, 1, ("t*x2", "t^2"))
    ELam, _ = darboux_bracket_oracle(spec)
    ch = spec.chart
    expect = KVector(ch, 2, {(0, 1): parse_expr("-2*t", ch), (0, 2): parse_expr("x2", ch)})
    assert ELam.residual(expect, _sampler(spec)) <= 1e-15


def test_time_independent_ELam_vanishes(rng):
    ch = darboux_chart(2)
    funcs = tuple(random_polynomial(ch, rng, coords=ch.coords[1:]) for _ in range(4))
    spec = DarbouxSpec(2, 2, funcs, ch)
    ELam, _ = darboux_bracket_oracle(spec)
    assert ELam.max_abs(_sampler(spec)) == 0.0


def test_cosymplectic_oracles_vanish():
    spec = DarbouxSpec.cosymplectic(2)
    ELam, LamLam = darboux_bracket_oracle(spec)
    assert ELam.is_zero() and LamLam.is_zero()
    a, b = darboux_domega_images(spec)
    assert a.is_zero() and b.is_zero()


@pytest.mark.parametrize("n,s_", [(1, 1), (2, 1), (2, 2), (3, 1), (3, 3)])
def test_engine_matches_oracle(n, s_):
    rng = np.random.default_rng(100 * n + s_)
    for _ in range(3):
        spec = DarbouxSpec.random(n, s_, rng)
        t = darboux_contravariant(spec)
        s = _sampler(spec, count=12)
        ELam, LamLam = darboux_bracket_oracle(spec)
        assert schouten(t.E, t.Lambda).residual(ELam, s) <= 1e-9
        assert schouten(t.Lambda, t.Lambda).residual(LamLam, s) <= 1e-9


@pytest.mark.parametrize("n,s_", [(1, 1), (2, 1), (2, 2)])
def test_domega_images_and_quoted_variant(n, s_):
    rng = np.random.default_rng(7 * n + s_)
    spec = DarbouxSpec.random(n, s_, rng)
    t = darboux_contravariant(spec)
    s = _sampler(spec)
    sharp_LEw, sharp2_dw = darboux_domega_images(spec)
    assert sharp(t.Lambda, lie_derivative(t.E, t.omega)).residual(sharp_LEw, s) <= 1e-12
    L = P.tabulate(t.Lambda, s.points, grad=False)
    engine = P.sharp2(L, P.tabulate(ext_d(t.omega), s.points, grad=False))
    assert P.residual(engine, P.tabulate(sharp2_dw, s.points, grad=False)) <= 1e-12
    _, quoted = darboux_domega_images(spec, as_printed=True)
    assert P.residual(engine, P.tabulate(quoted, s.points, grad=False)) > 1e-3
    # the quoted variant differs only in components with a d_t leg
    assert wedge(t.E, quoted).residual(wedge(t.E, sharp2_dw), s) <= 1e-12


@pytest.mark.parametrize("n,s_", [(1, 1), (2, 1), (3, 2)])
def test_acpj_identities_engine_both_sides(n, s_):
    rng = np.random.default_rng(n + 10 * s_)
    spec = DarbouxSpec.random(n, s_, rng)
    t = darboux_contravariant(spec)
    rep = classify_contravariant(t.pair, t.omega, _sampler(spec))
    assert rep.residuals["acpj_E_Lambda"] <= 1e-9
    assert rep.residuals["acpj_Lambda_Lambda"] <= 1e-9
    assert rep.has("almost-coPoisson-Jacobi")


@pytest.mark.parametrize("n", [1, 2, 3])
def test_duality_closure(n, rng):
    spec = DarbouxSpec.random(n, n, rng)
    s = _sampler(spec)
    d = dual_of_contravariant(darboux_contravariant(spec).pair, s)
    w, W = darboux_covariant(spec).jets(s)
    assert P.residual(d.omega, w) <= 1e-8
    assert P.residual(d.Omega, W) <= 1e-8
