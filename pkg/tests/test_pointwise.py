"""Pointwise jets against the symbolic route: every operation is computed twice."""
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oddgeom import pointwise as P
from oddgeom.expr import Chart, Sampler
from oddgeom.exterior import (ext_d, flat, interior_form_mv, interior_vk_form, lie_derivative,
                              schouten, sharp, wedge)
from oddgeom.generators import random_kform, random_kvector

CH = Chart(("t", "x1", "x2", "x3", "x4"))
S = Sampler.uniform(CH, seed=11, count=12)


def _tab(obj, grad=True):
    return P.tabulate(obj, S.points, grad=grad)


def _close(table, sym, tol=1e-11):
    assert P.residual(table, _tab(sym, grad=False)) <= tol


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_calculus_matches_symbolic(seed):
    rng = np.random.default_rng(seed)
    a1, b1 = random_kform(CH, 1, rng), random_kform(CH, 1, rng)
    a2 = random_kform(CH, 2, rng)
    X, Y = random_kvector(CH, 1, rng), random_kvector(CH, 1, rng)
    L = random_kvector(CH, 2, rng)
    _close(P.ext_d(_tab(a1)), ext_d(a1))
    _close(P.ext_d(_tab(a2)), ext_d(a2))
    _close(P.wedge(_tab(a1), _tab(a2)), wedge(a1, a2))
    _close(P.lie_bracket(_tab(X), _tab(Y)), schouten(X, Y))
    _close(P.schouten(_tab(X), _tab(L)), schouten(X, L))
    _close(P.schouten(_tab(L), _tab(L)), schouten(L, L))
    _close(P.lie_derivative_1form(_tab(X), _tab(b1)), lie_derivative(X, b1))
    _close(P.sharp(_tab(L), _tab(a1)), sharp(L, a1))
    _close(P.flat(_tab(a2), _tab(X)), flat(a2, X))
    _close(P.contract(_tab(wedge(X, Y)), _tab(a2)), interior_vk_form(wedge(X, Y), a2))
    _close(P.contract(_tab(a1), _tab(L)), interior_form_mv(a1, L))


def test_sharp_jet_matches_symbolic_gradient(rng):
    L, a = random_kvector(CH, 2, rng), random_kform(CH, 1, rng)
    jet = P.sharp(_tab(L), _tab(a), jet=True)
    ref = _tab(sharp(L, a))
    np.testing.assert_allclose(jet.grad, ref.grad, atol=1e-12)


def test_pack_round_trip(rng):
    for k in range(4):
        packed = rng.normal(size=(3, comb(5, k)))
        full = P.unpack(packed, 5, k)
        np.testing.assert_array_equal(P.pack(full, 5, k), packed)


def test_to_kobject_recovers_sample(rng):
    a2 = random_kform(CH, 2, rng)
    t = _tab(a2, grad=False)
    k = P.to_kobject(t, 4)
    np.testing.assert_allclose(k.values_at(S.points[4:5]), a2.values_at(S.points[4:5]), atol=1e-15)


def test_dual_jets_singular_fiber():
    ch = Chart(("t", "x1", "x2"))
    s = Sampler.uniform(ch, count=4)
    from oddgeom.exterior import KForm
    W = P.tabulate(KForm.zero(ch, 2), s.points)
    w = P.tabulate(KForm.basis(ch, "t"), s.points)
    with pytest.raises(P.SingularFiber):
        P.dual_jets(W, w)


def test_tables_at_different_points_refuse(rng):
    a = random_kform(CH, 1, rng)
    other = Sampler.uniform(CH, seed=12, count=12)
    with pytest.raises(ValueError):
        _tab(a) + P.tabulate(a, other.points)
