"""Random polynomial test data: scalars, forms and multivectors."""
from __future__ import annotations

from itertools import combinations, combinations_with_replacement

import numpy as np

from .expr import nodes as N
from .expr.chart import Chart, ScalarField
from .exterior import KForm, KVector, d_scalar


def random_polynomial(chart: Chart, rng: np.random.Generator, degree: int = 2,
                      coords=None, scale: float = 1.0) -> N.Expr:
    """Dense polynomial of total degree <= ``degree``, coefficients in [-scale, scale]."""
    names = chart.coords if coords is None else tuple(coords)
    xs = [N.sym(c) for c in names]
    terms = []
    for deg in range(degree + 1):
        for mono in combinations_with_replacement(range(len(xs)), deg):
            c = N.const(scale * rng.uniform(-1.0, 1.0))
            terms.append(N.mul(c, *[xs[i] for i in mono]))
    return N.add(*terms)


def random_scalar(chart: Chart, rng, degree: int = 2, **kw) -> ScalarField:
    return ScalarField(chart, random_polynomial(chart, rng, degree, **kw))


def random_kform(chart: Chart, k: int, rng, degree: int = 2, **kw) -> KForm:
    return KForm(chart, k, {I: random_polynomial(chart, rng, degree, **kw)
                            for I in combinations(range(chart.dim), k)})


def random_kvector(chart: Chart, k: int, rng, degree: int = 2, **kw) -> KVector:
    return KVector(chart, k, {I: random_polynomial(chart, rng, degree, **kw)
                              for I in combinations(range(chart.dim), k)})


def random_closed_one_form(chart: Chart, rng, degree: int = 2) -> KForm:
    """d of a random polynomial of one degree higher, so coefficients stay degree-``degree``."""
    return d_scalar(random_scalar(chart, rng, degree + 1))


def random_constant_kform(chart: Chart, k: int, rng) -> KForm:
    return KForm(chart, k, {I: float(rng.uniform(-1, 1)) for I in combinations(range(chart.dim), k)})
