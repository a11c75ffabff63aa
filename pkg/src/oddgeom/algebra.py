"""Poisson and Jacobi brackets of functions, Hamiltonian lifts and the identities they satisfy.

Brackets compose symbolically; only the final comparison is sampled.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .expr import nodes as N
from .expr.chart import DEFAULT_TOL, Sampler, ScalarField
from .exterior import (KForm, KVector, apply_vector, d_scalar, ext_d, pairing, schouten,
                       sharp, wedge)
from .generators import random_scalar
from .structures import ContravariantPair, PairInvariantError

log = logging.getLogger(__name__)

BRACKETS = ("poisson", "jacobi")


@dataclass(frozen=True, eq=False)
class BracketContext:
    """A symbolic contravariant pair, optionally with the 1-form omega for the dω checks."""

    pair: ContravariantPair
    omega: KForm | None = None

    def __post_init__(self):
        if not isinstance(self.pair, ContravariantPair):
            raise TypeError("pair must be a ContravariantPair")
        if not (isinstance(self.pair.E, KVector) and isinstance(self.pair.Lambda, KVector)):
            raise TypeError("bracket algebra needs symbolic E and Lambda (got sampled tables)")
        if self.pair.E.is_zero() or self.pair.Lambda.is_zero():
            raise PairInvariantError("E and Lambda must not vanish identically")
        if self.omega is not None:
            if not isinstance(self.omega, KForm) or self.omega.degree != 1:
                raise TypeError("omega must be a symbolic 1-form")
            if self.omega.chart != self.chart:
                raise ValueError("omega lives on a different chart")

    @classmethod
    def of(cls, E: KVector, Lambda: KVector, omega: KForm | None = None) -> "BracketContext":
        return cls(ContravariantPair(E, Lambda), omega)

    @property
    def chart(self):
        return self.pair.chart

    @property
    def E(self) -> KVector:
        return self.pair.E

    @property
    def Lambda(self) -> KVector:
        return self.pair.Lambda

    # cached Schouten brackets; the context is immutable so these never go stale
    @property
    def E_Lambda(self) -> KVector:
        return self._cached("_EL", lambda: schouten(self.E, self.Lambda))

    @property
    def Lambda_Lambda(self) -> KVector:
        return self._cached("_LL", lambda: schouten(self.Lambda, self.Lambda))

    @property
    def E_wedge_Lambda(self) -> KVector:
        return self._cached("_EwL", lambda: wedge(self.E, self.Lambda))

    def _cached(self, key, make):
        try:
            return self.__dict__[key]
        except KeyError:
            val = make()
            self.__dict__[key] = val
            return val

    def field(self, f) -> ScalarField:
        if isinstance(f, ScalarField):
            if f.chart != self.chart:
                raise ValueError("function lives on a different chart")
            return f
        return ScalarField(self.chart, N.lift(f))


def poisson_bracket(ctx: BracketContext, f, g) -> ScalarField:
    """{f, g} = Lambda(df, dg)."""
    f, g = ctx.field(f), ctx.field(g)
    return pairing(wedge(d_scalar(f), d_scalar(g)), ctx.Lambda)


def hamiltonian_lift(ctx: BracketContext, f) -> KVector:
    """X_f = df# - f E."""
    f = ctx.field(f)
    return sharp(ctx.Lambda, d_scalar(f)) - ctx.E.scale(f)


def jacobi_bracket(ctx: BracketContext, f, g) -> ScalarField:
    f, g = ctx.field(f), ctx.field(g)
    return (poisson_bracket(ctx, f, g) - f * apply_vector(ctx.E, g)
            + g * apply_vector(ctx.E, f))


def _bracket_fn(bracket: str):
    if bracket == "poisson":
        return poisson_bracket
    if bracket == "jacobi":
        return jacobi_bracket
    raise ValueError(f"bracket must be one of {BRACKETS}, got {bracket!r}")


def jacobiator(ctx: BracketContext, bracket: str, f, g, h) -> ScalarField:
    """Cyclic sum [[f,g],h] + [[g,h],f] + [[h,f],g] for the chosen bracket."""
    br = _bracket_fn(bracket)
    f, g, h = ctx.field(f), ctx.field(g), ctx.field(h)
    return br(ctx, br(ctx, f, g), h) + br(ctx, br(ctx, g, h), f) + br(ctx, br(ctx, h, f), g)


def _i2(P: KVector, f, g) -> ScalarField:
    return pairing(wedge(d_scalar(f), d_scalar(g)), P)


def _i3(P: KVector, f, g, h) -> ScalarField:
    return pairing(wedge(wedge(d_scalar(f), d_scalar(g)), d_scalar(h)), P)


def _residual(lhs, rhs, s: Sampler) -> float:
    """Relative residual between two lists of scalar fields over the sampler."""
    ch = s.chart
    exprs = [x.expr for x in lhs] + [x.expr for x in rhs]
    vals = ch.evaluate(exprs, s.points)
    k = len(lhs)
    a, b = vals[:, :k], vals[:, k:]
    return float(np.max(np.abs(a - b) / (1.0 + np.maximum(np.abs(a), np.abs(b)))))


def _max_abs(fields, s: Sampler) -> float:
    exprs = [x.expr if isinstance(x, ScalarField) else x for x in fields]
    if not exprs:
        return 0.0
    vals = s.chart.evaluate(exprs, s.points)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def _triples(ctx, rng, trials, arity=3, degree=2):
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(trials):
        yield tuple(random_scalar(ctx.chart, rng, degree) for _ in range(arity))


def poisson_jacobiator_identity(ctx: BracketContext, f, g, h):
    """(jacobiator, 1/2 i_[L,L](df^dg^dh)) computed along independent paths."""
    lhs = jacobiator(ctx, "poisson", f, g, h)
    return lhs, _i3(ctx.Lambda_Lambda, f, g, h) * 0.5


def check_poisson_jacobiator_identity(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                                      rng=None, trials: int = 3) -> float:
    lhs, rhs = [], []
    for f, g, h in _triples(ctx, rng, trials):
        a, b = poisson_jacobiator_identity(ctx, f, g, h)
        lhs.append(a)
        rhs.append(b)
    return _residual(lhs, rhs, s)


def check_E_derivation(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                       rng=None, trials: int = 3) -> float:
    """E.{f,g} against {E.f,g} + {f,E.g} + i_[E,L](df^dg)."""
    E = ctx.E
    lhs, rhs = [], []
    for f, g in _triples(ctx, rng, trials, arity=2):
        lhs.append(apply_vector(E, poisson_bracket(ctx, f, g)))
        rhs.append(poisson_bracket(ctx, apply_vector(E, f), g)
                   + poisson_bracket(ctx, f, apply_vector(E, g))
                   + _i2(ctx.E_Lambda, f, g))
    return _residual(lhs, rhs, s)


def check_leibniz(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                  rng=None, trials: int = 3) -> float:
    """{f, gh} against {f,g} h + g {f,h}."""
    lhs, rhs = [], []
    for f, g, h in _triples(ctx, rng, trials):
        lhs.append(poisson_bracket(ctx, f, g * h))
        rhs.append(poisson_bracket(ctx, f, g) * h + g * poisson_bracket(ctx, f, h))
    return _residual(lhs, rhs, s)


def check_antisymmetry(ctx: BracketContext, s: Sampler, bracket: str = "poisson",
                       rng=None, trials: int = 3) -> float:
    br = _bracket_fn(bracket)
    lhs, rhs = [], []
    for f, g in _triples(ctx, rng, trials, arity=2):
        lhs.append(br(ctx, f, g))
        rhs.append(-br(ctx, g, f))
    return _residual(lhs, rhs, s)


def jacobi_identity_rhs(ctx: BracketContext, f, g, h) -> ScalarField:
    """(1/2 i_[L,L] + i_{E^L})(df^dg^dh) + i_[E,L](f dg^dh + g dh^df + h df^dg)."""
    EL = ctx.E_Lambda
    return (_i3(ctx.Lambda_Lambda, f, g, h) * 0.5 + _i3(ctx.E_wedge_Lambda, f, g, h)
            + f * _i2(EL, g, h) + g * _i2(EL, h, f) + h * _i2(EL, f, g))


def check_jacobi_jacobiator_identity(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                                     rng=None, trials: int = 2) -> float:
    lhs, rhs = [], []
    for f, g, h in _triples(ctx, rng, trials):
        lhs.append(jacobiator(ctx, "jacobi", f, g, h))
        rhs.append(jacobi_identity_rhs(ctx, f, g, h))
    return _residual(lhs, rhs, s)


def lift_defect(ctx: BracketContext, f, g) -> KVector:
    """[X_f, X_g] - X_[f,g]."""
    return (schouten(hamiltonian_lift(ctx, f), hamiltonian_lift(ctx, g))
            - hamiltonian_lift(ctx, jacobi_bracket(ctx, f, g)))


def lift_defect_rhs(ctx: BracketContext, f, g, h, as_printed: bool = False) -> ScalarField:
    """Closed form of ([X_f,X_g] - X_[f,g]).h.

    The g-term carries a plus sign; ``as_printed=True`` gives the variant with
    both [E,L]-terms negative, which only agrees when [E,L] = 0.
    """
    EL = ctx.E_Lambda
    out = (_i3(ctx.Lambda_Lambda, f, g, h) * 0.5 + _i3(ctx.E_wedge_Lambda, f, g, h)) * -1.0
    out = out - f * _i2(EL, g, h)
    g_term = g * _i2(EL, f, h)
    return out - g_term if as_printed else out + g_term


@dataclass
class LiftCheck:
    residual: float
    homomorphism: bool
    defect: float
    printed_residual: float
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"residual": self.residual, "homomorphism": self.homomorphism,
                "defect": self.defect, "printed_residual": self.printed_residual,
                "witness": self.witness}


def check_lift_homomorphism(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                            rng=None, trials: int = 2) -> LiftCheck:
    """Lift-defect formula residual, plus whether f -> X_f is a homomorphism on the samples."""
    lhs, rhs, printed, defects = [], [], [], []
    for f, g, h in _triples(ctx, rng, trials):
        D = lift_defect(ctx, f, g)
        lhs.append(apply_vector(D, h))
        rhs.append(lift_defect_rhs(ctx, f, g, h))
        printed.append(lift_defect_rhs(ctx, f, g, h, as_printed=True))
        defects.extend(D.components())
    defect = _max_abs(defects, s)
    witness = {}
    hom = defect <= tol
    if not hom:
        witness = coordinate_witness(ctx, s)
    return LiftCheck(_residual(lhs, rhs, s), hom, defect, _residual(lhs, printed, s), witness)


def coordinate_witness(ctx: BracketContext, s: Sampler) -> dict:
    """Search coordinate triples for the largest Jacobi-bracket jacobiator on the samples."""
    ch = ctx.chart
    best = {"triple": None, "value": 0.0, "sample": None}
    names = ch.coords
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            for k in range(j + 1, len(names)):
                J = jacobiator(ctx, "jacobi", ch.coord(names[i]), ch.coord(names[j]),
                               ch.coord(names[k]))
                vals = ch.evaluate([J.expr], s.points)[:, 0]
                idx = int(np.argmax(np.abs(vals)))
                if abs(vals[idx]) > abs(best["value"]):
                    best = {"triple": [names[i], names[j], names[k]], "value": float(vals[idx]),
                            "sample": idx}
    return best


def omega_bracket_defect(ctx: BracketContext, f, g) -> ScalarField:
    """{f,g} + dω(X_f, X_g)."""
    if ctx.omega is None:
        raise ValueError("this check needs a context with omega")
    Xf, Xg = hamiltonian_lift(ctx, f), hamiltonian_lift(ctx, g)
    return poisson_bracket(ctx, f, g) + pairing(ext_d(ctx.omega), wedge(Xf, Xg))


def check_omega_bracket_identity(ctx: BracketContext, s: Sampler, tol: float = DEFAULT_TOL,
                 rng=None, trials: int = 3) -> float:
    """Residual between {f,g} and -dω(X_f, X_g) over random f, g."""
    if ctx.omega is None:
        raise ValueError("this check needs a context with omega")
    dw = ext_d(ctx.omega)
    lhs, rhs = [], []
    for f, g in _triples(ctx, rng, trials, arity=2):
        lhs.append(poisson_bracket(ctx, f, g))
        rhs.append(-pairing(dw, wedge(hamiltonian_lift(ctx, f), hamiltonian_lift(ctx, g))))
    return _residual(lhs, rhs, s)


def copoisson_witness_context(chart=None) -> BracketContext:
    """E = d_t, Lambda = d_x2 ^ d_x1 on (t, x1, x2): coPoisson, not Jacobi."""
    from .expr.chart import Chart
    ch = chart or Chart(("t", "x1", "x2"))
    E = KVector.basis(ch, ch.coords[0])
    L = KVector.from_antisymmetric(ch, 2, [((2, 1), N.ONE)])
    w = KForm.basis(ch, ch.coords[0])
    return BracketContext(ContravariantPair(E, L), w)
