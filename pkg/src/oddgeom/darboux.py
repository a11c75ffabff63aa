"""Darboux normal forms on the chart (t, x1..xn, x(n+1)..x2n) and closed-form bracket oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import nodes as N
from .expr.chart import Chart, ScalarField, parse_expr
from .exterior import KForm, KVector, wedge
from .generators import random_polynomial
from .structures import ACPJTriple, CovariantPair


def darboux_chart(n: int, constants=None) -> Chart:
    if n < 1:
        raise ValueError("n must be at least 1")
    return Chart(("t",) + tuple(f"x{i}" for i in range(1, 2 * n + 1)), constants or ())


@dataclass(frozen=True, eq=False)
class DarbouxSpec:
    """``omega_funcs[k-1]`` is the coefficient of dx^k in omega (k = 1..2n)."""

    n: int
    s: int
    omega_funcs: tuple
    chart: Chart = None

    def __post_init__(self):
        chart = self.chart or darboux_chart(self.n)
        if chart.dim != 2 * self.n + 1 or chart.coords[0] != "t":
            raise ValueError("Darboux charts have coordinates (t, x1, ..., x2n)")
        if not 0 <= self.s <= self.n:
            raise ValueError(f"need 0 <= s <= n, got s = {self.s}, n = {self.n}")
        funcs = tuple(self.omega_funcs)
        if len(funcs) != 2 * self.n:
            raise ValueError(f"need {2 * self.n} omega functions, got {len(funcs)}")
        out = []
        for f in funcs:
            if isinstance(f, str):
                f = parse_expr(f, chart)
            if isinstance(f, ScalarField):
                f = f.expr
            f = N.lift(f)
            missing = N.free_symbols(f) - chart.names
            if missing:
                raise KeyError(f"symbols not in chart: {sorted(missing)}")
            out.append(f)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "omega_funcs", tuple(out))

    @classmethod
    def random(cls, n: int, s: int, rng, degree: int = 2, scale: float = 1.0) -> "DarbouxSpec":
        ch = darboux_chart(n)
        return cls(n, s, tuple(random_polynomial(ch, rng, degree, scale=scale) for _ in range(2 * n)), ch)

    @classmethod
    def cosymplectic(cls, n: int, s: int = None) -> "DarbouxSpec":
        return cls(n, n if s is None else s, (N.ZERO,) * (2 * n))

    @classmethod
    def contact(cls, n: int, s: int = None) -> "DarbouxSpec":
        # omega^i = -x^(i+n), omega^(i+n) = 0
        funcs = tuple(N.neg(N.sym(f"x{i + n}")) for i in range(1, n + 1)) + (N.ZERO,) * n
        return cls(n, n if s is None else s, funcs)

    def w(self, k: int) -> N.Expr:
        """omega^k for k = 1..2n."""
        return self.omega_funcs[k - 1]


def _dt(e):
    return N.diff(e, "t")


def _dx(e, k):
    return N.diff(e, f"x{k}")


def darboux_omega(spec: DarbouxSpec) -> KForm:
    ch = spec.chart
    comps = [N.ONE] + [spec.w(k) for k in range(1, 2 * spec.n + 1)]
    return KForm.from_list(ch, comps)


def darboux_Omega(spec: DarbouxSpec) -> KForm:
    n = spec.n
    return KForm(spec.chart, 2, {(i, i + n): 1.0 for i in range(1, n + 1)})


def darboux_covariant(spec: DarbouxSpec) -> CovariantPair:
    return CovariantPair(darboux_omega(spec), darboux_Omega(spec))


def _bivector(ch, terms) -> KVector:
    # terms: (i, j, coefficient) meaning coefficient * d_i ^ d_j
    return KVector.from_antisymmetric(ch, 2, [((i, j), c) for i, j, c in terms])


def darboux_Lambda(spec: DarbouxSpec) -> KVector:
    n, s = spec.n, spec.s
    terms = []
    for i in range(1, s + 1):
        terms.append((i + n, i, N.ONE))
        terms.append((0, i, N.neg(spec.w(i + n))))
        terms.append((0, i + n, spec.w(i)))
    return _bivector(spec.chart, terms)


def darboux_E(spec: DarbouxSpec) -> KVector:
    return KVector.basis(spec.chart, "t")


def darboux_contravariant(spec: DarbouxSpec) -> ACPJTriple:
    return ACPJTriple(darboux_E(spec), darboux_Lambda(spec), darboux_omega(spec))


def darboux_bracket_oracle(spec: DarbouxSpec):
    """Closed-form [E, Lambda] and [Lambda, Lambda] in Darboux coordinates."""
    ch, n, s = spec.chart, spec.n, spec.s
    w = spec.w
    dt = KVector.basis(ch, "t")
    inner = []
    for i in range(1, s + 1):
        inner.append((i, N.neg(_dt(w(i + n)))))
        inner.append((i + n, _dt(w(i))))
    ELam = wedge(dt, KVector(ch, 1, _collect(inner)))
    terms = []
    for i in range(1, s + 1):
        for j in range(1, s + 1):
            terms.append((i, j, N.add(N.mul(w(j + n), _dt(w(i + n))), _dx(w(j + n), i + n))))
            terms.append((i, j + n, N.add(
                N.mul(w(i + n), _dt(w(j))), N.neg(N.mul(w(j), _dt(w(i + n)))),
                _dx(w(i + n), j), N.neg(_dx(w(j), i + n)))))
            terms.append((i + n, j + n, N.add(N.mul(w(j), _dt(w(i))), _dx(w(j), i))))
    LamLam = wedge(dt, _bivector(ch, terms)).scale(2.0)
    return ELam, LamLam


def darboux_domega_images(spec: DarbouxSpec, as_printed: bool = False):
    """Closed-form Lambda#(L_E omega) and (Lambda# x Lambda#)(d omega).

    A commonly quoted form flips the sign of omega^(i+n) d_i omega^j in the
    d_t ^ d_(j+n) group; ``as_printed=True`` reproduces that variant, which
    differs from the true image only in components killed by E ^ (.).
    """
    flip = N.ONE if as_printed else N.const(-1.0)
    ch, n, s = spec.chart, spec.n, spec.s
    w = spec.w
    vec = []
    for i in range(1, s + 1):
        vec.append((i, _dt(w(i + n))))
        vec.append((i + n, N.neg(_dt(w(i)))))
        vec.append((0, N.add(N.mul(_dt(w(i)), w(i + n)), N.neg(N.mul(_dt(w(i + n)), w(i))))))
    sharp_LEw = KVector(ch, 1, _collect(vec))
    terms = []
    for i in range(1, s + 1):
        for j in range(1, s + 1):
            wi, wn, wj, wjn = w(i), w(i + n), w(j), w(j + n)
            terms.append((0, j, N.add(
                N.mul(wn, wjn, _dt(wi)), N.neg(N.mul(wi, wjn, _dt(wn))),
                N.neg(N.mul(wi, _dx(wjn, i + n))), N.mul(wn, _dx(wjn, i)),
                N.neg(N.mul(wn, _dx(wi, j + n))), N.mul(wi, _dx(wn, j + n)))))
            terms.append((0, j + n, N.add(
                N.neg(N.mul(wn, wj, _dt(wi))), N.mul(wi, wj, _dt(wn)),
                N.mul(wn, _dx(wi, j)), N.mul(flip, wn, _dx(wj, i)),
                N.neg(N.mul(wi, _dx(wn, j))), N.mul(wi, _dx(wj, i + n)))))
            terms.append((i, j, N.add(N.mul(wjn, _dt(wn)), _dx(wjn, i + n))))
            terms.append((i, j + n, N.add(
                N.mul(wn, _dt(wj)), N.neg(N.mul(wj, _dt(wn))),
                _dx(wn, j), N.neg(_dx(wj, i + n)))))
            terms.append((i + n, j + n, N.add(N.mul(wj, _dt(wi)), _dx(wj, i))))
    return sharp_LEw, _bivector(ch, terms)


def _collect(pairs) -> dict:
    acc: dict = {}
    for k, e in pairs:
        acc.setdefault((k,), []).append(e)
    return {k: N.add(*v) for k, v in acc.items()}


def random_spec(rng: np.random.Generator, n: int, s: int = None, degree: int = 2) -> DarbouxSpec:
    return DarbouxSpec.random(n, n if s is None else s, rng, degree)
