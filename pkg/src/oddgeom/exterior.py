"""Symbolic antisymmetric tensor fields on a chart.

Coefficients are stored sparsely on strictly increasing index tuples.
Conventions:

* pairing uses the determinant normalisation, so dx^1^dx^2 (d1, d2) = 1;
* contraction fills the leading slots in order:
  ``i_{X1^X2} b = b(X1, X2, .)``, i.e. ``(i_P b)_J = sum_I P^I b_{IJ}``;
* ``sharp(L, a) = i_a L = L(a, .)`` and ``flat(W, X) = i_X W = W(X, .)``.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .expr import nodes as N
from .expr.chart import Chart, Point, Sampler, ScalarField, relative_residual

RANK_RTOL = 1e-8


def sort_sign(idx) -> tuple:
    """(sign, sorted tuple) of an index sequence; sign 0 on a repeat."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, None
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(idx)


def _coerce(chart: Chart, v) -> N.Expr:
    if isinstance(v, ScalarField):
        if v.chart != chart:
            raise ValueError("coefficient lives on a different chart")
        return v.expr
    if isinstance(v, str):
        from .expr.chart import parse_expr
        return parse_expr(v, chart).expr
    e = N.lift(v)
    missing = N.free_symbols(e) - chart.names
    if missing:
        raise KeyError(f"symbols not in chart: {sorted(missing)}")
    return e


class _Alternating:
    """Shared storage for k-forms and k-vectors."""

    __slots__ = ("chart", "degree", "_c")
    variance = ""

    def __init__(self, chart: Chart, degree: int, coeffs=None):
        if not 0 <= degree <= chart.dim:
            raise ValueError(f"degree {degree} outside 0..{chart.dim}")
        self.chart = chart
        self.degree = degree
        acc: dict = {}
        items = coeffs.items() if isinstance(coeffs, dict) else (coeffs or ())
        for idx, v in items:
            idx = (idx,) if isinstance(idx, int) else tuple(idx)
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not have length {degree}")
            if any(not 0 <= i < chart.dim for i in idx):
                raise ValueError(f"index {idx} out of range")
            if any(idx[i] >= idx[i + 1] for i in range(len(idx) - 1)):
                raise ValueError(f"index {idx} is not strictly increasing")
            e = _coerce(chart, v)
            if idx in acc:
                e = N.add(acc[idx], e)
            acc[idx] = e
        self._c = {k: v for k, v in sorted(acc.items()) if not v.is_zero}

    @classmethod
    def _raw(cls, chart, degree, coeffs: dict):
        obj = cls.__new__(cls)
        obj.chart = chart
        obj.degree = degree
        obj._c = {k: v for k, v in sorted(coeffs.items()) if not v.is_zero}
        return obj

    @classmethod
    def from_antisymmetric(cls, chart: Chart, degree: int, sign_terms):
        """Build from (index sequence, expression) pairs in any order."""
        acc: dict = {}
        for idx, e in sign_terms:
            sign, key = sort_sign(idx)
            if not sign:
                continue
            e = N.lift(e)
            acc.setdefault(key, []).append(e if sign > 0 else N.neg(e))
        return cls._raw(chart, degree, {k: N.add(*v) for k, v in acc.items()})

    @classmethod
    def zero(cls, chart: Chart, degree: int):
        return cls._raw(chart, degree, {})

    @classmethod
    def scalar(cls, f: ScalarField):
        return cls(f.chart, 0, {(): f})

    @classmethod
    def from_list(cls, chart: Chart, comps):
        """Degree-1 object from one coefficient per coordinate."""
        if len(comps) != chart.dim:
            raise ValueError(f"need {chart.dim} components, got {len(comps)}")
        return cls(chart, 1, {(i,): c for i, c in enumerate(comps)})

    @classmethod
    def from_matrix(cls, chart: Chart, mat):
        """Degree-2 object from the upper triangle of a dim x dim matrix."""
        n = chart.dim
        if len(mat) != n or any(len(row) != n for row in mat):
            raise ValueError(f"need a {n}x{n} matrix")
        return cls(chart, 2, {(i, j): mat[i][j] for i in range(n) for j in range(i + 1, n)})

    @classmethod
    def basis(cls, chart: Chart, *names):
        """Wedge of coordinate basis elements, e.g. basis(ch, 't', 'x1')."""
        idx = [chart.index(n) for n in names]
        return cls.from_antisymmetric(chart, len(idx), [(idx, N.ONE)])

    # access ---------------------------------------------------------------
    @property
    def coeffs(self) -> dict:
        return {k: ScalarField(self.chart, v) for k, v in self._c.items()}

    def items(self):
        return self._c.items()

    def expr_at(self, idx) -> N.Expr:
        """Coefficient on an arbitrary index sequence, with antisymmetry."""
        sign, key = sort_sign(idx)
        if not sign:
            return N.ZERO
        e = self._c.get(key, N.ZERO)
        return e if sign > 0 else N.neg(e)

    def __getitem__(self, idx) -> ScalarField:
        idx = (idx,) if isinstance(idx, int) else tuple(idx)
        return ScalarField(self.chart, self.expr_at(idx))

    @property
    def scalar_field(self) -> ScalarField:
        if self.degree != 0:
            raise ValueError("only degree-0 objects are scalars")
        return ScalarField(self.chart, self._c.get((), N.ZERO))

    def is_zero(self) -> bool:
        return not self._c

    def components(self) -> list:
        """Degree-1 components as a dense list of expressions."""
        if self.degree != 1:
            raise ValueError("components() needs degree 1")
        return [self._c.get((i,), N.ZERO) for i in range(self.chart.dim)]

    def matrix(self) -> list:
        """Degree-2 coefficients as a full antisymmetric matrix of expressions."""
        if self.degree != 2:
            raise ValueError("matrix() needs degree 2")
        n = self.chart.dim
        m = [[N.ZERO] * n for _ in range(n)]
        for (i, j), e in self._c.items():
            m[i][j] = e
            m[j][i] = N.neg(e)
        return m

    # algebra --------------------------------------------------------------
    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.chart != self.chart:
            raise ValueError("operands live on different charts")
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other):
        self._same(other)
        acc = dict(self._c)
        for k, v in other._c.items():
            acc[k] = N.add(acc[k], v) if k in acc else v
        return self._raw(self.chart, self.degree, acc)

    def __neg__(self):
        return self._raw(self.chart, self.degree, {k: N.neg(v) for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "_Alternating":
        e = _coerce(self.chart, f)
        return self._raw(self.chart, self.degree, {k: N.mul(e, v) for k, v in self._c.items()})

    def __mul__(self, f):
        if isinstance(f, _Alternating):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def map_coeffs(self, fn):
        return self._raw(self.chart, self.degree, {k: fn(v) for k, v in self._c.items()})

    def residual(self, other, sampler: Sampler) -> float:
        """Max relative residual between coefficients over the sampler."""
        self._same(other)
        keys = sorted(set(self._c) | set(other._c))
        if not keys:
            return 0.0
        vals = self.chart.evaluate(
            [self._c.get(k, N.ZERO) for k in keys] + [other._c.get(k, N.ZERO) for k in keys],
            sampler.points,
        )
        m = len(keys)
        return relative_residual(vals[:, :m], vals[:, m:])

    def max_abs(self, sampler: Sampler) -> float:
        if not self._c:
            return 0.0
        vals = self.chart.evaluate(list(self._c.values()), sampler.points)
        return float(np.max(np.abs(vals)))

    def values_at(self, points) -> np.ndarray:
        """Packed coefficients (in increasing index order) at each point."""
        keys = list(combinations(range(self.chart.dim), self.degree))
        return self.chart.evaluate([self._c.get(k, N.ZERO) for k in keys], points)

    def text(self) -> str:
        if not self._c:
            return "0"
        sym = "d" if self.variance == "form" else "D"
        parts = []
        for idx, e in self._c.items():
            basis = "^".join(f"{sym}{self.chart.coords[i]}" for i in idx)
            coef = N.to_text(e)
            parts.append(f"({coef})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"{type(self).__name__}(deg={self.degree}, {self.text()})"


class KForm(_Alternating):
    __slots__ = ()
    variance = "form"


class KVector(_Alternating):
    __slots__ = ()
    variance = "vector"


def _check_pair(a, b):
    if a.chart != b.chart:
        raise ValueError("operands live on different charts")


def wedge(a, b):
    if type(a) is not type(b):
        raise TypeError("wedge needs operands of the same variance")
    _check_pair(a, b)
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        raise ValueError(f"degree overflow: {a.degree} + {b.degree} > {a.chart.dim}")
    terms = []
    for I, x in a._c.items():
        for J, y in b._c.items():
            if set(I) & set(J):
                continue
            terms.append((I + J, N.mul(x, y)))
    return type(a).from_antisymmetric(a.chart, deg, terms)


def wedge_power(a, k: int):
    out = type(a)._raw(a.chart, 0, {(): N.ONE})
    for _ in range(k):
        out = wedge(out, a)
    return out


def _contract(P, beta, out_cls):
    """sum over increasing I of P^I beta_{IJ}, result indexed by J."""
    k, r = P.degree, beta.degree
    if k > r:
        raise ValueError(f"cannot contract degree {k} into degree {r}")
    acc: dict = {}
    for I, p in P._c.items():
        sI = set(I)
        for J, b in beta._c.items():
            if not sI <= set(J):
                continue
            rest = tuple(j for j in J if j not in sI)
            sign, _ = sort_sign(I + rest)
            term = N.mul(p, b)
            acc.setdefault(rest, []).append(term if sign > 0 else N.neg(term))
    return out_cls._raw(P.chart, r - k, {K: N.add(*v) for K, v in acc.items()})


def interior_vk_form(P: KVector, beta: KForm) -> KForm:
    """i_P beta with the leading slots of beta filled by P."""
    if not isinstance(P, KVector) or not isinstance(beta, KForm):
        raise TypeError("interior_vk_form(KVector, KForm)")
    _check_pair(P, beta)
    return _contract(P, beta, KForm)


def interior_form_mv(alpha: KForm, P: KVector) -> KVector:
    """i_alpha P, the mirror contraction of a form into a multivector."""
    if not isinstance(alpha, KForm) or not isinstance(P, KVector):
        raise TypeError("interior_form_mv(KForm, KVector)")
    _check_pair(alpha, P)
    return _contract(alpha, P, KVector)


def pairing(a, b) -> ScalarField:
    """Full contraction of equal-degree form and multivector."""
    if a.degree != b.degree:
        raise ValueError("pairing needs equal degrees")
    if isinstance(a, KVector):
        return interior_vk_form(a, b).scalar_field
    return interior_form_mv(a, b).scalar_field


def ext_d(beta: KForm) -> KForm:
    if not isinstance(beta, KForm):
        raise TypeError("ext_d needs a KForm")
    ch = beta.chart
    if beta.degree >= ch.dim:
        raise ValueError(f"d of a degree-{beta.degree} form on a {ch.dim}-dimensional chart")
    terms = []
    for I, e in beta._c.items():
        for l, name in enumerate(ch.coords):
            if l in I:
                continue
            de = N.diff(e, name)
            if not de.is_zero:
                terms.append(((l,) + I, de))
    return KForm.from_antisymmetric(ch, beta.degree + 1, terms)


def lie_derivative(X: KVector, beta: KForm) -> KForm:
    if X.degree != 1:
        raise ValueError("lie_derivative needs a vector field")
    _check_pair(X, beta)
    out = KForm.zero(beta.chart, beta.degree)
    if beta.degree < beta.chart.dim:
        out = interior_vk_form(X, ext_d(beta))
    if beta.degree > 0:
        out = out + ext_d(interior_vk_form(X, beta))
    return out


def apply_vector(X: KVector, f) -> ScalarField:
    """X.f, the directional derivative of a scalar."""
    ch = X.chart
    e = _coerce(ch, f)
    terms = [N.mul(x, N.diff(e, ch.coords[i[0]])) for i, x in X._c.items()]
    return ScalarField(ch, N.add(*terms))


def d_scalar(f: ScalarField) -> KForm:
    return ext_d(KForm.scalar(f))


def sharp(Lam: KVector, alpha: KForm) -> KVector:
    if Lam.degree != 2 or alpha.degree != 1:
        raise ValueError("sharp needs a bivector and a 1-form")
    return interior_form_mv(alpha, Lam)


def flat(Om: KForm, X: KVector) -> KForm:
    if Om.degree != 2 or X.degree != 1:
        raise ValueError("flat needs a 2-form and a vector field")
    return interior_vk_form(X, Om)


def _d(e, ch, l):
    return N.diff(e, ch.coords[l])


def schouten(P: KVector, Q: KVector) -> KVector:
    """Schouten bracket for degree pairs (1,1), (1,2), (2,1), (2,2)."""
    if not isinstance(P, KVector) or not isinstance(Q, KVector):
        raise TypeError("schouten needs two KVectors")
    _check_pair(P, Q)
    ch = P.chart
    n = ch.dim
    p, q = P.degree, Q.degree
    if (p, q) == (1, 1):
        X, Y = P.components(), Q.components()
        comps = []
        for a in range(n):
            terms = []
            for l in range(n):
                if not X[l].is_zero:
                    terms.append(N.mul(X[l], _d(Y[a], ch, l)))
                if not Y[l].is_zero:
                    terms.append(N.neg(N.mul(Y[l], _d(X[a], ch, l))))
            comps.append(N.add(*terms))
        return KVector._raw(ch, 1, {(a,): c for a, c in enumerate(comps)})
    if (p, q) == (2, 1):
        # with the contraction convention above, [L, E] = [E, L]
        return schouten(Q, P)
    if (p, q) == (1, 2):
        E = P.components()
        L = Q.matrix()
        out = {}
        for i, j in combinations(range(n), 2):
            terms = []
            for l in range(n):
                if not E[l].is_zero:
                    terms.append(N.mul(E[l], _d(L[i][j], ch, l)))
                if not L[l][j].is_zero:
                    terms.append(N.neg(N.mul(L[l][j], _d(E[i], ch, l))))
                if not L[i][l].is_zero:
                    terms.append(N.neg(N.mul(L[i][l], _d(E[j], ch, l))))
            out[(i, j)] = N.add(*terms)
        return KVector._raw(ch, 2, out)
    if (p, q) == (2, 2):
        A, B = P.matrix(), Q.matrix()
        out = {}
        for a, b, c in combinations(range(n), 3):
            terms = []
            for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                for l in range(n):
                    if not A[l][z].is_zero:
                        d = _d(B[x][y], ch, l)
                        if not d.is_zero:
                            terms.append(N.mul(A[l][z], d))
                    if not B[l][z].is_zero:
                        d = _d(A[x][y], ch, l)
                        if not d.is_zero:
                            terms.append(N.mul(B[l][z], d))
            out[(a, b, c)] = N.add(*terms)
        return KVector._raw(ch, 3, out)
    raise ValueError(f"unsupported Schouten degrees ({p}, {q})")


class TangentValuedOneForm:
    """A(d_lam) = sum_nu A[nu][lam] d_nu."""

    __slots__ = ("chart", "A")

    def __init__(self, chart: Chart, matrix):
        n = chart.dim
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError(f"need a {n}x{n} matrix")
        self.chart = chart
        self.A = tuple(tuple(_coerce(chart, v) for v in row) for row in matrix)

    @classmethod
    def identity(cls, chart: Chart):
        n = chart.dim
        return cls(chart, [[N.ONE if i == j else N.ZERO for j in range(n)] for i in range(n)])

    def apply(self, X: KVector) -> KVector:
        n = self.chart.dim
        comps = X.components()
        return KVector._raw(self.chart, 1, {
            (nu,): N.add(*[N.mul(self.A[nu][lam], comps[lam]) for lam in range(n)])
            for nu in range(n)
        })


def fn_insert(A: TangentValuedOneForm, beta: KForm) -> KForm:
    """i_A beta: insert A into each argument slot in turn and sum."""
    if A.chart != beta.chart:
        raise ValueError("operands live on different charts")
    n = A.chart.dim
    M = A.A
    if beta.degree == 1:
        b = beta.components()
        return KForm._raw(A.chart, 1, {
            (lam,): N.add(*[N.mul(M[nu][lam], b[nu]) for nu in range(n) if not b[nu].is_zero])
            for lam in range(n)
        })
    if beta.degree == 2:
        B = beta.matrix()
        out = {}
        for lam, mu in combinations(range(n), 2):
            terms = []
            for nu in range(n):
                if not B[nu][mu].is_zero:
                    terms.append(N.mul(M[nu][lam], B[nu][mu]))
                if not B[lam][nu].is_zero:
                    terms.append(N.mul(M[nu][mu], B[lam][nu]))
            out[(lam, mu)] = N.add(*terms)
        return KForm._raw(A.chart, 2, out)
    raise ValueError(f"fn_insert supports degrees 1 and 2, got {beta.degree}")


def lie_tv(A: TangentValuedOneForm, tau: KForm) -> KForm:
    """L_A tau = i_A d tau - d i_A tau for a 1-form tau."""
    if tau.degree != 1:
        raise ValueError("lie_tv needs a 1-form")
    return fn_insert(A, ext_d(tau)) - ext_d(fn_insert(A, tau))


def _matrices(B, points) -> np.ndarray:
    if B.degree != 2:
        raise ValueError("rank needs a degree-2 object")
    n = B.chart.dim
    keys = list(B._c)
    vals = B.chart.evaluate([B._c[k] for k in keys], points)
    out = np.zeros((vals.shape[0], n, n))
    for c, (i, j) in enumerate(keys):
        out[:, i, j] = vals[:, c]
        out[:, j, i] = -vals[:, c]
    return out


def matrix_ranks(mats: np.ndarray) -> np.ndarray:
    """Numerical rank of each matrix in a stack."""
    sv = np.linalg.svd(mats, compute_uv=False)
    floor = np.maximum(sv[:, :1], 1.0) * RANK_RTOL
    return np.sum(sv > floor, axis=1)


def rank_at(B, p: Point) -> int:
    if p.chart != B.chart:
        raise ValueError("point lives on a different chart")
    return int(matrix_ranks(_matrices(B, p.as_array()[None, :]))[0])


def constant_rank(B, s: Sampler) -> tuple:
    ranks = matrix_ranks(_matrices(B, s.points))
    return int(ranks[0]), bool(np.all(ranks == ranks[0]))
