"""Tensor fields tabulated at sample points together with their first partials.

A :class:`Table` holds full antisymmetric component arrays of shape
``(S, N, ..., N)`` and optionally their gradients with one extra trailing
axis of length ``N``. Brackets, exterior derivatives and Lie derivatives
need only first derivatives, so numerically computed objects (the duals)
can be classified exactly like symbolic ones.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from math import factorial

import numpy as np

from .expr import nodes as N
from .expr.chart import Chart, ScalarField, relative_residual
from .exterior import KForm, KVector, sort_sign

_LETTERS = "abcdefghijk"


class Table:
    """Components (and optional gradients) of a field at fixed points."""

    __slots__ = ("chart", "points", "variance", "degree", "value", "grad")

    def __init__(self, chart: Chart, points, variance: str, degree: int, value, grad=None):
        if variance not in ("form", "vector"):
            raise ValueError(f"unknown variance {variance!r}")
        self.chart = chart
        self.points = points
        self.variance = variance
        self.degree = degree
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None if grad is None else np.asarray(grad, dtype=np.float64)
        S, n = points.shape[0], chart.dim
        if self.value.shape != (S,) + (n,) * degree:
            raise ValueError(f"value shape {self.value.shape} does not match degree {degree}")
        if self.grad is not None and self.grad.shape != self.value.shape + (n,):
            raise ValueError("gradient shape mismatch")

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    def with_value(self, value, grad=None) -> "Table":
        return Table(self.chart, self.points, self.variance, self.degree, value, grad)

    def packed(self) -> np.ndarray:
        return pack(self.value, self.chart.dim, self.degree)

    def drop_grad(self) -> "Table":
        return self.with_value(self.value)

    def __add__(self, other):
        _same(self, other)
        g = None if self.grad is None or other.grad is None else self.grad + other.grad
        return self.with_value(self.value + other.value, g)

    def __sub__(self, other):
        _same(self, other)
        g = None if self.grad is None or other.grad is None else self.grad - other.grad
        return self.with_value(self.value - other.value, g)

    def __neg__(self):
        return self.with_value(-self.value, None if self.grad is None else -self.grad)

    def scale(self, f) -> "Table":
        """Multiply by a constant or by per-sample values (no gradient kept)."""
        f = np.asarray(f, dtype=np.float64)
        if f.ndim == 0:
            return self.with_value(self.value * f, None if self.grad is None else self.grad * f)
        shape = (-1,) + (1,) * self.degree
        return self.with_value(self.value * f.reshape(shape))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.value))) if self.value.size else 0.0

    def __repr__(self):
        return (f"Table({self.variance}, deg={self.degree}, samples={self.n_samples}, "
                f"grad={'yes' if self.grad is not None else 'no'})")


def _same(a: Table, b: Table):
    if a.variance != b.variance or a.degree != b.degree:
        raise ValueError("tables differ in variance or degree")
    check_points(a, b)


def check_points(*tables):
    first = tables[0]
    for t in tables[1:]:
        if t.chart != first.chart:
            raise ValueError("tables live on different charts")
        if t.points is not first.points and not np.array_equal(t.points, first.points):
            raise ValueError("tables were computed at different points")


@lru_cache(maxsize=None)
def _perm_map(n: int, k: int):
    """For each full index (flattened), its packed position and sign."""
    combos = list(combinations(range(n), k))
    where = {c: i for i, c in enumerate(combos)}
    pos = np.zeros((n,) * k, dtype=np.intp)
    sign = np.zeros((n,) * k)
    for c in combos:
        for p in permutations(c):
            s, key = sort_sign(p)
            pos[p] = where[key]
            sign[p] = s
    return pos, sign, combos


def unpack(packed: np.ndarray, n: int, k: int) -> np.ndarray:
    """Full antisymmetric arrays from packed coefficients."""
    if k == 0:
        return packed[:, 0].copy()
    pos, sign, _ = _perm_map(n, k)
    return packed[:, pos] * sign


def pack(full: np.ndarray, n: int, k: int) -> np.ndarray:
    if k == 0:
        return full[:, None]
    _, _, combos = _perm_map(n, k)
    if not combos:
        return np.zeros((full.shape[0], 0))
    idx = tuple(np.array(ax) for ax in zip(*combos))
    return full[(slice(None),) + idx]


def tabulate(obj, points, grad: bool = True) -> Table:
    """Evaluate a symbolic form, multivector or scalar (and its partials)."""
    if isinstance(obj, Table):
        if obj.points is not points and not np.array_equal(obj.points, points):
            raise ValueError("table was computed at different points")
        if grad and obj.grad is None:
            raise ValueError("tabulated input has no gradient")
        return obj
    if isinstance(obj, ScalarField):
        obj = KForm.scalar(obj)
    ch = obj.chart
    n, k = ch.dim, obj.degree
    combos = list(combinations(range(n), k))
    coeffs = [obj.expr_at(c) for c in combos]
    exprs = list(coeffs)
    if grad:
        exprs += [N.diff(e, name) for e in coeffs for name in ch.coords]
    pts = np.asarray(points)
    vals = ch.evaluate(exprs, pts)
    S, C = pts.shape[0], len(combos)
    value = unpack(vals[:, :C], n, k)
    g = None
    if grad:
        d = vals[:, C:].reshape(S, C, n)
        g = _unpack_grad(d, n, k)
    variance = "vector" if isinstance(obj, KVector) else "form"
    return Table(ch, pts, variance, k, value, g)


def _unpack_grad(d: np.ndarray, n: int, k: int) -> np.ndarray:
    # d: (S, C, n) packed gradient -> (S, n..n, n)
    S = d.shape[0]
    flat = np.moveaxis(d, 2, 1).reshape(S * n, -1)
    full = unpack(flat, n, k).reshape((S, n) + (n,) * k)
    return np.moveaxis(full, 1, -1)


def to_kobject(t: Table, sample: int):
    """Constant-coefficient symbolic object equal to the table at one sample."""
    cls = KVector if t.variance == "vector" else KForm
    packed = pack(t.value[sample:sample + 1], t.chart.dim, t.degree)[0]
    combos = list(combinations(range(t.chart.dim), t.degree))
    return cls(t.chart, t.degree, {c: float(v) for c, v in zip(combos, packed)})


# calculus ------------------------------------------------------------------

def ext_d(t: Table) -> Table:
    if t.variance != "form":
        raise ValueError("d needs a form")
    if t.grad is None:
        raise ValueError("d needs gradients")
    g = t.grad
    if t.degree == 0:
        v = g
    elif t.degree == 1:
        v = np.swapaxes(g, 1, 2) - g
    elif t.degree == 2:
        # g[s, i, j, l] = d_l W_ij ; (dW)_abc = d_a W_bc + d_b W_ca + d_c W_ab
        v = (np.einsum("sbca->sabc", g) + np.einsum("scab->sabc", g)
             + g)
    else:
        raise ValueError("d implemented up to degree 2 on tables")
    return Table(t.chart, t.points, "form", t.degree + 1, v)


def wedge(a: Table, b: Table) -> Table:
    if a.variance != b.variance:
        raise ValueError("wedge needs equal variance")
    check_points(a, b)
    p, q = a.degree, b.degree
    A, B = a.value, b.value
    if p == 0:
        v = B * A.reshape((-1,) + (1,) * q)
    elif q == 0:
        v = A * B.reshape((-1,) + (1,) * p)
    elif (p, q) == (1, 1):
        v = np.einsum("si,sj->sij", A, B) - np.einsum("sj,si->sij", A, B)
    elif (p, q) == (1, 2):
        v = (np.einsum("si,sjk->sijk", A, B) - np.einsum("sj,sik->sijk", A, B)
             + np.einsum("sk,sij->sijk", A, B))
    elif (p, q) == (2, 1):
        v = (np.einsum("sij,sk->sijk", A, B) - np.einsum("sik,sj->sijk", A, B)
             + np.einsum("sjk,si->sijk", A, B))
    else:
        raise ValueError(f"full wedge supports total degree <= 3, got {p}+{q}")
    return Table(a.chart, a.points, a.variance, p + q, v)


def contract(P: Table, beta: Table) -> Table:
    """Leading-slot contraction of P into beta (either variance order)."""
    if P.variance == beta.variance:
        raise ValueError("contraction needs opposite variances")
    check_points(P, beta)
    k, r = P.degree, beta.degree
    if k > r:
        raise ValueError("cannot contract a higher degree into a lower one")
    I = _LETTERS[:k]
    J = _LETTERS[k:r]
    v = np.einsum(f"s{I},s{I}{J}->s{J}", P.value, beta.value) / factorial(k)
    return Table(P.chart, P.points, beta.variance, r - k, v)


def lie_bracket(X: Table, Y: Table) -> Table:
    check_points(X, Y)
    v = np.einsum("sl,sal->sa", X.value, Y.grad) - np.einsum("sl,sal->sa", Y.value, X.grad)
    return Table(X.chart, X.points, "vector", 1, v)


def schouten(P: Table, Q: Table) -> Table:
    """Same conventions as the symbolic bracket; needs gradients."""
    check_points(P, Q)
    p, q = P.degree, Q.degree
    if (p, q) == (1, 1):
        return lie_bracket(P, Q)
    if (p, q) == (2, 1):
        return schouten(Q, P)
    if (p, q) == (1, 2):
        E, gE, L, gL = P.value, P.grad, Q.value, Q.grad
        v = (np.einsum("sl,sijl->sij", E, gL) - np.einsum("slj,sil->sij", L, gE)
             - np.einsum("sil,sjl->sij", L, gE))
        return Table(P.chart, P.points, "vector", 2, v)
    if (p, q) == (2, 2):
        T = (np.einsum("slc,sabl->sabc", P.value, Q.grad)
             + np.einsum("slc,sabl->sabc", Q.value, P.grad))
        v = T + np.einsum("sbca->sabc", T) + np.einsum("scab->sabc", T)
        return Table(P.chart, P.points, "vector", 3, v)
    raise ValueError(f"unsupported Schouten degrees ({p}, {q})")


def lie_derivative_1form(X: Table, w: Table) -> Table:
    """(L_X w)_b = X^a d_a w_b + w_a d_b X^a."""
    check_points(X, w)
    v = np.einsum("sa,sba->sb", X.value, w.grad) + np.einsum("sa,sab->sb", w.value, X.grad)
    return Table(X.chart, X.points, "form", 1, v)


def sharp(L: Table, alpha: Table, jet: bool = False) -> Table:
    """alpha_a L^{ab}; with ``jet`` the product-rule gradient is included."""
    check_points(L, alpha)
    v = np.einsum("sa,sab->sb", alpha.value, L.value)
    g = None
    if jet:
        g = (np.einsum("sal,sab->sbl", alpha.grad, L.value)
             + np.einsum("sa,sabl->sbl", alpha.value, L.grad))
    return Table(L.chart, L.points, "vector", 1, v, g)


def flat(W: Table, X: Table) -> Table:
    check_points(W, X)
    v = np.einsum("sa,sab->sb", X.value, W.value)
    return Table(W.chart, W.points, "form", 1, v)


def sharp2(L: Table, B: Table) -> Table:
    """(L# x L#)(B): the bivector (a, b) -> B(a#, b#)."""
    check_points(L, B)
    v = np.einsum("sac,scd,sbd->sab", L.value, B.value, L.value)
    return Table(L.chart, L.points, "vector", 2, v)


def flat2(W: Table, P: Table) -> Table:
    """(W_flat x W_flat)(P): the 2-form (X, Y) -> P(X_flat, Y_flat)."""
    check_points(W, P)
    v = np.einsum("sac,scd,sbd->sab", W.value, P.value, W.value)
    return Table(W.chart, W.points, "form", 2, v)


def pair_values(a: Table, b: Table) -> np.ndarray:
    return contract(a, b).value


def residual(a, b) -> float:
    if isinstance(a, Table):
        a = a.value
    if isinstance(b, Table):
        b = b.value
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a, b = np.broadcast_arrays(a, b)
    return relative_residual(a, b)


# packed representation for high degrees ------------------------------------

@lru_cache(maxsize=None)
def _wedge_map(n: int, p: int, q: int):
    A = {c: i for i, c in enumerate(combinations(range(n), p))}
    B = {c: i for i, c in enumerate(combinations(range(n), q))}
    out = {c: i for i, c in enumerate(combinations(range(n), p + q))}
    ia, ib, sgn, io = [], [], [], []
    for I, i in A.items():
        for J, j in B.items():
            s, key = sort_sign(I + J)
            if s:
                ia.append(i)
                ib.append(j)
                sgn.append(s)
                io.append(out[key])
    M = np.zeros((len(io), len(out)))
    M[np.arange(len(io)), io] = 1.0
    return np.array(ia, dtype=np.intp), np.array(ib, dtype=np.intp), np.array(sgn, float), M


def wedge_packed(a: np.ndarray, p: int, b: np.ndarray, q: int, n: int) -> np.ndarray:
    if p + q > n:
        return np.zeros((a.shape[0], 0))
    ia, ib, sgn, M = _wedge_map(n, p, q)
    if not len(ia):
        return np.zeros((a.shape[0], M.shape[1]))
    return (a[:, ia] * b[:, ib] * sgn) @ M


def power_packed(a: np.ndarray, p: int, k: int, n: int) -> np.ndarray:
    out = np.ones((a.shape[0], 1))
    deg = 0
    for _ in range(k):
        out = wedge_packed(out, deg, a, p, n)
        deg += p
    return out


@lru_cache(maxsize=None)
def _contract1_map(n: int, k: int):
    src = {c: i for i, c in enumerate(combinations(range(n), k))}
    dst = {c: i for i, c in enumerate(combinations(range(n), k - 1))}
    ia, isrc, sgn, idst = [], [], [], []
    for K, j in src.items():
        for pos, a in enumerate(K):
            rest = K[:pos] + K[pos + 1:]
            ia.append(a)
            isrc.append(j)
            sgn.append((-1) ** pos)
            idst.append(dst[rest])
    M = np.zeros((len(idst), len(dst)))
    M[np.arange(len(idst)), idst] = 1.0
    return np.array(ia, dtype=np.intp), np.array(isrc, dtype=np.intp), np.array(sgn, float), M


def contract1_packed(alpha: np.ndarray, P: np.ndarray, k: int, n: int) -> np.ndarray:
    """i_alpha P for a 1-form alpha and packed degree-k object P."""
    ia, isrc, sgn, M = _contract1_map(n, k)
    return (alpha[:, ia] * P[:, isrc] * sgn) @ M


def matrix_ranks(mats: np.ndarray) -> np.ndarray:
    from .exterior import matrix_ranks as _mr
    return _mr(mats)


# dualisation with first-order jets ---------------------------------------

class SingularFiber(ArithmeticError):
    def __init__(self, sample_index: int, point):
        self.sample_index = sample_index
        self.point = point
        super().__init__(f"pointwise system is singular at sample {sample_index}: {point}")


COND_LIMIT = 1e12


def dual_jets(A: Table, v: Table):
    """Solve the pointwise duality system and propagate first derivatives.

    With ``M = A^T + v v^T`` this returns ``u = M^-1 v`` and
    ``B = (I - u v^T) M^-T``. For (A, v) = (Omega, omega) the result is
    (E, Lambda); for (Lambda, E) it is (omega, Omega).
    """
    check_points(A, v)
    if A.grad is None or v.grad is None:
        raise ValueError("dualisation needs gradients")
    S, n = A.n_samples, A.chart.dim
    W, w, gW, gw = A.value, v.value, A.grad, v.grad
    M = np.swapaxes(W, 1, 2) + np.einsum("si,sj->sij", w, w)
    cond = np.linalg.cond(M)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > COND_LIMIT))
    if bad.size:
        i = int(bad[0])
        raise SingularFiber(i, dict(zip(A.chart.coords, map(float, A.points[i]))))
    Minv = np.linalg.inv(M)
    u = np.einsum("sij,sj->si", Minv, w)
    # dM[s, i, j, l]
    dM = (np.einsum("sjil->sijl", gW) + np.einsum("sil,sj->sijl", gw, w)
          + np.einsum("si,sjl->sijl", w, gw))
    du = np.einsum("sij,sjl->sil", Minv, gw - np.einsum("sijl,sj->sil", dM, u))
    eye = np.eye(n)[None]
    P = eye - np.einsum("si,sj->sij", u, w)
    B = np.einsum("sik,sjk->sij", P, Minv)
    dMinv = -np.einsum("sia,sabl,sbj->sijl", Minv, dM, Minv)
    dP = -(np.einsum("sil,sj->sijl", du, w) + np.einsum("si,sjl->sijl", u, gw))
    dB = np.einsum("sikl,sjk->sijl", dP, Minv) + np.einsum("sik,sjkl->sijl", P, dMinv)
    asym = float(np.max(np.abs(B + np.swapaxes(B, 1, 2)))) if S else 0.0
    B = 0.5 * (B - np.swapaxes(B, 1, 2))
    dB = 0.5 * (dB - np.swapaxes(dB, 1, 2))
    other = "vector" if A.variance == "form" else "form"
    u_t = Table(A.chart, A.points, other, 1, u, du)
    B_t = Table(A.chart, A.points, other, 2, B, dB)
    return u_t, B_t, asym
