"""Phase-space structures of Galilei and Einstein spacetimes.

Coordinates on the phase chart are (x0, x1, x2, x3, x10, x20, x30): spacetime
coordinates followed by the velocity coordinates.  Scales m, hbar, c are
chart constants.  Connection coefficients use ``K[nu][lam][mu]`` for the
coefficient of the lam, mu slots with upper index nu; the sign convention is
``K = -Christoffel`` so the covariant derivative reads d X + K X.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import pointwise as P
from .expr import nodes as N
from .expr.chart import DEFAULT_TOL, Chart, Sampler, ScalarField, parse_expr
from .exterior import (KForm, KVector, TangentValuedOneForm, ext_d, fn_insert, lie_tv,
                       pairing, wedge)
from .structures import (ACPJTriple, ContravariantPair, CovariantPair, classify_contravariant,
                         classify_covariant, duality_residuals)

SPACETIME = ("x0", "x1", "x2", "x3")
VELOCITY = ("x10", "x20", "x30")
PHASE = SPACETIME + VELOCITY
WHICH = ("galilei", "einstein")
TIMELIKE_MARGIN = 0.05


class MetricError(ValueError):
    """Metric fails its positivity/signature/invertibility requirement at a sample."""

    def __init__(self, message, point=None):
        super().__init__(message if point is None else f"{message} at {point}")
        self.point = point


def phase_chart(m: float = 1.0, hbar: float = 1.0, c: float = 1.0) -> Chart:
    for name, v in (("m", m), ("hbar", hbar), ("c", c)):
        if not v > 0:
            raise ValueError(f"scale {name} must be positive, got {v}")
    return Chart(PHASE, {"m": m, "hbar": hbar, "c": c})


def _which(which: str) -> str:
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    return which


def _field(chart: Chart, v) -> N.Expr:
    if isinstance(v, ScalarField):
        return v.expr
    if isinstance(v, str):
        e = parse_expr(v, chart).expr
    else:
        e = N.lift(v)
    bad = N.free_symbols(e) & set(VELOCITY)
    if bad:
        raise ValueError(f"spacetime data may not depend on velocities {sorted(bad)}")
    missing = N.free_symbols(e) - chart.names
    if missing:
        raise KeyError(f"symbols not in chart: {sorted(missing)}")
    return e


def _square(chart, mat, size, name):
    if len(mat) != size or any(len(row) != size for row in mat):
        raise ValueError(f"{name} must be {size}x{size}")
    return [[_field(chart, v) for v in row] for row in mat]


def _symmetric_from_upper(M):
    n = len(M)
    return tuple(tuple(M[min(i, j)][max(i, j)] for j in range(n)) for i in range(n))


def _antisymmetric_from_upper(M):
    n = len(M)
    return tuple(tuple(N.ZERO if i == j else (M[i][j] if i < j else N.neg(M[j][i]))
                       for j in range(n)) for i in range(n))


@dataclass(frozen=True, eq=False)
class GalileiInput:
    """Spatial metric g (3x3) and force 2-form phi (4x4); upper triangles are authoritative."""

    g: tuple
    phi: tuple = None
    m: float = 1.0
    hbar: float = 1.0
    c: float = 1.0
    chart: Chart = None

    def __post_init__(self):
        ch = self.chart or phase_chart(self.m, self.hbar, self.c)
        g = _symmetric_from_upper(_square(ch, self.g, 3, "spatial metric"))
        phi = self.phi if self.phi is not None else [[0.0] * 4 for _ in range(4)]
        phi = _antisymmetric_from_upper(_square(ch, phi, 4, "phi"))
        object.__setattr__(self, "chart", ch)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def flat(cls, **kw) -> "GalileiInput":
        return cls([[1.0 if i == j else 0.0 for j in range(3)] for i in range(3)], **kw)

    def check(self, s: Sampler):
        vals = _matrix_values(self.chart, self.g, s.points)
        eig = np.linalg.eigvalsh(vals)
        bad = np.nonzero(eig[:, 0] <= 0.0)[0]
        if bad.size:
            raise MetricError("spatial metric is not positive definite", _pt(s, bad[0]))


@dataclass(frozen=True, eq=False)
class EinsteinInput:
    """Lorentzian metric g (4x4, signature -+++); upper triangle is authoritative."""

    g: tuple
    m: float = 1.0
    hbar: float = 1.0
    c: float = 1.0
    chart: Chart = None

    def __post_init__(self):
        ch = self.chart or phase_chart(self.m, self.hbar, self.c)
        g = _symmetric_from_upper(_square(ch, self.g, 4, "metric"))
        object.__setattr__(self, "chart", ch)
        object.__setattr__(self, "g", g)

    @classmethod
    def minkowski(cls, **kw) -> "EinsteinInput":
        return cls([[-1.0 if i == j == 0 else (1.0 if i == j else 0.0) for j in range(4)]
                    for i in range(4)], **kw)

    def check(self, s: Sampler):
        vals = _matrix_values(self.chart, self.g, s.points)
        eig = np.linalg.eigvalsh(vals)
        neg = np.sum(eig < 0.0, axis=1)
        bad = np.nonzero((neg != 1) | (np.min(np.abs(eig), axis=1) <= 1e-12))[0]
        if bad.size:
            raise MetricError("metric does not have signature (-+++)", _pt(s, bad[0]))


def _pt(s: Sampler, i) -> dict:
    return dict(zip(s.chart.coords, map(float, s.points[int(i)])))


def _matrix_values(chart, M, points):
    n = len(M)
    flat = chart.evaluate([e for row in M for e in row], points)
    return flat.reshape(-1, n, n)


# symbolic linear algebra ------------------------------------------------------

def _det(M, rows, cols, memo):
    key = (rows, cols)
    if key in memo:
        return memo[key]
    if len(rows) == 1:
        out = M[rows[0]][cols[0]]
    else:
        r0, rest = rows[0], rows[1:]
        terms = []
        for k, c in enumerate(cols):
            a = M[r0][c]
            if a.is_zero:
                continue
            minor = _det(M, rest, cols[:k] + cols[k + 1:], memo)
            if minor.is_zero:
                continue
            t = N.mul(a, minor)
            terms.append(t if k % 2 == 0 else N.neg(t))
        out = N.add(*terms)
    memo[key] = out
    return out


def symbolic_inverse(M):
    """Adjugate over determinant; entries share the determinant node."""
    n = len(M)
    memo: dict = {}
    idx = tuple(range(n))
    det = _det(M, idx, idx, memo)
    if det.is_zero:
        raise MetricError("matrix is identically singular")
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = idx[:j] + idx[j + 1:]
            cols = idx[:i] + idx[i + 1:]
            cof = _det(M, rows, cols, memo) if n > 1 else N.ONE
            if (i + j) % 2:
                cof = N.neg(cof)
            inv[i][j] = N.div(cof, det)
    return tuple(tuple(r) for r in inv), det


# connections ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearConnection:
    """Torsion-free spacetime connection; K[nu][lam][mu] = K[nu][mu][lam]."""

    chart: Chart
    K: tuple

    def __post_init__(self):
        K = self.K
        if len(K) != 4 or any(len(a) != 4 or any(len(b) != 4 for b in a) for a in K):
            raise ValueError("K must be 4x4x4")
        K = tuple(tuple(tuple(_field(self.chart, v) for v in b) for b in a) for a in K)
        for nu in range(4):
            for lam in range(4):
                for mu in range(lam + 1, 4):
                    if K[nu][lam][mu] is not K[nu][mu][lam]:
                        raise ValueError(f"K[{nu}] is not symmetric in ({lam}, {mu})")
        object.__setattr__(self, "K", K)

    @classmethod
    def zero(cls, chart: Chart) -> "LinearConnection":
        return cls(chart, [[[N.ZERO] * 4 for _ in range(4)] for _ in range(4)])

    def values(self, points) -> np.ndarray:
        """Array (S, 4, 4, 4)."""
        flat = self.chart.evaluate([e for a in self.K for b in a for e in b], points)
        return flat.reshape(-1, 4, 4, 4)


def _d(e, l):
    return N.diff(e, SPACETIME[l])


def galilei_connection(inp: GalileiInput) -> LinearConnection:
    """Time-preserving metric connection from spatial metric g and 2-form phi."""
    g, phi = inp.g, inp.phi
    gi, _ = symbolic_inverse(g)
    K = [[[N.ZERO] * 4 for _ in range(4)] for _ in range(4)]
    half = N.const(-0.5)
    for i in range(1, 4):
        row = gi[i - 1]
        K[i][0][0] = N.neg(N.add(*[N.mul(row[j - 1], 2.0, phi[0][j]) for j in range(1, 4)]))
        for h in range(1, 4):
            e = N.mul(half, N.add(*[N.mul(row[j - 1], N.add(N.mul(2.0, phi[h][j]),
                                                             _d(g[h - 1][j - 1], 0)))
                                    for j in range(1, 4)]))
            K[i][0][h] = K[i][h][0] = e
        for k in range(1, 4):
            for h in range(k, 4):
                e = N.mul(half, N.add(*[N.mul(row[j - 1], N.add(
                    _d(g[j - 1][k - 1], h), _d(g[j - 1][h - 1], k), N.neg(_d(g[h - 1][k - 1], j))))
                    for j in range(1, 4)]))
                K[i][k][h] = K[i][h][k] = e
    return LinearConnection(inp.chart, K)


def levi_civita(inp: EinsteinInput) -> LinearConnection:
    """K = -Christoffel symbols of g."""
    g = inp.g
    gi, _ = symbolic_inverse(g)
    K = [[[N.ZERO] * 4 for _ in range(4)] for _ in range(4)]
    for nu in range(4):
        for lam in range(4):
            for mu in range(lam, 4):
                terms = []
                for s in range(4):
                    if gi[nu][s].is_zero:
                        continue
                    inner = N.add(_d(g[s][lam], mu), _d(g[s][mu], lam), N.neg(_d(g[lam][mu], s)))
                    if not inner.is_zero:
                        terms.append(N.mul(gi[nu][s], inner))
                K[nu][lam][mu] = K[nu][mu][lam] = N.mul(-0.5, N.add(*terms))
    return LinearConnection(inp.chart, K)


def _christoffel_values(Kv):
    return -Kv


def curvature_values(K: LinearConnection, points) -> np.ndarray:
    """R[nu, sig, lam, mu] = d_lam G^nu_mu,sig - d_mu G^nu_lam,sig + G G - G G with G = -K."""
    ch = K.chart
    G = [[[N.neg(K.K[a][b][c]) for c in range(4)] for b in range(4)] for a in range(4)]
    exprs = []
    for nu in range(4):
        for sig in range(4):
            for lam in range(4):
                for mu in range(4):
                    terms = [_d(G[nu][mu][sig], lam), N.neg(_d(G[nu][lam][sig], mu))]
                    for r in range(4):
                        terms.append(N.mul(G[nu][lam][r], G[r][mu][sig]))
                        terms.append(N.neg(N.mul(G[nu][mu][r], G[r][lam][sig])))
                    exprs.append(N.add(*terms))
    return ch.evaluate(exprs, points).reshape(-1, 4, 4, 4, 4)


def _nabla_g_values(K: LinearConnection, g, points, spatial: bool) -> np.ndarray:
    """(nabla_lam g)_{ab} = d_lam g_ab + K^p_{lam a} g_pb + K^p_{lam b} g_ap."""
    ch = K.chart
    off = 1 if spatial else 0
    n = len(g)
    exprs = []
    for lam in range(4):
        for a in range(n):
            for b in range(n):
                terms = [_d(g[a][b], lam)]
                for p in range(n):
                    terms.append(N.mul(K.K[p + off][lam][a + off], g[p][b]))
                    terms.append(N.mul(K.K[p + off][lam][b + off], g[a][p]))
                exprs.append(N.add(*terms))
    return ch.evaluate(exprs, points).reshape(-1, 4, n, n)


def _max(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def connection_diagnostics(K: LinearConnection, g, which: str, s: Sampler) -> dict:
    """Residuals: torsion, nabla g, nabla dt and curvature symmetry (Galilei only)."""
    which = _which(which)
    pts = s.points
    Kv = K.values(pts)
    out = {"torsion": _max(Kv - np.swapaxes(Kv, 2, 3))}
    if which == "galilei":
        out["nabla_g"] = _max(_nabla_g_values(K, g, pts, spatial=True))
        out["nabla_dt"] = _max(Kv[:, 0])
        R = curvature_values(K, pts)
        gv = _matrix_values(K.chart, g, pts)
        gi = np.linalg.inv(gv)
        # S[lam, i, mu, j] = g^{jp} R^i_{lam mu p}, spatial i, j, p
        Rs = R[:, 1:, :, :, 1:]  # nu=i, sig=lam, lam=mu, mu=p
        S = np.einsum("sjp,silmp->slimj", gi, Rs)
        out["curvature_symmetry"] = _max(S - np.transpose(S, (0, 3, 4, 1, 2)))
    else:
        out["nabla_g"] = _max(_nabla_g_values(K, g, pts, spatial=False))
    return out


# phase objects ----------------------------------------------------------------

def _v(i):
    return N.sym(VELOCITY[i - 1])


def phase_connection(K: LinearConnection, which: str) -> tuple:
    """Gamma[lam][i-1] = Gamma^i_lam as ScalarFields on the phase chart."""
    which = _which(which)
    Kk = K.K
    out = []
    for lam in range(4):
        row = []
        time = N.add(Kk[0][lam][0], *[N.mul(Kk[0][lam][p], _v(p)) for p in range(1, 4)])
        for i in range(1, 4):
            e = N.add(Kk[i][lam][0], *[N.mul(Kk[i][lam][p], _v(p)) for p in range(1, 4)])
            if which == "einstein":
                e = N.add(e, N.neg(N.mul(_v(i), time)))
            row.append(ScalarField(K.chart, e))
        out.append(tuple(row))
    return tuple(out)


def phase_connection_form(Gam, chart: Chart) -> TangentValuedOneForm:
    """Gamma as d^lam (x) (d_lam + Gamma^i_lam d^0_i) on the phase chart."""
    M = [[N.ZERO] * 7 for _ in range(7)]
    for lam in range(4):
        M[lam][lam] = N.ONE
        for i in range(1, 4):
            M[3 + i][lam] = Gam[lam][i - 1].expr
    return TangentValuedOneForm(chart, M)


@dataclass(frozen=True, eq=False)
class ContactObjects:
    dee: KVector
    tau: KForm
    theta: TangentValuedOneForm
    alpha0: ScalarField | None = None
    quadratic: ScalarField | None = None


def timelike_form(inp: EinsteinInput) -> ScalarField:
    """g00 + 2 g0j x^j0 + g_ij x^i0 x^j0 (negative on the timelike region)."""
    g = inp.g
    terms = [g[0][0]]
    for j in range(1, 4):
        terms.append(N.mul(2.0, g[0][j], _v(j)))
        for i in range(1, 4):
            terms.append(N.mul(g[i][j], _v(i), _v(j)))
    return ScalarField(inp.chart, N.add(*terms))


def contact_objects(inp, which: str) -> ContactObjects:
    which = _which(which)
    ch = inp.chart
    unit = [N.ONE] + [_v(i) for i in range(1, 4)] + [N.ZERO] * 3
    if which == "galilei":
        dee = KVector.from_list(ch, unit)
        tau = KForm.basis(ch, "x0")
        alpha0 = Q = None
    else:
        c = N.sym("c")
        Q = timelike_form(inp)
        alpha0 = ScalarField(ch, N.div(N.ONE, N.sqrt(N.neg(Q.expr))))
        a = alpha0.expr
        dee = KVector.from_list(ch, [N.mul(c, a, u) for u in unit])
        g = inp.g
        coef = N.neg(N.div(a, c))
        tau = KForm.from_list(ch, [N.mul(coef, N.add(g[0][lam], *[N.mul(g[i][lam], _v(i))
                                                                  for i in range(1, 4)]))
                                   for lam in range(4)] + [N.ZERO] * 3)
    d, t = dee.components(), tau.components()
    theta = TangentValuedOneForm(ch, [[N.add(N.ONE if (nu == lam and nu < 4) else N.ZERO,
                                             N.neg(N.mul(d[nu], t[lam])))
                                       if lam < 4 else N.ZERO
                                       for lam in range(7)] for nu in range(7)])
    return ContactObjects(dee, tau, theta, alpha0, Q)


def dynamical_components(Gam) -> tuple:
    """gamma^i = Gamma^i_0 + Gamma^i_j x^j0."""
    return tuple(N.add(Gam[0][i - 1].expr, *[N.mul(Gam[j][i - 1].expr, _v(j)) for j in range(1, 4)])
                 for i in range(1, 4))


def dynamical_connection(Gam, which: str, alpha0: ScalarField | None = None) -> KVector:
    """gamma = scale (d_0 + x^i0 d_i + gamma^i d^0_i); scale 1 (Galilei) or c alpha0 (Einstein)."""
    which = _which(which)
    ch = Gam[0][0].chart
    if which == "einstein":
        if alpha0 is None:
            raise ValueError("the Einstein dynamical connection needs alpha0")
        scale = N.mul(N.sym("c"), alpha0.expr)
    else:
        scale = N.ONE
    comps = [N.ONE] + [_v(i) for i in range(1, 4)] + list(dynamical_components(Gam))
    return KVector.from_list(ch, [N.mul(scale, e) for e in comps])


def _one_form(ch, comps) -> KForm:
    return KForm.from_list(ch, comps)


def _vector(ch, comps) -> KVector:
    return KVector.from_list(ch, comps)


def _vertical_forms(ch, Gam):
    """nu^i = d^i0 - Gamma^i_lam d^lam for i = 1..3."""
    out = []
    for i in range(1, 4):
        comps = [N.neg(Gam[lam][i - 1].expr) for lam in range(4)] + [N.ZERO] * 3
        comps[3 + i] = N.ONE
        out.append(_one_form(ch, comps))
    return out


def _horizontal_vectors(ch, Gam):
    """d_lam + Gamma^i_lam d^0_i for lam = 0..3."""
    out = []
    for lam in range(4):
        comps = [N.ZERO] * 7
        comps[lam] = N.ONE
        for i in range(1, 4):
            comps[3 + i] = Gam[lam][i - 1].expr
        out.append(_vector(ch, comps))
    return out


def _sum(items, zero):
    out = zero
    for x in items:
        out = out + x
    return out


def phase_two_form(inp, which: str, Gam, objs: ContactObjects) -> KForm:
    ch = inp.chart
    nus = _vertical_forms(ch, Gam)
    terms = []
    if which == "galilei":
        g = inp.g
        for j in range(1, 4):
            comps = [N.ZERO] * 7
            comps[0] = N.neg(_v(j))
            comps[j] = N.ONE
            base = _one_form(ch, comps)
            for i in range(1, 4):
                if not g[i - 1][j - 1].is_zero:
                    terms.append(wedge(nus[i - 1], base).scale(g[i - 1][j - 1]))
    else:
        g = inp.g
        c = N.sym("c")
        tau = objs.tau.components()
        pref = N.mul(c, objs.alpha0.expr)
        for i in range(1, 4):
            for mu in range(4):
                coef = N.mul(pref, N.add(g[i][mu], N.mul(c, c, tau[i], tau[mu])))
                if coef.is_zero:
                    continue
                terms.append(wedge(nus[i - 1], KForm.basis(ch, PHASE[mu])).scale(coef))
    return _sum(terms, KForm.zero(ch, 2))


def phase_two_vector(inp, which: str, Gam, objs: ContactObjects) -> KVector:
    ch = inp.chart
    hs = _horizontal_vectors(ch, Gam)
    terms = []
    if which == "galilei":
        gi, _ = symbolic_inverse(inp.g)
        for i in range(1, 4):
            for j in range(1, 4):
                if not gi[i - 1][j - 1].is_zero:
                    terms.append(wedge(hs[i], KVector.basis(ch, VELOCITY[j - 1])).scale(gi[i - 1][j - 1]))
    else:
        gi, _ = symbolic_inverse(inp.g)
        inv_pref = N.div(N.ONE, N.mul(N.sym("c"), objs.alpha0.expr))
        for j in range(1, 4):
            for lam in range(4):
                coef = N.add(gi[j][lam], N.neg(N.mul(_v(j), gi[0][lam])))
                if coef.is_zero:
                    continue
                terms.append(wedge(hs[lam], KVector.basis(ch, VELOCITY[j - 1]))
                             .scale(N.mul(inv_pref, coef)))
    return _sum(terms, KVector.zero(ch, 2))


@dataclass(frozen=True, eq=False)
class PhaseStructures:
    """Scaled phase objects and the unscaled pairs built from them."""

    which: str
    connection: LinearConnection
    Gamma: tuple
    objects: ContactObjects
    gamma: KVector
    Omega: KForm
    Lambda: KVector
    covariant: CovariantPair
    contravariant: ContravariantPair
    triple: ACPJTriple
    factors: dict = field(default_factory=dict)


def scale_factors(chart: Chart) -> dict:
    """Symbolic unscaling factors: omega, Omega, E, Lambda."""
    m, hb, c = N.sym("m"), N.sym("hbar"), N.sym("c")
    mc2_h = N.div(N.mul(m, c, c), hb)
    return {
        "omega": N.neg(mc2_h),
        "Omega": N.div(m, hb),
        "E": N.neg(N.div(hb, N.mul(m, c, c))),
        "Lambda": N.div(hb, m),
    }


def phase_structures(inp, which: str, connection: LinearConnection | None = None) -> PhaseStructures:
    which = _which(which)
    if which == "galilei" and not isinstance(inp, GalileiInput):
        raise TypeError("galilei structures need a GalileiInput")
    if which == "einstein" and not isinstance(inp, EinsteinInput):
        raise TypeError("einstein structures need an EinsteinInput")
    K = connection or (galilei_connection(inp) if which == "galilei" else levi_civita(inp))
    if K.chart != inp.chart:
        raise ValueError("connection lives on a different chart")
    Gam = phase_connection(K, which)
    objs = contact_objects(inp, which)
    gamma = dynamical_connection(Gam, which, objs.alpha0)
    Om = phase_two_form(inp, which, Gam, objs)
    Lam = phase_two_vector(inp, which, Gam, objs)
    f = scale_factors(inp.chart)
    w_hat = objs.tau.scale(f["omega"])
    Om_hat = Om.scale(f["Omega"])
    E_hat = gamma.scale(f["E"])
    L_hat = Lam.scale(f["Lambda"])
    return PhaseStructures(which, K, Gam, objs, gamma, Om, Lam,
                           CovariantPair(w_hat, Om_hat), ContravariantPair(E_hat, L_hat),
                           ACPJTriple(E_hat, L_hat, w_hat), f)


# sampling and verification ------------------------------------------------------

def phase_sampler(inp, which: str, seed: int = 0, count: int = 32, velocity: float = None) -> Sampler:
    """[-1,1] spacetime box; Einstein velocities are rejected outside the timelike margin."""
    which = _which(which)
    ch = inp.chart
    if which == "galilei":
        v = 1.0 if velocity is None else velocity
        return Sampler(ch, ((-1.0, 1.0),) * 4 + ((-v, v),) * 3, seed=seed, count=count)
    v = 0.9 if velocity is None else velocity
    box = ((-1.0, 1.0),) * 4 + ((-v, v),) * 3
    # signature first, so a wrong metric is reported as such rather than as an empty domain
    inp.check(Sampler(ch, box, seed=seed, count=count))
    Q = timelike_form(inp)
    constraint = ScalarField(ch, N.add(Q.expr, TIMELIKE_MARGIN))
    return Sampler(ch, box, constraint, seed=seed, count=count)


def _sym_residual(a, b, s: Sampler) -> float:
    """Relative residual of two symbolic alternating objects."""
    if isinstance(b, (int, float)):
        exprs = list(a.coeffs.values())
        if not exprs:
            return 0.0
        va = s.chart.evaluate(exprs, s.points)
        return float(np.max(np.abs(va - b) / (1.0 + np.maximum(np.abs(va), abs(b)))))
    return a.residual(b, s)


def einstein_normalisations(inp: EinsteinInput, objs: ContactObjects, s: Sampler) -> dict:
    ch = inp.chart
    g = inp.g
    gi, _ = symbolic_inverse(g)
    d, t = objs.dee.components(), objs.tau.components()
    c = N.sym("c")
    gdd = N.add(*[N.mul(g[a][b], d[a], d[b]) for a in range(4) for b in range(4)])
    ttau = N.add(*[N.mul(gi[a][b], t[a], t[b]) for a in range(4) for b in range(4)])
    vals = ch.evaluate([N.add(gdd, N.mul(c, c)),
                        N.add(N.add(*[N.mul(t[a], d[a]) for a in range(4)]), -1.0),
                        N.add(ttau, N.div(N.ONE, N.mul(c, c)))], s.points)
    return {"g_dee_dee_plus_c2": _max(vals[:, 0]), "tau_dee_minus_1": _max(vals[:, 1]),
            "gbar_tau_tau_plus_inv_c2": _max(vals[:, 2])}


def theta_checks(objs: ContactObjects, s: Sampler) -> dict:
    ch = objs.theta.chart
    T = objs.theta.A
    n = ch.dim
    sq = [[N.add(*[N.mul(T[a][k], T[k][b]) for k in range(n)]) for b in range(n)] for a in range(n)]
    idem = [N.add(sq[a][b], N.neg(T[a][b])) for a in range(n) for b in range(n)]
    kill = objs.theta.apply(objs.dee).components()
    vals = ch.evaluate(idem + kill, s.points)
    return {"theta_idempotent": _max(vals[:, :n * n]), "theta_dee": _max(vals[:, n * n:])}


def metric_connection_condition(K: LinearConnection, g, s: Sampler, rng) -> float:
    """Compatibility condition between K and g, evaluated on random constant X, Y, Z at each sample."""
    pts = s.points
    ng = _nabla_g_values(K, g, pts, spatial=False)  # (S, lam, a, b)
    Kv = K.values(pts)
    gv = _matrix_values(K.chart, g, pts)
    S = pts.shape[0]
    X, Y, Z = (rng.uniform(-1, 1, (S, 4)) for _ in range(3))
    T = Kv - np.swapaxes(Kv, 2, 3)  # torsion T^nu_{lam mu} up to sign convention

    def ng3(A, B, C):
        return np.einsum("sl,slab,sa,sb->s", A, ng, B, C)

    def gg(A, B):
        return np.einsum("sa,sab,sb->s", A, gv, B)

    TXY = np.einsum("snlm,sl,sm->sn", T, X, Y)
    val = (gg(Z, Z) * (ng3(X, Y, Z) - ng3(Y, X, Z) + gg(TXY, Z))
           + 0.5 * gg(Z, X) * ng3(Y, Z, Z) - 0.5 * gg(Z, Y) * ng3(X, Z, Z))
    return _max(val)


def gamma_perturbation_witness(ps: PhaseStructures, s: Sampler, rng) -> float:
    """|(gamma + V) _| Omega| for a random unit vertical V; must stay away from 0."""
    ch = ps.Omega.chart
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    V = KVector.from_list(ch, [0.0] * 4 + [float(x) for x in v])
    from .exterior import interior_vk_form
    img = interior_vk_form(ps.gamma + V, ps.Omega)
    return _max(ch.evaluate(list(img.coeffs.values()), s.points)) if img.coeffs else 0.0


@dataclass
class TheoremReport:
    which: str
    residuals: dict
    statements: dict
    covariant: dict
    contravariant: dict
    tol: float
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "residuals": dict(sorted(self.residuals.items())),
            "statements": dict(sorted(self.statements.items())),
            "covariant": self.covariant,
            "contravariant": self.contravariant,
            "tol": self.tol,
            "passed": self.passed,
            "notes": list(self.notes),
        }


def verify_theorems(inp, which: str, s: Sampler | None = None, tol: float = DEFAULT_TOL,
                    connection: LinearConnection | None = None, seed: int = 0) -> TheoremReport:
    """Residual table for the Galilei / Einstein phase-space theorems."""
    which = _which(which)
    s = s or phase_sampler(inp, which, seed=seed)
    inp.check(s)
    ps = phase_structures(inp, which, connection)
    rng = np.random.default_rng(s.seed)
    res = {}
    notes = []
    diag = connection_diagnostics(ps.connection, inp.g, which, s)
    cov = classify_covariant(ps.covariant, s, tol)
    tri = ps.triple
    con = classify_contravariant(tri.pair, tri.omega, s, tol)
    Om = P.tabulate(ps.Omega, s.points)
    res["d_Omega"] = P.residual(P.ext_d(Om), 0.0)
    from .exterior import interior_vk_form
    res["gamma_Omega"] = _sym_residual(interior_vk_form(ps.gamma, ps.Omega), 0.0, s)
    res["E_Lambda"] = con.residuals["E_Lambda"]
    w, W = ps.covariant.jets(s)
    E, L = tri.pair.jets(s)
    dual = duality_residuals(w, W, E, L)
    res["duality"] = max(dual.values())
    res["torsion"] = diag["torsion"]
    res["nabla_g"] = diag["nabla_g"]
    res.update(theta_checks(ps.objects, s))
    statements = {}
    if which == "galilei":
        res["Lambda_Lambda"] = con.residuals["Lambda_Lambda"]
        res["nabla_dt"] = diag["nabla_dt"]
        res["curvature_symmetry"] = diag["curvature_symmetry"]
        statements["galilei_connection"] = max(diag.values()) <= tol
        statements["cosymplectic"] = "cosymplectic" in cov.labels
        statements["coPoisson"] = "coPoisson" in con.labels
    else:
        res.update(einstein_normalisations(inp, ps.objects, s))
        tau = ps.objects.tau
        c2 = N.mul(N.sym("c"), N.sym("c"))
        dtau = ext_d(tau)
        res["Omega_plus_c2_dtau"] = _sym_residual(ps.Omega, dtau.scale(N.neg(c2)), s)
        A = phase_connection_form(ps.Gamma, inp.chart)
        LGt = lie_tv(A, tau)
        res["L_Gamma_tau"] = _sym_residual(LGt, 0.0, s)
        # two paths: coordinate Omega vs c^2 (L_Gamma tau - d tau)
        res["Omega_vs_c2_LGamma_tau_minus_dtau"] = _sym_residual(ps.Omega, (LGt - dtau).scale(c2), s)
        res["Lambda_Lambda_plus_2E_Lambda"] = con.residuals["Lambda_Lambda_plus_2E_Lambda"]
        res["metric_connection_condition"] = metric_connection_condition(ps.connection, inp.g, s, rng)
        statements["L_Gamma_tau_zero"] = res["L_Gamma_tau"] <= tol
        statements["metric_connection_condition"] = res["metric_connection_condition"] <= tol
        statements["contact"] = "contact" in cov.labels
        statements["Jacobi"] = "Jacobi" in con.labels
        statements["almost_cosymplectic_contact"] = "almost-cosymplectic-contact" in cov.labels
        statements["almost_coPoisson_Jacobi"] = "almost-coPoisson-Jacobi" in con.labels
    keys = [k for k in statements if k not in ("almost_cosymplectic_contact", "almost_coPoisson_Jacobi")]
    statements["equivalence_consistent"] = len({statements[k] for k in keys}) == 1
    if not statements["equivalence_consistent"]:
        notes.append("theorem statements disagree: " + ", ".join(
            f"{k}={statements[k]}" for k in keys))
    return TheoremReport(which, res, statements, cov.to_dict(), con.to_dict(), tol, notes)
