"""Covariant and contravariant pairs, their classification and duality.

Every check works on first-order jets at the sampler's points, so symbolic
inputs and numerically dualised ones go through the same code.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pointwise as P
from .expr.chart import DEFAULT_TOL, Sampler
from .exterior import KForm, KVector, matrix_ranks
from .generators import random_closed_one_form, random_kform, random_kvector, random_scalar
from .pointwise import Table

COVARIANT_LABELS = ("pre-cosymplectic", "cosymplectic", "contact", "almost-cosymplectic-contact")
CONTRAVARIANT_LABELS = ("pre-coPoisson", "coPoisson", "Jacobi", "almost-coPoisson-Jacobi", "trivial")


class PairInvariantError(ValueError):
    """The input is not a covariant/contravariant pair on the sampled domain."""


class NonRegularError(ValueError):
    """The operation needs a regular pair (full rank 2n)."""


def _kind(obj):
    if isinstance(obj, Table):
        return obj.variance, obj.degree, obj.chart
    if isinstance(obj, KForm):
        return "form", obj.degree, obj.chart
    if isinstance(obj, KVector):
        return "vector", obj.degree, obj.chart
    raise TypeError(f"expected KForm, KVector or Table, got {type(obj).__name__}")


def _expect(obj, variance, degree, name):
    v, d, ch = _kind(obj)
    if (v, d) != (variance, degree):
        raise TypeError(f"{name} must be a degree-{degree} {variance}, got degree-{d} {v}")
    return ch


def _odd_chart(*charts):
    ch = charts[0]
    if any(c != ch for c in charts[1:]):
        raise ValueError("components live on different charts")
    if ch.dim % 2 == 0:
        raise ValueError(f"structures need an odd-dimensional chart, got dim {ch.dim}")
    return ch


@dataclass(frozen=True, eq=False)
class CovariantPair:
    omega: object
    Omega: object

    def __post_init__(self):
        _odd_chart(_expect(self.omega, "form", 1, "omega"), _expect(self.Omega, "form", 2, "Omega"))

    @property
    def chart(self):
        return _kind(self.omega)[2]

    @property
    def n(self) -> int:
        return (self.chart.dim - 1) // 2

    def jets(self, s: Sampler):
        return P.tabulate(self.omega, s.points), P.tabulate(self.Omega, s.points)

    def rank(self, s: Sampler) -> int:
        """Detected half-rank r of Omega (validates the pair invariants)."""
        return _covariant_rank(*self.jets(s), DEFAULT_TOL)[0]


@dataclass(frozen=True, eq=False)
class ContravariantPair:
    E: object
    Lambda: object

    def __post_init__(self):
        _odd_chart(_expect(self.E, "vector", 1, "E"), _expect(self.Lambda, "vector", 2, "Lambda"))

    @property
    def chart(self):
        return _kind(self.E)[2]

    @property
    def n(self) -> int:
        return (self.chart.dim - 1) // 2

    def jets(self, s: Sampler):
        return P.tabulate(self.E, s.points), P.tabulate(self.Lambda, s.points)

    def rank(self, s: Sampler) -> int:
        return _contravariant_rank(*self.jets(s), DEFAULT_TOL)[0]


@dataclass(frozen=True, eq=False)
class ACPJTriple:
    E: object
    Lambda: object
    omega: object

    def __post_init__(self):
        _odd_chart(_expect(self.E, "vector", 1, "E"), _expect(self.Lambda, "vector", 2, "Lambda"),
                   _expect(self.omega, "form", 1, "omega"))

    @property
    def chart(self):
        return _kind(self.E)[2]

    @property
    def pair(self) -> ContravariantPair:
        return ContravariantPair(self.E, self.Lambda)

    def jets(self, s: Sampler):
        pts = s.points
        return P.tabulate(self.E, pts), P.tabulate(self.Lambda, pts), P.tabulate(self.omega, pts)

    def axiom_residuals(self, s: Sampler) -> dict:
        E, L, w = self.jets(s)
        return {
            "i_E_omega": P.residual(P.pair_values(E, w), 1.0),
            "i_omega_Lambda": P.residual(P.contract(w, L), 0.0),
        }


@dataclass
class ClassificationReport:
    kind: str
    labels: tuple
    residuals: dict
    rank: dict
    nonvanishing: dict
    sampler: dict
    notes: list = field(default_factory=list)

    def has(self, label: str) -> bool:
        return label in self.labels

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "labels": list(self.labels),
            "residuals": dict(sorted(self.residuals.items())),
            "rank": dict(self.rank),
            "nonvanishing_min": dict(sorted(self.nonvanishing.items())),
            "sampler": dict(self.sampler),
            "notes": list(self.notes),
        }


def _echo(s: Sampler, tol: float) -> dict:
    return {"seed": s.seed, "count": s.count, "tol": tol}


def _sample_norms(packed: np.ndarray) -> np.ndarray:
    return np.max(np.abs(packed), axis=1) if packed.shape[1] else np.zeros(packed.shape[0])


def _constant_half_rank(mats: np.ndarray, what: str) -> int:
    ranks = matrix_ranks(mats)
    if not np.all(ranks == ranks[0]):
        vals, counts = np.unique(ranks, return_counts=True)
        seen = ", ".join(f"rank {v} at {c} samples" for v, c in zip(vals, counts))
        raise PairInvariantError(f"{what} does not have constant rank: {seen}")
    return int(ranks[0]) // 2


def _covariant_rank(w: Table, W: Table, tol: float):
    n = w.chart.dim
    r = _constant_half_rank(W.value, "Omega")
    top = P.wedge_packed(w.packed(), 1, P.power_packed(W.packed(), 2, r, n), 2 * r, n)
    norms = _sample_norms(top)
    low = float(np.min(norms))
    if low <= tol:
        i = int(np.argmin(norms))
        raise PairInvariantError(
            f"omega ^ Omega^{r} vanishes at sample {i} (|value| = {low:.3g})")
    return r, low


def _contravariant_rank(E: Table, L: Table, tol: float):
    n = E.chart.dim
    if E.max_abs() == 0.0:
        raise PairInvariantError("E vanishes identically; E ^ Lambda^s must be nonzero")
    if L.max_abs() == 0.0:
        raise PairInvariantError("Lambda vanishes identically; trivial structures are not pairs")
    s_ = _constant_half_rank(L.value, "Lambda")
    top = P.wedge_packed(E.packed(), 1, P.power_packed(L.packed(), 2, s_, n), 2 * s_, n)
    norms = _sample_norms(top)
    low = float(np.min(norms))
    if low <= tol:
        i = int(np.argmin(norms))
        raise PairInvariantError(
            f"E ^ Lambda^{s_} vanishes at sample {i} (|value| = {low:.3g})")
    return s_, low


def classify_covariant(p: CovariantPair, s: Sampler, tol: float = DEFAULT_TOL) -> ClassificationReport:
    w, W = p.jets(s)
    r, low = _covariant_rank(w, W, tol)
    n = p.n
    dw = P.ext_d(w)
    res = {
        "d_omega": P.residual(dw, 0.0),
        "d_Omega": P.residual(P.ext_d(W), 0.0),
        "Omega_minus_d_omega": P.residual(W, dw),
    }
    labels = set()
    notes = []
    if r == n:
        labels.add("pre-cosymplectic")
        if res["d_Omega"] <= tol:
            labels.add("almost-cosymplectic-contact")
        if res["d_omega"] <= tol and res["d_Omega"] <= tol:
            labels.add("cosymplectic")
        if res["Omega_minus_d_omega"] <= tol:
            labels.add("contact")
            if "almost-cosymplectic-contact" not in labels:
                labels.add("almost-cosymplectic-contact")
                notes.append("contact implies almost-cosymplectic-contact; "
                             "d_Omega residual exceeded tol only through rounding")
    else:
        notes.append(f"non-regular pair (r = {r} < n = {n}); structure labels need r = n")
    return ClassificationReport(
        kind="covariant",
        labels=tuple(l for l in COVARIANT_LABELS if l in labels),
        residuals=res,
        rank={"r": r, "n": n, "regular": r == n},
        nonvanishing={f"omega^Omega^{r}": low},
        sampler=_echo(s, tol),
        notes=notes,
    )


def _acpj_residuals(E: Table, L: Table, w: Table, EL: Table, LL: Table) -> dict:
    LEw = P.lie_derivative_1form(E, w)
    rhs1 = -P.wedge(E.drop_grad(), P.sharp(L, LEw))
    rhs2 = P.wedge(E.drop_grad(), P.sharp2(L, P.ext_d(w))).scale(2.0)
    return {
        "acpj_E_Lambda": P.residual(EL, rhs1),
        "acpj_Lambda_Lambda": P.residual(LL, rhs2),
        "i_E_omega": P.residual(P.pair_values(E, w), 1.0),
        "i_omega_Lambda": P.residual(P.contract(w, L), 0.0),
    }


def classify_contravariant(p: ContravariantPair, omega=None, s: Sampler = None,
                           tol: float = DEFAULT_TOL) -> ClassificationReport:
    if s is None:
        raise TypeError("classify_contravariant needs a sampler")
    E, L = p.jets(s)
    s_, low = _contravariant_rank(E, L, tol)
    n = p.n
    EL = P.schouten(E, L)
    LL = P.schouten(L, L)
    EwL = P.wedge(E.drop_grad(), L.drop_grad())
    res = {
        "E_Lambda": P.residual(EL, 0.0),
        "Lambda_Lambda": P.residual(LL, 0.0),
        "Lambda_Lambda_plus_2E_Lambda": P.residual(LL, -EwL.scale(2.0)),
    }
    notes = []
    w = None
    if omega is not None:
        _expect(omega, "form", 1, "omega")
        w = P.tabulate(omega, s.points)
    elif s_ == n:
        w, _, _ = P.dual_jets(L, E)
        notes.append("omega: fundamental 1-form computed pointwise")
    else:
        notes.append(f"non-regular pair (s = {s_} < n = {n}) and no omega given; "
                     "almost-coPoisson-Jacobi not tested")
    if w is not None:
        res.update(_acpj_residuals(E, L, w, EL, LL))
    labels = {"pre-coPoisson"}
    if res["E_Lambda"] <= tol and res["Lambda_Lambda"] <= tol:
        labels.add("coPoisson")
    if res["E_Lambda"] <= tol and res["Lambda_Lambda_plus_2E_Lambda"] <= tol:
        labels.add("Jacobi")
    if w is not None and all(res[k] <= tol for k in
                             ("acpj_E_Lambda", "acpj_Lambda_Lambda", "i_E_omega", "i_omega_Lambda")):
        labels.add("almost-coPoisson-Jacobi")
    return ClassificationReport(
        kind="contravariant",
        labels=tuple(l for l in CONTRAVARIANT_LABELS if l in labels),
        residuals=res,
        rank={"s": s_, "n": n, "regular": s_ == n},
        nonvanishing={f"E^Lambda^{s_}": low},
        sampler=_echo(s, tol),
        notes=notes,
    )


# duality ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Duality:
    """Both halves of a mutually dual pair, tabulated at the sampler's points."""

    omega: Table
    Omega: Table
    E: Table
    Lambda: Table
    residuals: dict

    @property
    def covariant(self) -> CovariantPair:
        return CovariantPair(self.omega, self.Omega)

    @property
    def contravariant(self) -> ContravariantPair:
        return ContravariantPair(self.E, self.Lambda)

    @property
    def triple(self) -> ACPJTriple:
        return ACPJTriple(self.E, self.Lambda, self.omega)


def duality_residuals(w: Table, W: Table, E: Table, L: Table) -> dict:
    n = w.chart.dim
    eye = np.eye(n)[None]
    Wv, Lv, wv, Ev = W.value, L.value, w.value, E.value
    # Omega_flat has matrix W^T, Lambda_sharp has matrix L^T
    sharp_flat = np.einsum("sab,sca->sbc", Lv, Wv)  # L^T W^T
    flat_sharp = np.einsum("sab,sca->sbc", Wv, Lv)  # W^T L^T
    return {
        "i_E_Omega": P.residual(P.flat(W, E), 0.0),
        "i_omega_Lambda": P.residual(P.sharp(L, w), 0.0),
        "i_E_omega": P.residual(np.einsum("sa,sa->s", Ev, wv), 1.0),
        "sharp_flat_projection": P.residual(sharp_flat, eye - np.einsum("sb,sa->sba", Ev, wv)),
        "flat_sharp_projection": P.residual(flat_sharp, eye - np.einsum("sb,sa->sba", wv, Ev)),
    }


def _check_axioms(res: dict, tol: float):
    worst = max(res.values())
    if worst > tol:
        bad = ", ".join(f"{k}={v:.3g}" for k, v in res.items() if v > tol)
        raise ArithmeticError(f"duality axioms not met within {tol}: {bad}")


def dual_of_covariant(p: CovariantPair, s: Sampler, tol: float = DEFAULT_TOL) -> Duality:
    w, W = p.jets(s)
    r, _ = _covariant_rank(w, W, tol)
    if r != p.n:
        raise NonRegularError(f"covariant pair is not regular (r = {r}, n = {p.n})")
    E, L, asym = P.dual_jets(W, w)
    res = duality_residuals(w, W, E, L)
    res["antisymmetry"] = P.residual(asym, 0.0)
    _check_axioms(res, max(tol, 1e-8))
    return Duality(w, W, E, L, res)


def dual_of_contravariant(p: ContravariantPair, s: Sampler, tol: float = DEFAULT_TOL) -> Duality:
    E, L = p.jets(s)
    s_, _ = _contravariant_rank(E, L, tol)
    if s_ != p.n:
        raise NonRegularError(f"contravariant pair is not regular (s = {s_}, n = {p.n})")
    w, W, asym = P.dual_jets(L, E)
    res = duality_residuals(w, W, E, L)
    res["antisymmetry"] = P.residual(asym, 0.0)
    _check_axioms(res, max(tol, 1e-8))
    return Duality(w, W, E, L, res)


def fundamental_one_form(p: ContravariantPair, s: Sampler, tol: float = DEFAULT_TOL) -> Table:
    """The unique omega with i_omega(E ^ Lambda^n) = Lambda^n, pointwise."""
    E, L = p.jets(s)
    s_, _ = _contravariant_rank(E, L, tol)
    n = p.n
    if s_ != n:
        raise NonRegularError(
            f"the fundamental 1-form is unique only for regular pairs (s = {s_}, n = {n})")
    w, _, _ = P.dual_jets(L, E)
    return w


def fundamental_form_residual(p: ContravariantPair, w: Table, s: Sampler) -> float:
    E, L = p.jets(s)
    dim, n = p.chart.dim, p.n
    Ln = P.power_packed(L.packed(), 2, n, dim)
    EL = P.wedge_packed(E.packed(), 1, Ln, 2 * n, dim)
    lhs = P.contract1_packed(P.tabulate(w, s.points).value, EL, 2 * n + 1, dim)
    return P.residual(lhs, Ln)


# identities of dual pairs -------------------------------------------------

def check_musical_identities(d: Duality) -> dict:
    """(L# x L#)(Omega) = -Lambda and (W_flat x W_flat)(Lambda) = -Omega."""
    return {
        "sharp2_Omega_plus_Lambda": P.residual(P.sharp2(d.Lambda, d.Omega), -d.Lambda.value),
        "flat2_Lambda_plus_Omega": P.residual(P.flat2(d.Omega, d.Lambda), -d.Omega.value),
    }


def check_splittings(d: Duality, s: Sampler, rng, trials: int = 3) -> float:
    """X = omega(X) E + L#(W_flat X) and a = a(E) omega + W_flat(L# a) on random fields."""
    ch = d.omega.chart
    worst = 0.0
    for _ in range(trials):
        X = P.tabulate(random_kvector(ch, 1, rng), s.points, grad=False)
        a = P.tabulate(random_kform(ch, 1, rng), s.points, grad=False)
        wX = P.pair_values(X, d.omega)
        rhs = d.E.scale(wX).value + P.sharp(d.Lambda, P.flat(d.Omega, X)).value
        worst = max(worst, P.residual(X.value, rhs))
        aE = P.pair_values(d.E, a)
        rhs = d.omega.scale(aE).value + P.flat(d.Omega, P.sharp(d.Lambda, a)).value
        worst = max(worst, P.residual(a.value, rhs))
    return worst


def _scalar_table(f, s: Sampler) -> Table:
    return P.tabulate(f, s.points)


def check_dOmega_decomposition(p: CovariantPair, dual, s: Sampler, tol: float = DEFAULT_TOL,
                               rng=None, trials: int = 3) -> float:
    """Max residual of the expansion of dOmega(X, Y, Z) for X = a# + fE etc."""
    rng = np.random.default_rng(0) if rng is None else rng
    w, W = p.jets(s)
    if isinstance(dual, Duality):
        dual = dual.triple
    E, L, w2 = dual.jets(s)
    ch = p.chart
    dW = P.ext_d(W)
    EL = P.schouten(E, L)
    LL = P.schouten(L, L)
    Ed = E.drop_grad()
    LEw = P.lie_derivative_1form(E, w)
    top_op = P.wedge(Ed, P.sharp2(L, P.ext_d(w))) - LL.scale(0.5)   # 3-vector
    two_op = EL + P.wedge(Ed, P.sharp(L, LEw))                        # 2-vector
    worst = 0.0
    for _ in range(trials):
        alpha, beta, gamma = (P.tabulate(random_closed_one_form(ch, rng), s.points, grad=False)
                              for _ in range(3))
        f, g, h = (P.tabulate(random_scalar(ch, rng), s.points, grad=False).value for _ in range(3))
        X = P.sharp(L, alpha).value + f[:, None] * E.value
        Y = P.sharp(L, beta).value + g[:, None] * E.value
        Z = P.sharp(L, gamma).value + h[:, None] * E.value
        lhs = np.einsum("sabc,sa,sb,sc->s", dW.value, X, Y, Z)
        abg = P.wedge(alpha, P.wedge(beta, gamma))
        rhs = (P.pair_values(top_op, abg)
               + f * P.pair_values(two_op, P.wedge(beta, gamma))
               + g * P.pair_values(two_op, P.wedge(gamma, alpha))
               + h * P.pair_values(two_op, P.wedge(alpha, beta)))
        worst = max(worst, P.residual(lhs, rhs))
    return worst


def check_involutivity(t: ACPJTriple, s: Sampler, rng=None, trials: int = 3,
                       closed: bool = True) -> dict:
    """Residuals of the commutator formulas for [E, a#] and [a#, b#].

    The gated keys use the exact expansions

        [E, a#]  = (i_E da + d(a(E)) - a(E) L_E w)# + L(L_E w, a) E
        [a#, b#] = (dL(a,b) - i_b# da + i_a# db + a(E) i_b# dw - b(E) i_a# dw)# - dw(a#, b#) E

    Both right-hand sides lie in <E> + im L#, so the distribution is involutive.
    The ``*_printed`` keys evaluate the commonly quoted variant (no d(a(E)) term,
    halved i-terms, +1/2 dw(a#, b#) E) and are informational only.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    E, L, w = t.jets(s)
    ch = t.chart
    dw = P.ext_d(w)
    LEw = P.lie_derivative_1form(E, w)
    worst = dict.fromkeys(("E_alpha_sharp", "alpha_sharp_beta_sharp",
                           "E_alpha_sharp_printed", "alpha_sharp_beta_sharp_printed"), 0.0)

    def bump(key, lhs, rhs):
        worst[key] = max(worst[key], P.residual(lhs, rhs))

    def as_form(v):
        return Table(ch, s.points, "form", 1, v)

    for _ in range(trials):
        if closed:
            a_sym, b_sym = random_closed_one_form(ch, rng), random_closed_one_form(ch, rng)
        else:
            a_sym, b_sym = random_kform(ch, 1, rng), random_kform(ch, 1, rng)
        a, b = P.tabulate(a_sym, s.points), P.tabulate(b_sym, s.points)
        a_sh, b_sh = P.sharp(L, a, jet=True), P.sharp(L, b, jet=True)
        aE, bE = P.pair_values(E, a), P.pair_values(E, b)
        da, db = P.ext_d(a), P.ext_d(b)

        lhs = P.lie_bracket(E, a_sh)
        d_aE = (np.einsum("sal,sa->sl", a.grad, E.value)
                + np.einsum("sa,sal->sl", a.value, E.grad))
        base = P.contract(E, da).value - aE[:, None] * LEw.value
        lam = np.einsum("sa,sab,sb->s", LEw.value, L.value, a.value)[:, None] * E.value
        bump("E_alpha_sharp", lhs, P.sharp(L, as_form(base + d_aE)).value + lam)
        bump("E_alpha_sharp_printed", lhs, P.sharp(L, as_form(base)).value + lam)

        lhs = P.lie_bracket(a_sh, b_sh)
        dLab = (np.einsum("sal,sab,sb->sl", a.grad, L.value, b.value)
                + np.einsum("sa,sabl,sb->sl", a.value, L.grad, b.value)
                + np.einsum("sa,sab,sbl->sl", a.value, L.value, b.grad))
        a_shv, b_shv = a_sh.drop_grad(), b_sh.drop_grad()
        ib_da, ia_db = P.contract(b_shv, da).value, P.contract(a_shv, db).value
        dw_terms = (aE[:, None] * P.contract(b_shv, dw).value
                    - bE[:, None] * P.contract(a_shv, dw).value)
        dwab = np.einsum("sab,sa,sb->s", dw.value, a_shv.value, b_shv.value)[:, None] * E.value
        exact = dLab - ib_da + ia_db + dw_terms
        printed = dLab + 0.5 * (ib_da - ia_db + dw_terms)
        bump("alpha_sharp_beta_sharp", lhs, P.sharp(L, as_form(exact)).value - dwab)
        bump("alpha_sharp_beta_sharp_printed", lhs, P.sharp(L, as_form(printed)).value + 0.5 * dwab)
    return worst
