"""Acceptance suite: one PASS/FAIL line per criterion, printed even under capture.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to keep pytest's own output terse).
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from oddgeom import pointwise as P
from oddgeom.algebra import (BracketContext, check_jacobi_jacobiator_identity,
                             check_lift_homomorphism, check_omega_bracket_identity,
                             check_poisson_jacobiator_identity, copoisson_witness_context,
                             jacobiator)
from oddgeom.cli import run
from oddgeom.darboux import (DarbouxSpec, darboux_bracket_oracle, darboux_contravariant,
                             darboux_covariant)
from oddgeom.expr import Chart, Sampler
from oddgeom.exterior import (KForm, ext_d, interior_vk_form, schouten, wedge, wedge_power)
from oddgeom.generators import random_kform, random_kvector
from oddgeom.spacetime import (EinsteinInput, GalileiInput, phase_sampler, phase_structures,
                               verify_theorems)
from oddgeom.structures import (check_dOmega_decomposition, check_involutivity,
                                classify_contravariant, classify_covariant,
                                dual_of_contravariant, dual_of_covariant)

ROOT = Path(__file__).resolve().parent.parent
COUNT = 32
RINDLER = [["-1*(1 + x1)^2", 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]


@pytest.fixture
def verdict(capsys):
    def emit(tag, name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{tag}] {name}: {detail}")
        assert ok, f"[{tag}] {name}: {detail}"
    return emit


def _s(chart, seed=0):
    return Sampler.uniform(chart, seed=seed, count=COUNT)


def test_c01_schouten_calibration(verdict):
    start = time.perf_counter()
    worst, trials = 0.0, 0
    for names in (("t", "x1", "x2"), ("t", "x1", "x2", "x3", "x4")):
        ch = Chart(names)
        s = _s(ch, seed=len(names))
        for k in range(10):
            rng = np.random.default_rng(1000 * len(names) + k)
            E, L = random_kvector(ch, 1, rng), random_kvector(ch, 2, rng)
            b2 = ext_d(random_kform(ch, 1, rng, degree=3))
            lhs = interior_vk_form(schouten(E, L), b2)
            rhs = (interior_vk_form(E, ext_d(interior_vk_form(L, b2)))
                   - interior_vk_form(L, ext_d(interior_vk_form(E, b2))))
            worst = max(worst, lhs.residual(rhs, s))
            b3 = ext_d(random_kform(ch, 2, rng, degree=3))
            lhs = interior_vk_form(schouten(L, L), b3)
            rhs = interior_vk_form(L, ext_d(interior_vk_form(L, b3))).scale(2.0)
            worst = max(worst, lhs.residual(rhs, s))
            trials += 1
    elapsed = time.perf_counter() - start
    verdict("1", "schouten calibration", worst <= 1e-9 and elapsed < 10.0,
            f"trials={trials} worst={worst:.3e} (tol 1e-9) time={elapsed:.2f}s (limit 10s)")


def test_c02_darboux_oracle(verdict):
    worst, cases = 0.0, 0
    for n in (1, 2, 3):
        for s_ in range(1, n + 1):
            rng = np.random.default_rng(10 * n + s_)
            for _ in range(10):
                spec = DarbouxSpec.random(n, s_, rng)
                t = darboux_contravariant(spec)
                s = _s(spec.chart, seed=cases)
                ELam, LamLam = darboux_bracket_oracle(spec)
                worst = max(worst, schouten(t.E, t.Lambda).residual(ELam, s),
                            schouten(t.Lambda, t.Lambda).residual(LamLam, s))
                cases += 1
    verdict("2", "darboux oracle equivalence", worst <= 1e-9,
            f"draws={cases} worst={worst:.3e} (tol 1e-9)")


def test_c03_classification_matrix(verdict):
    rng = np.random.default_rng(3)
    family = {
        "cosymplectic": ({"pre-cosymplectic", "cosymplectic", "almost-cosymplectic-contact"},
                         {"pre-coPoisson", "coPoisson", "almost-coPoisson-Jacobi"}),
        "contact": ({"pre-cosymplectic", "contact", "almost-cosymplectic-contact"},
                    {"pre-coPoisson", "Jacobi", "almost-coPoisson-Jacobi"}),
        "acc": ({"pre-cosymplectic", "almost-cosymplectic-contact"},
                {"pre-coPoisson", "almost-coPoisson-Jacobi"}),
    }
    bad, worst = [], 0.0
    for n in (1, 2):
        specs = {"cosymplectic": DarbouxSpec.cosymplectic(n), "contact": DarbouxSpec.contact(n),
                 "acc": DarbouxSpec.random(n, n, rng)}
        for name, spec in specs.items():
            s = _s(spec.chart, seed=n)
            cov = classify_covariant(darboux_covariant(spec), s, tol=1e-8)
            d = dual_of_covariant(darboux_covariant(spec), s, tol=1e-8)
            con = classify_contravariant(d.contravariant, d.omega, s, tol=1e-8)
            want_cov, want_con = family[name]
            if set(cov.labels) != want_cov or set(con.labels) != want_con:
                bad.append(f"{name}/n={n}: {cov.labels} -> {con.labels}")
            # the residuals behind the positive labels must sit below the tolerance
            gate = {"cosymplectic": ("d_omega", "d_Omega"), "contact": ("Omega_minus_d_omega",),
                    "acc": ("d_Omega",)}[name]
            worst = max([worst] + [cov.residuals[k] for k in gate if k in cov.residuals])
    verdict("3", "classification matrix", not bad and worst <= 1e-8,
            f"instances=6 mismatches={bad or 'none'} worst={worst:.3e} (tol 1e-8)")


def test_c04_duality_round_trip(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for k in range(10):
        n = 1 + k % 3
        spec = DarbouxSpec.random(n, n, rng)
        s = _s(spec.chart, seed=k)
        cov = darboux_covariant(spec)
        d = dual_of_covariant(cov, s)
        back = dual_of_contravariant(d.contravariant, s)
        w, W = cov.jets(s)
        worst = max(worst, P.residual(back.omega, w), P.residual(back.Omega, W))
        con = darboux_contravariant(spec).pair
        d = dual_of_contravariant(con, s)
        back = dual_of_covariant(d.covariant, s)
        E, L = con.jets(s)
        worst = max(worst, P.residual(back.E, E), P.residual(back.Lambda, L))
    verdict("4", "duality round-trip", worst <= 1e-8,
            f"pairs=10 x 2 variances worst={worst:.3e} (tol 1e-8)")


def test_c05_dOmega_decomposition(verdict):
    worst = 0.0
    for n, s_ in ((1, 1), (2, 1), (2, 2), (3, 2), (3, 3)):
        rng = np.random.default_rng(50 + 10 * n + s_)
        spec = DarbouxSpec.random(n, s_, rng)
        s = _s(spec.chart, seed=n)
        worst = max(worst, check_dOmega_decomposition(
            darboux_covariant(spec), darboux_contravariant(spec), s, rng=rng, trials=3))
    verdict("5", "dOmega decomposition", worst <= 1e-8, f"worst={worst:.3e} (tol 1e-8)")


def _ctx(spec):
    t = darboux_contravariant(spec)
    return BracketContext.of(t.E, t.Lambda, t.omega)


def test_c06_function_algebras(verdict):
    rng = np.random.default_rng(6)
    contexts = [_ctx(DarbouxSpec.cosymplectic(1)), _ctx(DarbouxSpec.contact(1)),
                _ctx(DarbouxSpec.contact(2)), _ctx(DarbouxSpec.random(2, 1, rng)),
                _ctx(DarbouxSpec.random(2, 2, rng)), copoisson_witness_context()]
    a = max(check_poisson_jacobiator_identity(c, _s(c.chart), rng=rng) for c in contexts)
    verdict("6a", "poisson jacobiator identity", a <= 1e-9, f"worst={a:.3e} (tol 1e-9)")

    jac = [_ctx(DarbouxSpec.contact(1)), _ctx(DarbouxSpec.contact(2))]
    b = max(check_jacobi_jacobiator_identity(c, _s(c.chart), rng=rng) for c in jac)
    verdict("6b", "jacobi jacobiator on jacobi scenarios", b <= 1e-9, f"worst={b:.3e} (tol 1e-9)")

    cop = copoisson_witness_context()
    ch = cop.chart
    s = _s(ch)
    J = jacobiator(cop, "jacobi", ch.coord("t"), ch.coord("x1"), ch.coord("x2"))
    vals = ch.evaluate([J.expr], s.points)[:, 0]
    dev = float(np.max(np.abs(np.abs(vals) - 1.0)))
    verdict("6c", "copoisson witness jacobiator", dev <= 1e-12,
            f"|J| in [{np.min(np.abs(vals)):.6f}, {np.max(np.abs(vals)):.6f}] value={vals[0]:+.1f}")

    lifts = [check_lift_homomorphism(c, _s(c.chart), rng=rng) for c in jac]
    d_ok = max(l.defect for l in lifts)
    w = check_lift_homomorphism(cop, s, rng=rng)
    witness = abs(w.witness["value"]) if w.witness else 0.0
    verdict("6d", "hamiltonian lift homomorphism",
            d_ok <= 1e-9 and not w.homomorphism and witness >= 0.5,
            f"jacobi defect={d_ok:.3e} (tol 1e-9) copoisson witness={witness:.3f} (need >= 0.5)")

    e = max(check_omega_bracket_identity(c, _s(c.chart), rng=rng) for c in jac)
    verdict("6e", "omega bracket identity on jacobi scenarios", e <= 1e-9,
            f"worst={e:.3e} (tol 1e-9)")


def test_c07_galilei_flat(verdict):
    inp = GalileiInput.flat()
    ps = phase_structures(inp, "galilei")
    s = phase_sampler(inp, "galilei", count=COUNT)
    ch = inp.chart
    dO = max(ext_d(ps.Omega).max_abs(s), ext_d(ps.covariant.Omega).max_abs(s))
    top = wedge(KForm.basis(ch, "x0"), wedge_power(ps.covariant.Omega, 3))
    vol = np.abs(top.values_at(s.points)).max(axis=1)
    gO = interior_vk_form(ps.gamma, ps.Omega).max_abs(s)
    E, L = ps.contravariant.E, ps.contravariant.Lambda
    EL, LL = schouten(E, L).max_abs(s), schouten(L, L).max_abs(s)
    ok = dO <= 1e-12 and vol.min() > 0 and gO <= 1e-10 and max(EL, LL) <= 1e-10
    verdict("7", "galilei flat scaled cosymplectic pair", ok,
            f"dOmega={dO:.1e} min|dt^Omega^3|={vol.min():.3f} gamma.Omega={gO:.1e} "
            f"[E,L]={EL:.1e} [L,L]={LL:.1e}")


@pytest.mark.parametrize("name,inp", [("minkowski", EinsteinInput.minkowski()),
                                      ("rindler", EinsteinInput(RINDLER))])
def test_c08_einstein(verdict, name, inp):
    rep = verify_theorems(inp, "einstein", tol=1e-8)
    r = rep.residuals
    ps = phase_structures(inp, "einstein")
    s = phase_sampler(inp, "einstein", count=COUNT)
    E, L = ps.contravariant.E, ps.contravariant.Lambda
    EL = schouten(E, L).max_abs(s)
    LL = (schouten(L, L) + wedge(E, L).scale(2.0)).max_abs(s)
    vals = {"Omega+c2 dtau": r["Omega_plus_c2_dtau"],
            "two-path": r["Omega_vs_c2_LGamma_tau_minus_dtau"],
            "[E,L]": EL, "[L,L]+2E^L": LL}
    ok = max(vals.values()) <= 1e-8 and rep.statements["contact"] and rep.statements["Jacobi"]
    verdict(f"8/{name}", "einstein scaled contact pair", ok,
            " ".join(f"{k}={v:.1e}" for k, v in vals.items()) + " (tol 1e-8)")


def test_c09_involutivity(verdict):
    worst, printed = 0.0, 0.0
    for n, s_ in ((1, 1), (2, 1), (2, 2), (3, 1), (3, 2)):
        rng = np.random.default_rng(90 + 10 * n + s_)
        t = darboux_contravariant(DarbouxSpec.random(n, s_, rng))
        s = _s(t.chart, seed=n + s_)
        for closed in (True, False):
            res = check_involutivity(t, s, rng, trials=2, closed=closed)
            worst = max(worst, res["E_alpha_sharp"], res["alpha_sharp_beta_sharp"])
            printed = max(printed, res["E_alpha_sharp_printed"],
                          res["alpha_sharp_beta_sharp_printed"])
    verdict("9", "commutator formulas incl. s < n", worst <= 1e-8,
            f"worst={worst:.3e} (tol 1e-8); quoted variant residual={printed:.3e} (informational)")


def test_c10_determinism_and_runtime(verdict):
    runs = [["classify", str(ROOT / "scenarios" / "darboux_acc.yaml")],
            ["dualize", str(ROOT / "scenarios" / "covariant_contact.yaml"), "--roundtrip"],
            ["scenario", "einstein", "--metric", str(ROOT / "scenarios" / "einstein_rindler.yaml")],
            ["scenario", "galilei", "--metric", "flat"]]
    same = all(run(a + ["--format", "structured"]) == run(a + ["--format", "structured"])
               for a in runs)
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-x", "-p", "no:cacheprovider",
                           str(ROOT / "tests"), "--ignore", str(ROOT / "tests" / "test_acceptance.py")],
                          cwd=ROOT, capture_output=True, text=True)
    rest = time.perf_counter() - start
    verdict("10", "determinism and runtime", same and proc.returncode == 0 and rest < 120.0,
            f"byte-identical={same} other tests rc={proc.returncode} in {rest:.1f}s (limit 120s)")
