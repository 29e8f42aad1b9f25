"""Acceptance criteria on the cubic family f(u, v) = u - u^3 + s v.

Each test records one PASS/FAIL line (printed in the terminal summary) and then
asserts the criterion at its stated tolerance.
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE, build, cubic
from pinlayer.layer import front_profile, geometry, matching_identities
from pinlayer.model import ProblemParams
from pinlayer.simulate import (SimConfig, SimState, Stepper, mass, perturbation,
                               run_stability_experiment)
from pinlayer.spectrum import (case2_sampling, case3_nonvanishing, direct_spectrum,
                               endpoint_coefficients, evans_zero_search, kappa_star, linearize,
                               zero_mode_exclusion)
from pinlayer.spectrum.cases import H2_value
from pinlayer.steady import full_residual

STABLE_S = (0.1, 0.5, 1.0)
UNSTABLE_S = (-0.2, -0.5, -1.0)
SQ2 = np.sqrt(2.0)


def record(key, ok, detail):
    prev = ACCEPTANCE.get(key)
    if prev is not None:
        ok, detail = prev[0] and ok, prev[1] + "; " + detail
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


def verdict(x):
    return "stable" if x < 0 else "unstable"


@lru_cache(maxsize=None)
def indicators(s):
    """The four stability indicators at eps = 0.02, D = 1, xi = 0, n = 2048, with wall time."""
    t0 = time.perf_counter()
    p = build(s)
    asym = kappa_star(p.model, p.branch, p.profile, p.geom, p.params.D)
    lam_d = direct_spectrum(linearize(p.model, p.state)).leading
    lam_e = evans_zero_search(p.model, p.params, p.state, asym.eigenvalue(p.params.epsilon))
    sim = run_stability_experiment(p.model, p.params, p.state, SimConfig(), jump=p.branch.jump)
    return {"kappa": asym.kappa_star, "direct": lam_d, "evans": lam_e,
            "sim": sim.growth_rate_fit, "seconds": time.perf_counter() - t0}


@pytest.mark.slow
def test_criterion_1_sign_law():
    bad, slowest = [], 0.0
    for s in STABLE_S + UNSTABLE_S:
        r = indicators(s)
        want = "stable" if s > 0 else "unstable"
        got = [verdict(r["kappa"]), verdict(r["evans"].real), verdict(r["direct"].real),
               None if r["sim"] is None else verdict(r["sim"])]
        if any(g != want for g in got):
            bad.append((s, got))
        slowest = max(slowest, r["seconds"])
    ok = not bad and slowest < 60.0
    record("1", ok, f"6 configurations unanimous={not bad}, slowest {slowest:.1f} s")
    assert not bad
    assert slowest < 60.0


@pytest.mark.slow
def test_criterion_2_eigenvalue_formula():
    s = 0.1
    exact = -6.0 * SQ2 * s / (2.0 + s)
    k = indicators(s)["kappa"]
    rel_k = abs(k - exact) / abs(exact)
    errs = {}
    for eps in (0.04, 0.03, 0.02, 0.01):
        p = build(s, eps=eps)
        lam = direct_spectrum(linearize(p.model, p.state)).leading
        errs[eps] = abs(lam.real / eps - k) / abs(k)
    e = [errs[eps] for eps in (0.04, 0.03, 0.02, 0.01)]
    monotone = all(a > b for a, b in zip(e[:-1], e[1:]))
    ok = rel_k <= 1e-4 and errs[0.02] <= 0.2 and errs[0.01] <= 0.1 and monotone
    record("2", ok, f"kappa*={k:.6f} (rel {rel_k:.1e}); direct/eps rel err "
                    f"{errs[0.02]:.2%} at 0.02, {errs[0.01]:.2%} at 0.01, monotone={monotone}")
    assert rel_k <= 1e-4
    assert errs[0.02] <= 0.2 and errs[0.01] <= 0.1
    assert monotone


@pytest.mark.slow
def test_criterion_3_evans_direct_agreement():
    worst = 0.0
    for s in STABLE_S + UNSTABLE_S:
        r = indicators(s)
        worst = max(worst, abs(r["evans"] - r["direct"]) / abs(r["direct"]))
    record("3", worst <= 0.05, f"max relative Evans/direct gap {worst:.2e}")
    assert worst <= 0.05


def test_criterion_4_case_one_quadratic():
    model, br, prof = cubic(0.1)
    geom = geometry(model, br, ProblemParams(0.02, 1.0, 0.0), profile=prof)
    asym = kappa_star(model, br, prof, geom)
    k = asym.kappa_star
    worst = max(endpoint_coefficients(model, br, prof, geom, kappa, asym=asym).quadratic_residual
                for kappa in (k, k / 2, 2 * k, 1j * abs(k), -1j * abs(k)))
    record("4", worst <= 1e-8, f"max quadratic residual {worst:.1e} over 5 kappa values")
    assert worst <= 1e-8


def test_criterion_5_matching_identities():
    model, br, prof = cubic(0.1)
    rows, ok = [], True
    for xi, x0 in ((0.4, 0.3), (0.0, 0.5), (-0.4, 0.7)):
        geom = geometry(model, br, ProblemParams(0.02, 1.0, xi), profile=prof)
        assert geom.x0 == pytest.approx(x0, abs=1e-12)
        rep = matching_identities(model, prof, geom)
        good = (abs(rep.Phi0) <= 1e-10 and abs(rep.K) <= 1e-8 and abs(rep.R) <= 1e-8
                and rep.M != 0 and np.sign(rep.M) == -np.sign(br.J_prime_star))
        ok &= bool(good)
        rows.append(max(abs(rep.Phi0), abs(rep.K), abs(rep.R)))
    record("5", ok, f"max |Phi0|,|K|,|R| = {max(rows):.1e}; sign(M) = -sign(J')")
    assert ok


def test_criterion_6_geometry_x0():
    model, br, prof = cubic(0.1)
    worst = 0.0
    for xi, x0 in ((-0.4, 0.7), (0.0, 0.5), (0.4, 0.3)):
        geom = geometry(model, br, ProblemParams(0.02, 1.0, xi), profile=prof)
        worst = max(worst, abs(geom.x0 - x0))
    record("6", worst <= 1e-12, f"x0 error {worst:.1e}")
    assert worst <= 1e-12


def test_criterion_6_x1_alpha_invariance():
    model, br, _ = cubic(0.1)
    p = ProblemParams(0.02, 1.0, 0.4)
    mid = 0.5 * (br.h_minus_star + br.h_plus_star)
    x1 = []
    for alpha in (mid - 0.3 * br.jump, mid, mid + 0.3 * br.jump):
        prof = front_profile(model, br, alpha)
        x1.append(geometry(model, br, p, profile=prof).x1)
    spread = max(x1) - min(x1)
    record("6", spread <= 1e-8, f"x1 spread over three alpha {spread:.3e}")
    assert spread <= 1e-8


def test_criterion_7_steady_quality():
    st_ = build(0.1).state
    res = max(full_residual(build(0.1).model, build(0.1).params, st_))
    fi = st_.first_integral_deviation()
    ratios = []
    # xi = 0 is the symmetric layer; xi = 0.4 moves it off centre
    for xi in (0.0, 0.4):
        pairs = [build(0.1, eps=eps, xi=xi) for eps in (0.04, 0.02)]
        errs = [np.max(np.abs(p.state.u - p.comp.u)) for p in pairs]
        ratios.append(errs[1] / errs[0])
    ratio = max(ratios)
    ok = st_.residual_inf <= 1e-10 and res <= 1e-10 and fi <= 1e-10 and ratio <= 0.6
    record("7", ok, f"residual {st_.residual_inf:.1e}, first integral {fi:.1e}, "
                    f"composite error ratio {ratios[0]:.3f} (xi=0), {ratios[1]:.3f} (xi=0.4)")
    assert st_.residual_inf <= 1e-10 and res <= 1e-10
    assert fi <= 1e-10
    assert ratio <= 0.6


@pytest.mark.slow
def test_criterion_8_conservation_and_rate():
    p = build(0.1)
    cfg = SimConfig(dt=0.02)
    stepper = Stepper(p.model, p.params, cfg)
    state = SimState(0.0, p.state.u + perturbation(p.state.n, 1e-2, seed=1), p.state.v.copy())
    m0 = mass(state.u, state.v)
    drift = 0.0
    for k in range(1, 100001):
        state = stepper(state)
        if k % 1000 == 0:
            drift = max(drift, abs(mass(state.u, state.v) - m0))
    gaps = {}
    for s in (0.1, -0.5):
        r = indicators(s)
        gaps[s] = abs(r["sim"] - r["direct"].real) / abs(r["direct"].real)
    ok = drift <= 1e-12 and all(g <= 0.3 for g in gaps.values())
    record("8", ok, f"mass drift {drift:.1e} over 1e5 steps; rate gap {gaps[0.1]:.1e} (s=0.1), "
                    f"{gaps[-0.5]:.1e} (s=-0.5)")
    assert drift <= 1e-12
    assert all(g <= 0.3 for g in gaps.values())


@pytest.mark.slow
def test_criterion_9_case_two_three_exclusion():
    p = build(0.1)
    c2 = case2_sampling(p.model, p.params, p.state, [6.0, 12.0, 20.0])
    H1, H2 = [], []
    for mu in (0.1, 0.5, 1.0):
        rep = case3_nonvanishing(p.model, p.branch, p.geom, p.params, mu, profile=p.profile)
        H1.append(rep.H1.real)
        H2.append(rep.H2.real)
    h2_small = [abs(H2_value(p.model, p.profile, mu)[0]) for mu in (1e-2, 1e-4, 1e-6)]
    to_zero = h2_small[0] > h2_small[1] > h2_small[2] and h2_small[2] < 1e-5
    ok = (c2.min_abs_g >= 1e-6 and min(H1) > 0 and H2[0] > H2[1] > H2[2] and to_zero)
    record("9", ok, f"min |g| {c2.min_abs_g:.2e}; min H1 {min(H1):.3f}; H2 {H2[0]:.3f} > "
                    f"{H2[1]:.3f} > {H2[2]:.3f}; |H2(1e-6)| {h2_small[2]:.1e}")
    assert c2.min_abs_g >= 1e-6
    assert min(H1) > 0
    assert H2[0] > H2[1] > H2[2]
    assert to_zero


def test_criterion_10_zero_mode_exclusion():
    p = build(0.1)
    rep = zero_mode_exclusion(p.model, p.params, 0.0, 1e-3, scheme="forward")
    gap = abs(rep.constraint_integral - 1.0)
    record("10", gap <= 1e-6, f"constraint integral 1 {rep.constraint_integral - 1.0:+.1e}")
    assert gap <= 1e-6
