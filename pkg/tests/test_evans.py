import cmath
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import build
from pinlayer.errors import NoZeroFound, StiffnessOverflow
from pinlayer.spectrum import (EvansFunction, case3_nonvanishing, direct_spectrum, evans_value,
                               evans_zero_search, linearize, polish_eigenvalue, richardson)
from pinlayer.spectrum import evans as evans_mod
from pinlayer.steady import nested_fine_size, richardson_state

KAPPA = {0.1: -6 * np.sqrt(2) * 0.1 / 2.1, -0.5: 6 * np.sqrt(2) * 0.5 / 1.5}


def direct_limit(s):
    """Direct leading eigenvalue extrapolated over three nested grids (h, h/2, h/4)."""
    lams = []
    for n in (2048, 4095, 8189):
        p = build(s, n=n)
        lams.append(polish_eigenvalue(linearize(p.model, p.state), 0.02 * KAPPA[s]))
    return richardson(richardson(lams[0], lams[1]), richardson(lams[1], lams[2]), order=4)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.1, -0.5])
def test_g_vanishes_at_direct_eigenvalue(s):
    lam = direct_limit(s)
    coarse = build(s, n=4096)
    fine = build(s, n=nested_fine_size(4096))
    ev = EvansFunction(coarse.model, richardson_state(coarse.state, fine.state))
    centre = ev(lam)
    ref = centre.log_scale
    ring = [ev(lam + 0.5 * abs(lam) * cmath.exp(1j * t)).scaled(ref)
            for t in np.linspace(0.0, 2 * np.pi, 8, endpoint=False)]
    assert abs(centre.scaled(ref)) <= 1e-6 * np.mean(np.abs(ring))


@pytest.mark.parametrize("lam", [0.01 + 0.02j, -0.03 + 0.005j, 0.2 + 0.3j])
def test_conjugate_symmetry(stable, lam):
    ev = EvansFunction(stable.model, stable.state)
    a, b = ev(lam), ev(np.conj(lam))
    ga, gb = a.scaled(0.0), b.scaled(0.0)
    assert abs(gb - np.conj(ga)) <= 1e-8 * abs(ga)


def test_real_lambda_gives_real_g(stable):
    smp = evans_value(stable.model, stable.params, stable.state, 0.05)
    assert abs(smp.scaled().imag) <= 1e-10 * abs(smp.scaled())


def test_order_one_lambda_not_an_eigenvalue(stable):
    smp = evans_value(stable.model, stable.params, stable.state, 0.5)
    assert abs(smp.g_value) >= 1e-4
    c3 = case3_nonvanishing(stable.model, stable.branch, stable.geom, stable.params, 0.5,
                            profile=stable.profile)
    assert c3.H1.real > 0 and c3.H2.real < 0


@pytest.mark.parametrize("s, approx", [(0.1, -8.1e-3), (-0.5, 5.7e-2)])
def test_zero_search_matches_direct(pipeline, s, approx):
    p = pipeline(s)
    lam_d = direct_spectrum(linearize(p.model, p.state)).leading
    lam_e = evans_zero_search(p.model, p.params, p.state, p.params.epsilon * KAPPA[s])
    assert lam_e.imag == 0.0
    assert abs(lam_e - lam_d) <= 0.05 * abs(lam_d)
    assert lam_e.real == pytest.approx(approx, rel=0.05)


def test_zero_search_far_seed(stable):
    with pytest.raises(NoZeroFound):
        evans_zero_search(stable.model, stable.params, stable.state, 0.3)


def test_zero_independent_of_match_point(stable):
    seed = stable.params.epsilon * KAPPA[0.1]
    z0 = evans_zero_search(stable.model, stable.params, stable.state, seed)
    ev = EvansFunction(stable.model, stable.state, match_point=0.4)
    z1 = evans_zero_search(stable.model, stable.params, stable.state, seed, evans=ev)
    assert z1 == pytest.approx(z0, rel=1e-6)


def test_winding_number_counts_one_zero(stable):
    """Argument principle on a circle around the critical eigenvalue, excluding 0."""
    ev = EvansFunction(stable.model, stable.state)
    lam0 = -8.1e-3
    ref = ev(lam0).log_scale
    ts = np.linspace(0.0, 2 * np.pi, 33)
    g = np.array([ev(lam0 + 0.5 * abs(lam0) * cmath.exp(1j * t)).scaled(ref) for t in ts])
    turns = np.sum(np.angle(g[1:] / g[:-1])) / (2 * np.pi)
    assert round(turns) == 1 and abs(turns - 1) < 1e-6


def test_nonfinite_lambda_rejected(stable):
    with pytest.raises(ValueError):
        EvansFunction(stable.model, stable.state)(complex(np.nan, 0.0))


def test_integrator_failure_reported(stable, monkeypatch):
    def failing(*args, **kw):
        return SimpleNamespace(status=-1, message="step size underflow", y=None)

    monkeypatch.setattr(evans_mod, "solve_ivp", failing)
    with pytest.raises(StiffnessOverflow) as exc:
        EvansFunction(stable.model, stable.state)(0.01)
    assert exc.value.details["min_feasible_epsilon"] > 0


def test_sample_dict(stable):
    d = evans_value(stable.model, stable.params, stable.state, 0.01j).to_dict()
    assert set(d) == {"lambda", "g_value", "log_scale", "abs_g"}
