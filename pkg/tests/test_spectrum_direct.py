import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import build
from pinlayer import grid
from pinlayer.errors import FactorizationFailed
from pinlayer.spectrum import direct as direct_mod
from pinlayer.spectrum import (direct_spectrum, linearize, polish_eigenvalue, richardson,
                               symbol_eigenvalues)
from pinlayer.steady import SteadyState, nested_fine_size

KAPPA = {0.1: -6 * np.sqrt(2) * 0.1 / 2.1, -0.5: 6 * np.sqrt(2) * 0.5 / 1.5}


def leading(s, n):
    p = build(s, n=n)
    return direct_spectrum(linearize(p.model, p.state)).leading


@pytest.mark.parametrize("s", [0.1, -0.5])
def test_leading_eigenvalue_near_formula(s):
    eps = 0.02
    lam = leading(s, 2048)
    assert lam.imag == 0.0
    assert np.sign(lam.real) == np.sign(KAPPA[s])
    assert abs(lam.real - eps * KAPPA[s]) <= 0.2 * abs(eps * KAPPA[s])
    # the grid value is already converged far below the 20% band
    lam_r = richardson(leading(s, 1024), leading(s, nested_fine_size(1024)))
    assert abs(lam - lam_r) <= 1e-3 * abs(lam_r)
    assert abs(lam_r.real - eps * KAPPA[s]) <= 0.2 * abs(eps * KAPPA[s])


def flat_state(n, u, v, eps=0.02, D=1.0):
    return SteadyState(x_grid=np.linspace(0, 1, n), u=np.full(n, u), v=np.full(n, v),
                       C=eps ** 2 * u + D * v, residual_inf=0.0, newton_iters=0, epsilon=eps,
                       D=D, xi=u + v, alpha=0.0, layer_position=np.nan, orientation="jump_up")


def test_uniform_state_matches_symbol(stable):
    n = 512
    op = linearize(stable.model, flat_state(n, 1.0, 0.0))
    ds = direct_spectrum(op, k=8, sigma=-2.0)
    sym = symbol_eigenvalues(-2.0, 0.1, 0.02, 1.0, n, n_grid=n)
    for lam in ds.eigenvalues:
        assert np.min(np.abs(sym - lam)) <= 1e-9
    closest = ds.eigenvalues[np.argmin(np.abs(ds.eigenvalues + 2.0))]
    assert closest == pytest.approx(sym[np.argmin(np.abs(sym + 2.0))], abs=1e-9)
    # the mode nearest f_u(h+) sits at the discrete mode spacing, about 1e-2 away
    assert abs(closest + 2.0) < 0.05
    # every constant-coefficient eigenvalue is negative apart from the mass mode at 0
    assert np.all(sym.real[np.abs(sym) > 1e-12] < 0)


def test_symbol_continuum_limit():
    a = symbol_eigenvalues(-2.0, 0.1, 0.02, 1.0, 6)
    b = symbol_eigenvalues(-2.0, 0.1, 0.02, 1.0, 6, n_grid=20001)
    assert np.allclose(np.sort_complex(a), np.sort_complex(b), rtol=1e-6, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(p=arrays(np.float64, 65, elements=st.floats(-1, 1)),
       q=arrays(np.float64, 65, elements=st.floats(-1, 1)))
def test_block_rows_sum_to_laplacian(p, q):
    stable = build(0.1, n=64 * 32 + 1)
    # restrict the layer state to a coarse grid: the identity holds for any coefficients
    sub = SteadyState(x_grid=np.linspace(0, 1, 65), u=stable.state.u[::32],
                      v=stable.state.v[::32], C=stable.state.C, residual_inf=0.0,
                      newton_iters=0, epsilon=0.02, D=1.0, xi=0.0, alpha=0.0,
                      layer_position=0.5, orientation="jump_up")
    op = linearize(stable.model, sub)
    a, b = op.apply(p, q)
    lap = grid.apply_laplacian(0.02 ** 2 * p + 1.0 * q)
    assert np.max(np.abs(a + b - lap)) <= 1e-12 * max(1.0, np.max(np.abs(lap)))


def test_nonzero_eigenvalues_carry_no_mass(stable):
    ds = direct_spectrum(linearize(stable.model, stable.state), k=8)
    for lam, r in zip(ds.eigenvalues, ds.mass_ratio):
        if abs(lam) > 1e-6:
            assert r < direct_mod.MASS_FLAG
    assert len(ds.flagged) == 1 and abs(ds.flagged[0]) < 1e-9
    d = ds.to_dict()
    assert d["leading"] == ds.leading


def test_polish_improves_on_origin_shift(stable):
    op = linearize(stable.model, stable.state)
    lam0 = direct_spectrum(op).leading
    lam1 = polish_eigenvalue(op, lam0)
    assert abs(lam1 - lam0) < 1e-5 * abs(lam0)
    # residual of the polished value: A - lam I is numerically singular
    from scipy.sparse import identity
    from scipy.sparse.linalg import splu
    lu = splu((op.matrix - lam1.real * identity(2 * op.n, format="csc")).tocsc())
    piv = np.min(np.abs(lu.U.diagonal()))
    assert piv < 1e-8 * np.max(np.abs(lu.U.diagonal()))


def test_factorization_failure(stable, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("singular factor")

    monkeypatch.setattr(direct_mod.spla, "eigs", boom)
    with pytest.raises(FactorizationFailed):
        direct_spectrum(linearize(stable.model, stable.state), retries=1)


def test_richardson_exact_for_quadratic():
    f = lambda h: 3.0 + 2.0 * h ** 2
    assert richardson(f(0.1), f(0.05)) == pytest.approx(3.0, abs=1e-14)
