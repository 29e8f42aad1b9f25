import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinlayer.branch import (J, J_prime, alpha_bounds, branch_table, default_alpha, find_v_star,
                             potential, roots_at)
from pinlayer.errors import BistabilityLost, NoBalancedState
from pinlayer.model import BistableModel, builtin_cubic


def newton(g, dg, x, n=60):
    for _ in range(n):
        x = x - g(x) / dg(x)
    return x


def test_roots_at_zero():
    assert roots_at(builtin_cubic(0.1), 0.0) == pytest.approx((-1.0, 0.0, 1.0), abs=1e-14)


def test_roots_match_newton_on_exact_cubic():
    m = builtin_cubic(0.1)
    v = 0.01
    g = lambda u: u - u ** 3 + 0.1 * v
    dg = lambda u: 1.0 - 3.0 * u ** 2
    ref = [newton(g, dg, x) for x in (-1.0, 0.0, 1.0)]
    got = roots_at(m, v)
    assert got == pytest.approx(ref, abs=1e-13)
    # u - u^3 + s v = 0 puts the middle root near -s v
    assert got[1] == pytest.approx(-0.001, rel=1e-2)
    assert max(abs(m.f(h, v)) for h in got) <= 1e-12


def test_roots_outside_interval():
    m = builtin_cubic(0.1)
    with pytest.raises(BistabilityLost) as exc:
        roots_at(m, 2.0 * m.v_interval[1])
    assert "v" in exc.value.details


def trapezoid_J(s, v, n=200001):
    m = builtin_cubic(s)
    hm, _, hp = (newton(lambda u: u - u ** 3 + s * v, lambda u: 1 - 3 * u ** 2, x)
                 for x in (-1.0, 0.0, 1.0))
    u = np.linspace(hm, hp, n)
    return np.trapezoid(m.f(u, v), u)


def test_J_at_zero():
    assert abs(J(builtin_cubic(0.1), 0.0)) < 1e-14


def test_J_first_order():
    val = J(builtin_cubic(0.1), 0.01)
    assert val == pytest.approx(trapezoid_J(0.1, 0.01), rel=1e-8)
    assert val == pytest.approx(0.002, rel=1e-3)


@pytest.mark.parametrize("s, jp", [(0.1, 0.2), (-0.5, -1.0)])
def test_find_v_star(s, jp):
    br = find_v_star(builtin_cubic(s))
    assert abs(br.v_star) < 1e-12
    assert br.J_prime_star == pytest.approx(jp, rel=1e-10)
    assert abs(br.J_star) < 1e-10
    assert br.h_minus_star < br.h_zero_star < br.h_plus_star
    assert br.jump == pytest.approx(2.0, abs=1e-12)


def test_find_v_star_unbalanced_model():
    # u - u^3 + 0.3 ignores v, so J keeps one sign
    f = lambda u, v: -(u ** 3) + u + 0.3 + 0.0 * v
    m = BistableModel(f=f, f_u=lambda u, v: 1 - 3 * u ** 2 + 0 * v, f_v=lambda u, v: 0 * u,
                      f_uu=lambda u, v: -6 * u + 0 * v, f_uv=lambda u, v: 0 * u,
                      v_interval=(-0.05, 0.05), label="one-signed")
    with pytest.raises(NoBalancedState):
        find_v_star(m)


def test_alpha_bounds_at_balance():
    assert alpha_bounds(builtin_cubic(0.1), 0.0) == pytest.approx((-1.0, 1.0), abs=1e-14)


def test_alpha_bounds_off_balance():
    m = builtin_cubic(0.1)
    v = 0.005
    hm, h0, hp = roots_at(m, v)
    lo, hi = alpha_bounds(m, v)
    assert J(m, v) > 0
    assert lo == pytest.approx(hm) and hi < hp
    # oracle: first sign change of the running potential on a dense scan
    u = np.linspace(h0, hp, 101)
    run = np.array([potential(m, v, hm, a) for a in u])
    k = np.nonzero(run > 0)[0][0]
    assert u[k - 1] <= hi <= u[k]


def test_default_alpha_midpoint():
    assert default_alpha(find_v_star(builtin_cubic(0.1))) == pytest.approx(0.0, abs=1e-14)


def test_branch_table_columns():
    rows = branch_table(builtin_cubic(0.1), n=9)
    assert rows.shape == (9, 5)
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert np.all(rows[:, 1] < rows[:, 2]) and np.all(rows[:, 2] < rows[:, 3])


def test_J_prime_quadrature():
    assert J_prime(builtin_cubic(0.7), 0.0) == pytest.approx(1.4, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(s=st.one_of(st.floats(-1.5, -0.05), st.floats(0.05, 2.0)), delta=st.floats(1e-5, 1e-3),
       sign=st.sampled_from([-1.0, 1.0]))
def test_J_locally_linear(s, delta, sign):
    m = builtin_cubic(s)
    br = find_v_star(m)
    d = sign * min(delta, 0.5 * m.v_interval[1])
    lin = br.J_prime_star * d
    assert J(m, br.v_star + d) == pytest.approx(lin, rel=0.05)


@settings(max_examples=15, deadline=None)
@given(s=st.one_of(st.floats(-1.5, -0.05), st.floats(0.05, 3.0)))
def test_branch_continuity(s):
    rows = branch_table(builtin_cubic(s), n=33)
    dv = np.diff(rows[:, 0])
    for j in (1, 3):
        slopes = np.abs(np.diff(rows[:, j]) / dv)
        secant = abs(rows[-1, j] - rows[0, j]) / (rows[-1, 0] - rows[0, 0])
        assert np.all(slopes <= 10.0 * max(secant, 1e-12) + 1e-9)
