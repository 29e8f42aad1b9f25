"""Equilibrium branches h-(v) < h0(v) < h+(v), the balance J(v) and its zero v*."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import BistabilityLost, DegenerateBalance, NoBalancedState
from .model import BistableModel

SCAN_POINTS = 2048
QUAD_TOL = 1e-12


def _newton_polish(model, v, r, tol=1e-12, max_iter=20):
    for _ in range(max_iter):
        fu = float(model.f_u(r, v))
        if fu == 0.0:
            break
        dr = float(model.f(r, v)) / fu
        r -= dr
        if abs(dr) <= tol * max(1.0, abs(r)):
            break
    return r


def roots_at(model: BistableModel, v: float) -> tuple:
    """Three ordered roots of f(., v), by a grid scan, bracketing and Newton polish."""
    v = float(v)
    lo, hi = model.v_interval
    if not lo < v < hi:
        raise BistabilityLost("v lies outside the bistable interval", v=v,
                              v_interval=list(model.v_interval))
    us = np.linspace(model.u_scan[0], model.u_scan[1], SCAN_POINTS)
    fs = np.asarray(model.f(us, v), dtype=float)
    sg = np.sign(fs)
    roots = []
    i = 0
    while i < len(us) - 1:
        if sg[i] == 0.0:
            roots.append(us[i])
            i += 1
            continue
        if sg[i] * sg[i + 1] < 0:
            roots.append(brentq(lambda u: float(model.f(u, v)), us[i], us[i + 1],
                                xtol=1e-15, rtol=1e-15))
        i += 1
    if sg[-1] == 0.0:
        roots.append(us[-1])
    if len(roots) != 3:
        raise BistabilityLost(f"found {len(roots)} roots of f(., v) instead of 3",
                              v=v, n_roots=len(roots))
    roots = [_newton_polish(model, v, r) for r in roots]
    return tuple(float(r) for r in roots)


def potential(model: BistableModel, v: float, a: float, b: float) -> float:
    """Integral of f(u, v) du from a to b."""
    val, _ = quad(lambda u: float(model.f(u, v)), a, b, epsabs=QUAD_TOL,
                  epsrel=QUAD_TOL, limit=200)
    return val


def J(model: BistableModel, v: float) -> float:
    """Balance function: integral of f(u, v) du over [h-(v), h+(v)]."""
    hm, _, hp = roots_at(model, v)
    return potential(model, v, hm, hp)


def J_prime(model: BistableModel, v: float) -> float:
    """Integral of f_v(u, v) du over [h-(v), h+(v)] (the endpoint terms vanish)."""
    hm, _, hp = roots_at(model, v)
    val, _ = quad(lambda u: float(model.f_v(u, v)), hm, hp, epsabs=QUAD_TOL,
                  epsrel=QUAD_TOL, limit=200)
    return val


@dataclass(frozen=True)
class BranchData:
    v_star: float
    J_prime_star: float
    h_minus_star: float
    h_zero_star: float
    h_plus_star: float
    J_star: float
    branch_sampler: Callable

    @property
    def jump(self):
        return self.h_plus_star - self.h_minus_star

    def to_dict(self):
        return {"v_star": self.v_star, "J_prime_star": self.J_prime_star,
                "J_star": self.J_star, "h_minus_star": self.h_minus_star,
                "h_zero_star": self.h_zero_star, "h_plus_star": self.h_plus_star}


def find_v_star(model: BistableModel, n_scan: int = 65) -> BranchData:
    """Balanced value v* with J(v*) = 0 and the slope J'(v*).

    When J changes sign more than once the zero nearest the centre of the
    interval is taken.
    """
    lo, hi = model.v_interval
    pad = 1e-9 * (hi - lo)
    vs = np.linspace(lo + pad, hi - pad, n_scan)
    js = []
    for v in vs:
        try:
            js.append(J(model, v))
        except BistabilityLost:
            js.append(np.nan)
    js = np.array(js)

    centre = 0.5 * (lo + hi)
    candidates = []
    for i, (v, j) in enumerate(zip(vs, js)):
        if np.isfinite(j) and abs(j) <= QUAD_TOL:
            candidates.append(v)
        elif i + 1 < len(vs) and np.isfinite(j) and np.isfinite(js[i + 1]) \
                and j * js[i + 1] < 0:
            candidates.append(brentq(lambda w: J(model, w), v, vs[i + 1],
                                     xtol=1e-15, rtol=1e-15))
    if not candidates:
        raise NoBalancedState("J(v) does not change sign on the v-interval",
                              v_interval=list(model.v_interval))
    v_star = float(min(candidates, key=lambda w: abs(w - centre)))
    j_star = J(model, v_star)
    jp = J_prime(model, v_star)
    if abs(jp) <= 1e-8:
        raise DegenerateBalance("J'(v*) is numerically zero", v_star=v_star,
                                J_prime_star=jp)
    hm, h0, hp = roots_at(model, v_star)
    return BranchData(v_star=v_star, J_prime_star=float(jp), h_minus_star=hm,
                      h_zero_star=h0, h_plus_star=hp, J_star=float(j_star),
                      branch_sampler=lambda v: roots_at(model, v))


def alpha_bounds(model: BistableModel, v: float) -> tuple:
    """Admissible range for the layer value alpha at level v.

    The upper end solves int_{h-}^{a} f du = 0 on (h0, h+], the lower end
    solves int_{a}^{h+} f du = 0 on [h-, h0).  When no such root exists the
    corresponding outer root is returned.  At a balanced level (|J| within
    quadrature tolerance) both ends coincide with (h-, h+).
    """
    hm, h0, hp = roots_at(model, v)
    jv = potential(model, v, hm, hp)
    if abs(jv) <= QUAD_TOL:
        return hm, hp
    if jv > 0:
        # the potential from h- returns to zero before h+
        a_hi = brentq(lambda a: potential(model, v, hm, a), h0, hp, xtol=1e-14)
        a_lo = hm
    else:
        a_hi = hp
        a_lo = brentq(lambda a: potential(model, v, a, hp), hm, h0, xtol=1e-14)
    return float(a_lo), float(a_hi)


def default_alpha(branch: BranchData) -> float:
    return 0.5 * (branch.h_minus_star + branch.h_plus_star)


def branch_table(model: BistableModel, n: int = 65):
    """Columns v, h_minus, h_zero, h_plus, J sampled across the v-interval."""
    lo, hi = model.v_interval
    pad = 1e-9 * (hi - lo)
    rows = []
    for v in np.linspace(lo + pad, hi - pad, n):
        hm, h0, hp = roots_at(model, v)
        rows.append((v, hm, h0, hp, potential(model, v, hm, hp)))
    return np.array(rows)
