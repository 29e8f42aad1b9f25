"""Checks that no eigenvalue lies outside the O(eps) regime, and that lambda = 0 is excluded.

Regime boundaries used here are implementation choices: |lambda| <= 5 eps is the
O(eps) regime, eps*omega in (5 eps, 0.5) the intermediate one, and O(1) values of
lambda the third.  omega0 defaults to 1.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .. import grid
from ..branch import BranchData
from ..errors import ResonantDenominator
from ..layer import FrontProfile, LayerGeometry, front_profile
from ..model import BistableModel, ProblemParams
from .asymptotic import plateau_coefficients
from .direct import MASS_FLAG, direct_spectrum, linearize
from .evans import EvansFunction


@dataclass
class Case3Report:
    lambda_hat: complex
    omega0: float
    g_minus: complex
    g_plus: complex
    H1: complex
    H2: complex
    dH2_dmu: complex
    tol: float = 1e-10

    @property
    def nonvanishing(self):
        return abs(self.H1) > self.tol and abs(self.H2) > self.tol

    def to_dict(self):
        return {"lambda_hat": self.lambda_hat, "omega0": self.omega0, "g_minus": self.g_minus,
                "g_plus": self.g_plus, "H1": self.H1, "H2": self.H2,
                "dH2_dmu": self.dH2_dmu, "nonvanishing": self.nonvanishing}


def _outer_rate(fu, fv, mu):
    den = fu - mu
    if abs(den) < 1e-10:
        raise ResonantDenominator("f_u - omega0*lambda vanishes at a plateau", f_u=fu, mu=mu)
    return mu * (fu - fv - mu) / den


def H1_value(g_left, g_right, x0, D):
    """k_l tanh(x0 k_l) + k_r tanh((1 - x0) k_r) with k = sqrt(g / D) (even in k)."""
    kl = cmath.sqrt(g_left / D)
    kr = cmath.sqrt(g_right / D)
    return kl * cmath.tanh(x0 * kl) + kr * cmath.tanh((1.0 - x0) * kr)


def _riccati_side(model, profile: FrontProfile, mu, side, Z):
    """sigma = R'/R at 0 and int R^2 over the half line, for the decaying R with R(0) = 1.

    R solves R'' + (f_u(W(z), v*) - mu) R = 0.  The Riccati form integrates
    towards z = 0 from the plateau, which is the stable direction for both sides.
    """
    vs = profile.v_star
    h = profile.h_minus if side < 0 else profile.h_plus
    k = cmath.sqrt(mu - float(model.f_u(h, vs)))
    if k.real < 0:
        k = -k
    z_start = -Z if side < 0 else Z

    def rhs(z, y):
        sig = y[0] + 1j * y[1]
        w = float(profile.value(z))
        ds = (mu - float(model.f_u(w, vs))) - sig * sig
        # y[2] = log|R| relative to z_start (real part of int sigma), y[3] its phase
        r2 = cmath.exp(2.0 * (y[2] + 1j * y[3]))
        return [ds.real, ds.imag, sig.real, sig.imag, r2.real, r2.imag]

    s0 = k if side < 0 else -k
    sol = solve_ivp(rhs, (z_start, 0.0), [s0.real, s0.imag, 0.0, 0.0, 0.0, 0.0],
                    method="DOP853", rtol=1e-11, atol=1e-13)
    y = sol.y[:, -1]
    sigma0 = complex(y[0], y[1])
    logR0 = complex(y[2], y[3])
    # the right side is integrated backwards, so its accumulated integral has the wrong sign;
    # beyond the start R = R(z_start) exp(-k |z - z_start|)
    mass = (side * -1.0) * complex(y[4], y[5]) + 1.0 / (2.0 * k)
    mass = mass * cmath.exp(-2.0 * logR0)
    return sigma0, mass


def H2_value(model: BistableModel, profile: FrontProfile, mu, omega0=1.0):
    """H2 = R+'(0) - R-'(0) for the front eigenproblem at omega0*mu, and dH2/dmu.

    The derivative uses d R-'(0)/dmu = omega0 int R-^2 and d R+'(0)/dmu = -omega0 int R+^2.
    """
    m = omega0 * complex(mu)
    Z = min(profile.z_max, 30.0 / min(profile.k_minus, profile.k_plus))
    sm, mass_m = _riccati_side(model, profile, m, -1, Z)
    sp_, mass_p = _riccati_side(model, profile, m, 1, Z)
    return sp_ - sm, -omega0 * (mass_p + mass_m)


def case3_nonvanishing(model: BistableModel, branch: BranchData, geom: LayerGeometry,
                       params: ProblemParams, lambda_hat, omega0: float = 1.0,
                       profile: FrontProfile | None = None) -> Case3Report:
    """Leading-order factors H1 (outer) and H2 (inner) of g for O(1) lambda = omega0*lambda_hat."""
    lam = complex(lambda_hat)
    if lam.real < 0 or lam == 0:
        raise ValueError("lambda_hat must satisfy Re >= 0 and be nonzero")
    profile = profile or front_profile(model, branch, geom.alpha)
    (fu_l, fv_l), (fu_r, fv_r), x0 = plateau_coefficients(model, branch, geom)
    mu = omega0 * lam
    gl = _outer_rate(fu_l, fv_l, mu)
    gr = _outer_rate(fu_r, fv_r, mu)
    H1 = H1_value(gl, gr, x0, params.D)
    H2, dH2 = H2_value(model, profile, lam, omega0)
    # report g^- / g^+ by plateau value, not by side
    g_minus, g_plus = (gl, gr) if geom.orientation == "jump_up" else (gr, gl)
    return Case3Report(lambda_hat=lam, omega0=omega0, g_minus=g_minus, g_plus=g_plus,
                       H1=H1, H2=H2, dH2_dmu=dH2)


@dataclass
class Case2Report:
    samples: list
    min_abs_g: float
    threshold: float = 1e-6
    angles: list = field(default_factory=list)

    @property
    def ok(self):
        return self.min_abs_g >= self.threshold

    def to_dict(self):
        return {"min_abs_g": self.min_abs_g, "threshold": self.threshold, "pass": self.ok,
                "samples": [{"lambda": s.lam, "abs_g": abs(s.g_value)} for s in self.samples]}


def case2_angles(n=8):
    """n directions on the closed right half of the unit circle, including +-i."""
    return list(np.linspace(-0.5 * np.pi, 0.5 * np.pi, n))


def case2_sampling(model: BistableModel, params: ProblemParams, state, omega_grid,
                   n_angles: int = 8, evans: EvansFunction | None = None) -> Case2Report:
    """Renormalized |g| at lambda = eps*omega*e^{i theta} over the intermediate regime."""
    eps = state.epsilon
    ev = evans or EvansFunction(model, state)
    angles = case2_angles(n_angles)
    samples = []
    for om in omega_grid:
        r = eps * om
        if not 5.0 * eps < r < 0.5:
            raise ValueError(f"eps*omega = {r:g} is outside the intermediate regime (5 eps, 0.5)")
        for th in angles:
            samples.append(ev(r * cmath.exp(1j * th)))
    m = min(abs(s.g_value) for s in samples)
    return Case2Report(samples=samples, min_abs_g=float(m), angles=angles)


def case2_leading(asym, lam_hat, D=1.0):
    """Leading behaviour of the reduced determinant for |kappa| large: kappa^2 A / (D W'(0)^2)."""
    return complex(lam_hat) ** 2 * asym.W_energy * asym.slope_integral / (D * asym.W_dot0 ** 2)


@dataclass
class ZeroModeReport:
    xi: float
    delta: float
    scheme: str
    constraint_integral: float
    operator_residual: float
    flagged_eigenvalue: complex | None
    flagged_mass_ratio: float | None

    @property
    def ok(self):
        return abs(self.constraint_integral - 1.0) <= 1e-6

    def to_dict(self):
        return {"xi": self.xi, "delta": self.delta, "scheme": self.scheme,
                "constraint_integral": self.constraint_integral,
                "operator_residual": self.operator_residual,
                "flagged_eigenvalue": self.flagged_eigenvalue,
                "flagged_mass_ratio": self.flagged_mass_ratio, "pass": self.ok}


def zero_mode_exclusion(model: BistableModel, params: ProblemParams, xi: float, delta: float,
                        scheme: str = "central", n: int = 2048,
                        orientation: str = "jump_up") -> ZeroModeReport:
    """Mass derivative of the steady state: it spans the kernel but carries unit mass.

    (du/dxi, dv/dxi) is formed from steady states at neighbouring masses.  It is
    annihilated by the linearization up to O(delta^2) (central) or O(delta)
    (forward), while int (du/dxi + dv/dxi) dx = 1, so the kernel direction is not
    an admissible perturbation and lambda = 0 is not a constrained eigenvalue.
    Across the layer d^k u / dxi^k grows like eps^-k, so the second-order
    quotient leaves a residual of order delta^2 / eps^3; ``central4`` (fourth
    order, four extra solves) brings it down to order delta^4 / eps^5.
    """
    from ..steady import solve_steady

    def at(m):
        p = ProblemParams(params.epsilon, params.D, m)
        return solve_steady(model, p, orientation=orientation, n=n)[0]

    base = at(xi)
    if scheme == "central":
        lo, hi = at(xi - delta), at(xi + delta)
        du = (hi.u - lo.u) / (2.0 * delta)
        dv = (hi.v - lo.v) / (2.0 * delta)
    elif scheme == "forward":
        hi = at(xi + delta)
        du = (hi.u - base.u) / delta
        dv = (hi.v - base.v) / delta
    elif scheme == "central4":
        s1, s2 = at(xi - delta), at(xi + delta)
        t1, t2 = at(xi - 2.0 * delta), at(xi + 2.0 * delta)
        du = (8.0 * (s2.u - s1.u) - (t2.u - t1.u)) / (12.0 * delta)
        dv = (8.0 * (s2.v - s1.v) - (t2.v - t1.v)) / (12.0 * delta)
    else:
        raise ValueError("scheme must be 'central', 'central4' or 'forward'")
    op = linearize(model, base)
    ru, rv = op.apply(du, dv)
    resid = float(max(np.max(np.abs(ru)), np.max(np.abs(rv))))
    integral = float(grid.integrate(du + dv))

    ds = direct_spectrum(op)
    flagged = [(lam, r) for lam, r in zip(ds.eigenvalues, ds.mass_ratio)
               if r >= MASS_FLAG and abs(lam) < 1e-6]
    f_lam, f_ratio = (complex(flagged[0][0]), float(flagged[0][1])) if flagged else (None, None)
    return ZeroModeReport(xi=xi, delta=delta, scheme=scheme, constraint_integral=integral,
                          operator_residual=resid, flagged_eigenvalue=f_lam,
                          flagged_mass_ratio=f_ratio)
