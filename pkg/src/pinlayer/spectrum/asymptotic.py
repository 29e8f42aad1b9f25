"""Leading-order critical eigenvalue lambda ~ eps * kappa* and its endpoint coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..branch import BranchData
from ..layer import JUMP_UP, FrontProfile, LayerGeometry
from ..model import BistableModel


@dataclass(frozen=True)
class AsymptoticEigen:
    kappa_star: float
    W_energy: float
    fv_integral: float
    slope_integral: float
    jump: float
    W_dot0: float
    D: float

    def eigenvalue(self, epsilon):
        return epsilon * self.kappa_star

    @property
    def verdict(self):
        return "stable" if self.kappa_star < 0 else "unstable"

    def to_dict(self):
        return {"kappa_star": self.kappa_star, "W_energy": self.W_energy,
                "fv_integral": self.fv_integral, "slope_integral": self.slope_integral,
                "jump": self.jump, "W_dot0": self.W_dot0, "verdict": self.verdict}


def plateau_coefficients(model: BistableModel, branch: BranchData, geom: LayerGeometry):
    """(f_u, f_v) at the left and right plateaus and the left plateau length."""
    vs = branch.v_star
    lo = (float(model.f_u(branch.h_minus_star, vs)), float(model.f_v(branch.h_minus_star, vs)))
    hi = (float(model.f_u(branch.h_plus_star, vs)), float(model.f_v(branch.h_plus_star, vs)))
    if geom.orientation == JUMP_UP:
        return lo, hi, geom.x0
    return hi, lo, geom.x0


def kappa_star(model: BistableModel, branch: BranchData, profile: FrontProfile,
               geom: LayerGeometry, D: float = 1.0) -> AsymptoticEigen:
    """kappa* = -jump * int f_v du / (int W'^2 dz * int_0^1 (f_u - f_v) / f_u dx).

    The last integrand is piecewise constant: the plateau values of f_u, f_v on
    either side of the layer.
    """
    vs = branch.v_star
    fv_int, _ = quad(lambda u: float(model.f_v(u, vs)), branch.h_minus_star,
                     branch.h_plus_star, epsabs=1e-14, epsrel=1e-13, limit=200)
    (fu_l, fv_l), (fu_r, fv_r), x0 = plateau_coefficients(model, branch, geom)
    slope = x0 * (fu_l - fv_l) / fu_l + (1.0 - x0) * (fu_r - fv_r) / fu_r
    jump = branch.jump
    kappa = -jump * fv_int / (profile.W_energy * slope)
    return AsymptoticEigen(kappa_star=float(kappa), W_energy=profile.W_energy,
                           fv_integral=float(fv_int), slope_integral=float(slope),
                           jump=float(jump), W_dot0=profile.W_dot0, D=float(D))


@dataclass(frozen=True)
class EndpointCoefficients:
    """Differences of the endpoint coefficients of the left and right shooting solutions."""

    kappa: complex
    a11_minus_c11: complex
    a22_minus_c22: complex
    b10_minus_d10: complex
    b21_minus_d21: complex
    tg: complex
    quadratic: complex
    scale: float

    @property
    def quadratic_residual(self):
        """Mismatch between the assembled determinant and its closed quadratic.

        Measured relative to the size of the terms, |kappa| (|kappa A| + |B|) / (D W'(0)^2),
        which stays meaningful at the root kappa* where the quadratic itself vanishes.
        """
        if self.scale == 0.0:
            return abs(self.tg)
        return abs(self.tg - self.quadratic) / self.scale

    def to_dict(self):
        return {"kappa": self.kappa, "a11_minus_c11": self.a11_minus_c11,
                "a22_minus_c22": self.a22_minus_c22, "b10_minus_d10": self.b10_minus_d10,
                "b21_minus_d21": self.b21_minus_d21, "tg": self.tg,
                "quadratic": self.quadratic, "quadratic_residual": self.quadratic_residual}


def endpoint_coefficients(model: BistableModel, branch: BranchData, profile: FrontProfile,
                          geom: LayerGeometry, kappa, D: float = 1.0,
                          asym: AsymptoticEigen | None = None) -> EndpointCoefficients:
    """Closed forms of the four coefficient differences at lambda = eps * kappa.

    The reduced determinant (a22-c22)(b10-d10) - (a11-c11)(b21-d21) is assembled
    from them and compared against -kappa (kappa A + B) / (D W'(0)^2) with
    A = int W'^2 * slope integral and B = jump * int f_v du.
    """
    asym = asym or kappa_star(model, branch, profile, geom, D)
    kappa = complex(kappa)
    wd0 = profile.W_dot0
    a11 = kappa * asym.W_energy / wd0 ** 2
    a22 = (-a11 + kappa * asym.jump / wd0) / D
    b10 = complex(-asym.fv_integral / wd0)
    b21 = (-b10 + kappa * asym.slope_integral) / D
    tg = a22 * b10 - a11 * b21
    A = asym.W_energy * asym.slope_integral
    B = asym.jump * asym.fv_integral
    quad_form = -kappa * (kappa * A + B) / (D * wd0 ** 2)
    scale = abs(kappa) * (abs(kappa * A) + abs(B)) / (D * wd0 ** 2)
    return EndpointCoefficients(kappa=kappa, a11_minus_c11=a11, a22_minus_c22=a22,
                               b10_minus_d10=b10, b21_minus_d21=b21, tg=tg,
                               quadratic=quad_form, scale=float(scale))


def front_energy_z(profile: FrontProfile) -> float:
    """int W'^2 dz by quadrature in z (independent of the W-quadrature in the profile)."""
    zs = np.concatenate([[-profile.z_max], profile.z_nodes, [profile.z_max]])
    total = 0.0
    for a, b in zip(zs[:-1], zs[1:]):
        val, _ = quad(lambda z: float(profile.derivative(z)) ** 2, a, b, epsabs=1e-15,
                      epsrel=1e-12, limit=50)
        total += val
    return total
