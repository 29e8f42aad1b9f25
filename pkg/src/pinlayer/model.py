"""Problem data for u_t = eps^2 u_xx + f(u, v), v_t = D v_xx - f(u, v).

The nonlinearity is supplied as plain callables together with its partial
derivatives.  Derivatives are never differentiated automatically; a finite
difference self-check guards against inconsistent supplies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BistabilityLost, ModelError, PinlayerError

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BistableModel:
    """Reaction term f(u, v) bistable in u for every v in ``v_interval``.

    ``u_scan`` is the u-range searched for the three equilibria; it must
    contain all of them for every admissible v.
    """

    f: ScalarField
    f_u: ScalarField
    f_v: ScalarField
    f_uu: ScalarField
    f_uv: ScalarField
    v_interval: tuple
    label: str
    u_scan: tuple = (-3.0, 3.0)
    params: dict = field(default_factory=dict)

    def derivative_check(self, u, v, step=1e-5):
        """Max relative mismatch between supplied and central-difference f_u, f_v."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        fd_u = (self.f(u + step, v) - self.f(u - step, v)) / (2 * step)
        fd_v = (self.f(u, v + step) - self.f(u, v - step)) / (2 * step)
        fd_uu = (self.f_u(u + step, v) - self.f_u(u - step, v)) / (2 * step)
        fd_uv = (self.f_u(u, v + step) - self.f_u(u, v - step)) / (2 * step)
        errs = []
        for fd, exact in ((fd_u, self.f_u(u, v)), (fd_v, self.f_v(u, v)),
                          (fd_uu, self.f_uu(u, v)), (fd_uv, self.f_uv(u, v))):
            exact = np.broadcast_to(exact, np.shape(fd))
            scale = np.maximum(np.abs(exact), 1.0)
            errs.append(np.max(np.abs(fd - exact) / scale))
        return float(max(errs))


@dataclass(frozen=True)
class ProblemParams:
    epsilon: float
    D: float
    xi: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ModelError("epsilon must be positive", epsilon=self.epsilon)
        if not self.D > 0:
            raise ModelError("D must be positive", D=self.D)
        if self.epsilon >= self.D / 10:
            warnings.warn(f"epsilon={self.epsilon} is not small against D={self.D}",
                          stacklevel=2)


def _cubic_three_roots(s, v):
    # u - u^3 + s v has three real roots iff |s v| < 2 / (3 sqrt 3)
    return abs(s * v) < 2.0 / (3.0 * np.sqrt(3.0))


def _cubic_outer_roots(s, v):
    r = np.sort(np.roots([-1.0, 0.0, 1.0, s * v]).real)
    return r[0], r[2]


def builtin_cubic(s: float) -> BistableModel:
    """The family f(u, v) = u - u^3 + s v.

    Roots at v = 0 are -1, 0, 1 with f_u = -2 at the outer ones, J'(0) = 2s.
    The v-interval starts at +-0.2 / max(|s|, 1) and is halved until every v
    in it keeps three real roots and f_u(h+-) < s at the outer roots.
    """
    s = float(s)
    if s == 0.0:
        raise ModelError("s = 0 makes J'(v*) vanish (nondegeneracy fails)", s=s)
    if s <= -2.0:
        raise ModelError("s <= -2 violates f_u(h+-) < f_v at the outer roots", s=s)

    half = 0.2 / max(abs(s), 1.0)
    for _ in range(60):
        ok = True
        for v in (-half, half):
            if not _cubic_three_roots(s, v):
                ok = False
                break
            for h in _cubic_outer_roots(s, v):
                if not 1.0 - 3.0 * h * h < s:
                    ok = False
        if ok:
            break
        half *= 0.5

    def f(u, v):
        return u - u ** 3 + s * v

    def f_u(u, v):
        return 1.0 - 3.0 * u ** 2 + 0.0 * v

    def f_v(u, v):
        return s + 0.0 * (u + v)

    def f_uu(u, v):
        return -6.0 * u + 0.0 * v

    def f_uv(u, v):
        return 0.0 * (u + v)

    return BistableModel(f=f, f_u=f_u, f_v=f_v, f_uu=f_uu, f_uv=f_uv,
                         v_interval=(-half, half), label=f"cubic(s={s:g})",
                         u_scan=(-2.0, 2.0), params={"family": "cubic", "s": s})


@dataclass
class ValidationReport:
    a1_bistable: bool
    a2_nondegenerate: bool
    a3_slope: bool
    a4_mass: bool
    details: dict

    @property
    def ok(self):
        return self.a1_bistable and self.a2_nondegenerate and self.a3_slope and self.a4_mass

    def to_dict(self):
        return {"A1": self.a1_bistable, "A2": self.a2_nondegenerate,
                "A3": self.a3_slope, "A4": self.a4_mass, "all": self.ok,
                "details": self.details}


def validate_assumptions(model: BistableModel, params: ProblemParams,
                         n_samples: int = 16) -> ValidationReport:
    """Numerically check bistability, nondegeneracy, slope ordering and mass range."""
    from .branch import find_v_star, roots_at

    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    lo, hi = model.v_interval
    # the interval is open; stay a hair inside it
    pad = 1e-9 * (hi - lo)
    vs = np.linspace(lo + pad, hi - pad, n_samples)
    a1 = True
    a3 = True
    details = {"a1_failures": [], "a3_failures": []}
    for v in vs:
        try:
            hm, h0, hp = roots_at(model, v)
        except BistabilityLost:
            a1 = False
            details["a1_failures"].append(float(v))
            continue
        slopes = [float(model.f_u(h, v)) for h in (hm, h0, hp)]
        if not (slopes[0] < -1e-10 and slopes[1] > 1e-10 and slopes[2] < -1e-10):
            a1 = False
            details["a1_failures"].append(float(v))
        for h in (hm, hp):
            if not float(model.f_u(h, v)) < float(model.f_v(h, v)):
                a3 = False
                details["a3_failures"].append(float(v))

    a2 = False
    a4 = False
    try:
        br = find_v_star(model)
        a2 = True
        lo_m = br.h_minus_star + br.v_star
        hi_m = br.h_plus_star + br.v_star
        a4 = lo_m < params.xi < hi_m
        details.update(v_star=br.v_star, J_prime_star=br.J_prime_star,
                       mass_range=[lo_m, hi_m])
    except PinlayerError as exc:
        details["a2_error"] = exc.to_dict()
    return ValidationReport(a1, a2, a3, a4, details)
