"""Finite-eps stationary layer by Newton's method on the reduced scalar problem.

Stationary solutions satisfy eps^2 u + D v = C.  Eliminating v leaves

    eps^2 u_xx + f(u, (C - eps^2 u) / D) = 0,   u_x(0) = u_x(1) = 0,
    int (u + (C - eps^2 u) / D) dx = xi,

with unknowns (u, C).  The Jacobian is tridiagonal with one bordering row and
column, so each Newton step costs two banded solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from . import grid
from .errors import JacobianSingular, NoConvergence
from .model import BistableModel, ProblemParams


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 50
    tol: float = 1e-11
    armijo: float = 1e-4
    min_step: float = 2.0 ** -10
    check_resolution: bool = True


@dataclass
class SteadyState:
    x_grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    C: float
    residual_inf: float
    newton_iters: int
    epsilon: float
    D: float
    xi: float
    alpha: float
    layer_position: float
    orientation: str

    @property
    def n(self):
        return self.x_grid.size

    def mass(self):
        return float(grid.integrate(self.u + self.v))

    def first_integral_deviation(self):
        return float(np.max(np.abs(self.epsilon ** 2 * self.u + self.D * self.v - self.C)))

    def to_dict(self):
        return {"C": self.C, "residual_inf": self.residual_inf,
                "newton_iters": self.newton_iters,
                "layer_position_detected": self.layer_position,
                "mass": self.mass(),
                "first_integral_deviation": self.first_integral_deviation(),
                "n": self.n, "orientation": self.orientation}


def _reduced_residual(model, eps, D, xi, u, C, w):
    v = (C - eps ** 2 * u) / D
    F = eps ** 2 * grid.apply_laplacian(u) + model.f(u, v)
    G = float(w @ (u + v)) - xi
    return F, G, v


def full_residual(model: BistableModel, params: ProblemParams, state) -> tuple:
    """Max-norm residuals of eps^2 u_xx + f = 0 and D v_xx - f = 0 on the grid."""
    eps, D = params.epsilon, params.D
    fv = model.f(state.u, state.v)
    r_u = eps ** 2 * grid.apply_laplacian(state.u) + fv
    r_v = D * grid.apply_laplacian(state.v) - fv
    return float(np.max(np.abs(r_u))), float(np.max(np.abs(r_v)))


def detect_layer(x, u, alpha, orientation=None):
    """Position where u crosses alpha; the crossing nearest the centre if several."""
    pts = grid.crossing(x, u, alpha)
    if not pts:
        return None
    return float(min(pts, key=lambda p: abs(p - 0.5)))


def refine(model: BistableModel, params: ProblemParams, init, cfg: NewtonConfig | None = None,
           alpha: float | None = None, orientation: str = "jump_up") -> SteadyState:
    """Damped Newton refinement of an initial (u, C) guess.

    ``init`` needs ``x_grid`` and ``u``; ``C``, ``alpha`` are taken from it when
    present (a CompositeApprox provides both).
    """
    cfg = cfg or NewtonConfig()
    eps, D, xi = params.epsilon, params.D, params.xi
    x = np.asarray(init.x_grid, dtype=float)
    n = x.size
    h = 1.0 / (n - 1)
    if cfg.check_resolution and h > eps / 8:
        raise ValueError(f"grid spacing {h:.3g} does not resolve the layer (need <= eps/8)")
    if alpha is None:
        alpha = getattr(init, "alpha", None)
    u = np.array(init.u, dtype=float)
    C = getattr(init, "C", None)
    if C is None:
        C = eps ** 2 * float(np.mean(u)) + D * float(np.mean(init.v))
    w = grid.trapezoid_weights(n)
    lower, diag0, upper = grid.laplacian_bands(n)
    lower = eps ** 2 * lower / h ** 2
    upper = eps ** 2 * upper / h ** 2
    diag0 = eps ** 2 * diag0 / h ** 2
    wv = w * (1.0 - eps ** 2 / D)
    dGdC = float(np.sum(w)) / D

    F, G, v = _reduced_residual(model, eps, D, xi, u, C, w)
    merit = 0.5 * (F @ F + G * G)
    res = max(np.max(np.abs(F)), abs(G))
    it = 0
    while res > cfg.tol:
        if it >= cfg.max_iters:
            raise NoConvergence(f"Newton did not converge in {cfg.max_iters} steps",
                                residual=float(res), iterations=it)
        fu = model.f_u(u, v)
        fvv = model.f_v(u, v) * np.ones_like(u)
        ab = grid.banded_from_tridiag(lower, diag0 + fu - eps ** 2 * fvv / D, upper)
        try:
            a = solve_banded((1, 1), ab, -F)
            b = solve_banded((1, 1), ab, fvv / D)
        except (LinAlgError, ValueError) as exc:
            raise JacobianSingular("tridiagonal block is singular", iteration=it) from exc
        schur = dGdC - wv @ b
        if not np.isfinite(schur) or abs(schur) < 1e-14 * max(1.0, dGdC):
            raise JacobianSingular("bordered Newton system is singular", iteration=it)
        dC = (-G - wv @ a) / schur
        du = a - b * dC
        if not (np.all(np.isfinite(du)) and np.isfinite(dC)):
            raise JacobianSingular("non-finite Newton step", iteration=it)

        # Armijo backtracking on 0.5 |(F, G)|^2; the directional derivative is -2 merit
        t = 1.0
        while True:
            un, Cn = u + t * du, C + t * dC
            Fn, Gn, vn = _reduced_residual(model, eps, D, xi, un, Cn, w)
            mn = 0.5 * (Fn @ Fn + Gn * Gn)
            if mn <= (1.0 - 2.0 * cfg.armijo * t) * merit or t <= cfg.min_step:
                break
            t *= 0.5
        stalled = mn >= merit and t <= cfg.min_step
        u, C, F, G, v, merit = un, Cn, Fn, Gn, vn, mn
        res = max(np.max(np.abs(F)), abs(G))
        it += 1
        if stalled and res > 1e-10:
            raise NoConvergence("line search stalled", residual=float(res), iterations=it)
        if stalled:
            break

    v = (C - eps ** 2 * u) / D
    if alpha is None:
        alpha = 0.5 * (float(np.min(u)) + float(np.max(u)))
    pos = detect_layer(x, u, alpha)
    if pos is None or min(pos, 1.0 - pos) < 2 * eps:
        raise JacobianSingular("layer collapsed to the boundary", layer_position=pos)
    state = SteadyState(x_grid=x, u=u, v=v, C=float(C), residual_inf=0.0, newton_iters=it,
                        epsilon=eps, D=D, xi=xi, alpha=float(alpha), layer_position=pos,
                        orientation=orientation)
    r_u, r_v = full_residual(model, params, state)
    state.residual_inf = max(r_u, r_v, abs(G))
    return state


def nested_fine_size(n):
    """Grid size whose spacing is exactly half that of an n-point grid."""
    return 2 * n - 1


def richardson_state(coarse: SteadyState, fine: SteadyState) -> SteadyState:
    """Second-order Richardson combination of states on nested grids (n and 2n-1 points).

    The result lives on the coarse grid and is fourth-order accurate; its grid
    residual is not small (it no longer solves the coarse discrete problem), so
    residual_inf reports the fine-grid value.
    """
    if fine.n != nested_fine_size(coarse.n):
        raise ValueError("fine state must use 2n-1 points for an n-point coarse state")
    u = (4.0 * fine.u[::2] - coarse.u) / 3.0
    C = (4.0 * fine.C - coarse.C) / 3.0
    v = (C - coarse.epsilon ** 2 * u) / coarse.D
    return SteadyState(x_grid=coarse.x_grid, u=u, v=v, C=C, residual_inf=fine.residual_inf,
                       newton_iters=fine.newton_iters, epsilon=coarse.epsilon, D=coarse.D,
                       xi=coarse.xi, alpha=coarse.alpha,
                       layer_position=(4.0 * fine.layer_position - coarse.layer_position) / 3.0,
                       orientation=coarse.orientation)


def solve_steady(model, params, orientation="jump_up", n=2048, alpha=None, cfg=None,
                 branch=None):
    """Convenience pipeline: branch -> front -> geometry -> composite -> Newton."""
    from .branch import find_v_star
    from .layer import composite, front_profile, geometry

    branch = branch or find_v_star(model)
    profile = front_profile(model, branch, alpha)
    geom = geometry(model, branch, params, orientation, profile=profile)
    comp = composite(model, branch, geom, profile, params, n)
    state = refine(model, params, comp, cfg, orientation=orientation)
    return state, comp, geom, profile, branch
