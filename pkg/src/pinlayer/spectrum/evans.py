"""Evans function of the layer by two-sided shooting.

The eigenvalue problem is written as V' = A(x; lambda) V for
V = (p, eps p_x, q, q_x).  Two solutions spanning the Neumann subspace are
shot from x = 0 and two from x = 1 to the matching point x*, where the
determinant of the four vectors vanishes exactly at eigenvalues (lambda != 0).

Both frames are re-orthonormalized by QR at segment breaks.  Rescaling each
vector to unit length alone is not enough: the two vectors from one side both
align with the fastest growing mode and the frame becomes numerically rank one.
The diagonal of every R factor is accumulated in ``log_scale``, so that
g_value * exp(log_scale) is the (analytic) unnormalized determinant.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from ..errors import NoZeroFound, StiffnessOverflow
from ..model import BistableModel


@dataclass(frozen=True)
class EvansSample:
    lam: complex
    g_value: complex
    log_scale: complex

    def scaled(self, ref_log=0.0):
        """g_value * exp(log_scale - ref_log): analytic in lambda for a fixed ref_log."""
        return self.g_value * cmath.exp(self.log_scale - ref_log)

    def to_dict(self):
        return {"lambda": self.lam, "g_value": self.g_value, "log_scale": self.log_scale,
                "abs_g": abs(self.g_value)}


class EvansFunction:
    """Evans function for a converged steady state.

    ``segment`` is the maximal x-length integrated between re-orthonormalizations,
    in units of eps.
    """

    def __init__(self, model: BistableModel, state, match_point=None, rtol=1e-9,
                 atol=1e-11, method="RK45", segment=2.0):
        self.eps = state.epsilon
        self.D = state.D
        x = state.x_grid
        self._u = CubicSpline(x, state.u)
        self._C = state.C
        self.model = model
        self.xm = float(state.layer_position if match_point is None else match_point)
        self.rtol = rtol
        self.atol = atol
        self.method = method
        self.segment = segment * self.eps

    def coefficients(self, x):
        u = self._u(x)
        v = (self._C - self.eps ** 2 * u) / self.D
        return float(self.model.f_u(u, v)), float(self.model.f_v(u, v))

    def _rhs(self, lam):
        eps, D = self.eps, self.D

        def rhs(x, y):
            fu, fv = self.coefficients(x)
            Y = y.reshape(4, 2)
            out = np.empty_like(Y)
            out[0] = Y[1] / eps
            out[1] = ((lam - fu) * Y[0] - fv * Y[2]) / eps
            out[2] = Y[3]
            out[3] = (fu * Y[0] + (lam + fv) * Y[2]) / D
            return out.ravel()

        return rhs

    def _shoot(self, lam, x_start, x_end):
        Y = np.zeros((4, 2), dtype=complex)
        # Neumann data p_x = q_x = 0: span of (1,0,0,0) and (0,0,1,0)
        Y[0, 0] = 1.0
        Y[2, 1] = 1.0
        n_seg = max(1, int(np.ceil(abs(x_end - x_start) / self.segment)))
        edges = np.linspace(x_start, x_end, n_seg + 1)
        rhs = self._rhs(lam)
        log_scale = 0j
        for a, b in zip(edges[:-1], edges[1:]):
            sol = solve_ivp(rhs, (a, b), Y.ravel(), method=self.method, rtol=self.rtol,
                            atol=self.atol)
            if sol.status != 0:
                raise StiffnessOverflow(
                    "shooting integrator failed; eps is too small for this integrator",
                    epsilon=self.eps, lam=complex(lam), integrator_message=sol.message,
                    min_feasible_epsilon=2.0 * self.eps)
            Q, R = np.linalg.qr(sol.y[:, -1].reshape(4, 2))
            d = np.diag(R)
            if np.any(d == 0):
                raise StiffnessOverflow("frame lost rank during shooting", lam=complex(lam))
            log_scale += np.sum(np.log(d.astype(complex)))
            Y = Q
        return Y, log_scale

    def __call__(self, lam) -> EvansSample:
        lam = complex(lam)
        if not cmath.isfinite(lam):
            raise ValueError(f"lambda must be finite, got {lam}")
        left, l_log = self._shoot(lam, 0.0, self.xm)
        right, r_log = self._shoot(lam, 1.0, self.xm)
        g = np.linalg.det(np.hstack([left, right]))
        return EvansSample(lam=lam, g_value=complex(g), log_scale=complex(l_log + r_log))


def evans_value(model, params, state, lam, **kw) -> EvansSample:
    return EvansFunction(model, state, **kw)(lam)


def evans_zero_search(model, params, state, seed, trust=5.0, tol=1e-10, max_iter=40,
                      evans=None) -> complex:
    """Zero of g near ``seed`` by Muller iteration.

    The search works with g(lambda) / lambda: the unconstrained problem always
    has lambda = 0 as a root of g, and dividing it out keeps the iteration from
    being attracted to it.  The iterate must stay within trust * eps of the seed.
    """
    ev = evans or EvansFunction(model, state)
    eps = state.epsilon
    seed = complex(seed)
    radius = trust * eps
    step = 0.05 * max(abs(seed), eps)
    ref = ev(seed).log_scale

    def G(lam):
        return ev(lam).scaled(ref) / lam

    xs = [seed - step, seed + step, seed]
    gs = [G(z) for z in xs]
    scale = max(abs(g) for g in gs)
    for _ in range(max_iter):
        x0, x1, x2 = xs
        g0, g1, g2 = gs
        h1, h2 = x1 - x0, x2 - x1
        d1, d2 = (g1 - g0) / h1, (g2 - g1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4.0 * g2 * a)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            raise NoZeroFound("Muller iteration degenerated", seed=seed)
        dx = -2.0 * g2 / den
        x3 = x2 + dx
        if abs(x3 - seed) > radius:
            raise NoZeroFound("zero search left the trust region", seed=seed,
                              radius=radius, last=x3)
        g3 = G(x3)
        xs, gs = [x1, x2, x3], [g1, g2, g3]
        if abs(dx) <= 1e-12 * max(abs(x3), eps) or abs(g3) <= tol * scale:
            if abs(x3.imag) <= 1e-10 * abs(x3):
                x3 = complex(x3.real, 0.0)
            return x3
    raise NoZeroFound("zero search did not converge", seed=seed, iterations=max_iter)
