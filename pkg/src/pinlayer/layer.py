"""Leading-order single-layer construction.

The inner front W solves W'' + f(W, v*) = 0 with W(-inf) = h-(v*),
W(+inf) = h+(v*), W(0) = alpha.  It is computed from the energy relation
W' = sqrt(-2 int_{h-}^{W} f(u, v*) du) by quadrature in W, so every quantity
that is an integral against the front (tail masses, int W'^2) can be taken as
a regular integral in W rather than over an infinite z-range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly

from .branch import BranchData, default_alpha
from .errors import MassOutOfRange, UnbalancedFront
from .model import BistableModel, ProblemParams

JUMP_UP = "jump_up"
JUMP_DOWN = "jump_down"
ORIENTATIONS = (JUMP_UP, JUMP_DOWN)

# below this distance from a plateau the potential is evaluated by Taylor expansion
_TAYLOR_GAP = 1e-5
_QTOL = 1e-13


class _Potential:
    """G(W) = -int_{h-}^{W} f(u, v*) du, which is >= 0 on [h-, h+] when J(v*) = 0."""

    def __init__(self, model, v_star, hm, hp):
        self.model = model
        self.v = v_star
        self.hm = hm
        self.hp = hp
        self.mid = 0.5 * (hm + hp)
        self.fu_m = float(model.f_u(hm, v_star))
        self.fu_p = float(model.f_u(hp, v_star))
        self.fuu_m = float(model.f_uu(hm, v_star))
        self.fuu_p = float(model.f_uu(hp, v_star))

    def f(self, u):
        return float(self.model.f(u, self.v))

    def __call__(self, W):
        d = W - self.hm
        e = self.hp - W
        if d < _TAYLOR_GAP:
            return -0.5 * self.fu_m * d * d - self.fuu_m * d ** 3 / 6.0
        if e < _TAYLOR_GAP:
            return -0.5 * self.fu_p * e * e + self.fuu_p * e ** 3 / 6.0
        if W <= self.mid:
            val, _ = quad(self.f, self.hm, W, epsabs=0.0, epsrel=_QTOL, limit=200)
            return -val
        val, _ = quad(self.f, W, self.hp, epsabs=0.0, epsrel=_QTOL, limit=200)
        return val

    def speed(self, W):
        g = self(W)
        if g < 0:
            if g < -1e-12:
                raise UnbalancedFront("negative front potential", W=W, value=g)
            g = 0.0
        return np.sqrt(2.0 * g)


@dataclass
class FrontProfile:
    """Monotone increasing front through alpha at z = 0.

    Between the first and last node W is a quintic Hermite interpolant of
    (W, W', W'' = -f(W, v*)); beyond them it is continued by the linearized
    exponential tails with rates k- = sqrt(-f_u(h-)), k+ = sqrt(-f_u(h+)).
    """

    alpha: float
    v_star: float
    h_minus: float
    h_plus: float
    z_nodes: np.ndarray
    W_nodes: np.ndarray
    W_dot_nodes: np.ndarray
    k_minus: float
    k_plus: float
    W_dot0: float
    W_energy: float
    mass_defects: tuple
    z_max: float
    _poly: BPoly = field(repr=False, default=None)

    def __post_init__(self):
        if self._poly is None:
            Wdd = -np.array([self._f(w) for w in self.W_nodes])
            self._poly = BPoly.from_derivatives(
                self.z_nodes, np.column_stack([self.W_nodes, self.W_dot_nodes, Wdd]))
        self._dl = self.W_nodes[0] - self.h_minus
        self._dr = self.h_plus - self.W_nodes[-1]

    _model: BistableModel = field(repr=False, default=None)

    def _f(self, w):
        return float(self._model.f(w, self.v_star))

    @property
    def z_grid(self):
        """Node positions extended by tail samples out to |z| = z_max."""
        left = np.linspace(-self.z_max, self.z_nodes[0], 40, endpoint=False)
        right = np.linspace(self.z_max, self.z_nodes[-1], 40, endpoint=False)[::-1]
        return np.concatenate([left, self.z_nodes, right])

    @property
    def W(self):
        return self.value(self.z_grid)

    @property
    def W_dot(self):
        return self.derivative(self.z_grid)

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        zl, zr = self.z_nodes[0], self.z_nodes[-1]
        return z, z < zl, z > zr, (z >= zl) & (z <= zr)

    def phi(self, z):
        """Deviation from the plateau on the same side: W - h- for z <= 0, W - h+ for z > 0.

        Evaluated without cancellation in the tails.
        """
        z, lt, rt, mid = self._split(z)
        out = np.empty_like(z)
        out[lt] = self._dl * np.exp(self.k_minus * (z[lt] - self.z_nodes[0]))
        out[rt] = -self._dr * np.exp(-self.k_plus * (z[rt] - self.z_nodes[-1]))
        wm = self._poly(z[mid])
        out[mid] = np.where(z[mid] <= 0, wm - self.h_minus, wm - self.h_plus)
        return out

    def value(self, z):
        z = np.asarray(z, dtype=float)
        ph = self.phi(z)
        out = np.where(z <= 0, self.h_minus + ph, self.h_plus + ph)
        # phase condition W(0) = alpha holds exactly, not just to rounding
        return np.where(z == 0, self.alpha, out)

    def derivative(self, z):
        z, lt, rt, mid = self._split(z)
        out = np.empty_like(z)
        out[lt] = self.k_minus * self._dl * np.exp(self.k_minus * (z[lt] - self.z_nodes[0]))
        out[rt] = self.k_plus * self._dr * np.exp(-self.k_plus * (z[rt] - self.z_nodes[-1]))
        out[mid] = self._poly(z[mid], 1)
        return out

    def to_dict(self):
        return {"alpha": self.alpha, "W_dot0": self.W_dot0, "W_energy": self.W_energy,
                "tail_minus": self.mass_defects[0], "tail_plus": self.mass_defects[1],
                "k_minus": self.k_minus, "k_plus": self.k_plus}


def front_profile(model: BistableModel, branch: BranchData, alpha: float | None = None,
                  n_nodes: int = 512, decay_lengths: float = 40.0) -> FrontProfile:
    """Front through alpha by quadrature of z(W) = int_alpha^W dW / W'(W).

    W-nodes are Chebyshev points on (h-, h+), so they cluster at both plateaus.
    """
    hm, hp, vs = branch.h_minus_star, branch.h_plus_star, branch.v_star
    if alpha is None:
        alpha = default_alpha(branch)
    if not hm < alpha < hp:
        raise ValueError(f"alpha={alpha} must lie strictly between {hm} and {hp}")
    scale = max(1.0, abs(hm), abs(hp)) ** 2
    if abs(branch.J_star) > 1e-9 * scale:
        raise UnbalancedFront("J(v*) is not zero to tolerance", J_star=branch.J_star)

    G = _Potential(model, vs, hm, hp)
    k_m = np.sqrt(-G.fu_m)
    k_p = np.sqrt(-G.fu_p)

    theta = np.pi * np.arange(1, n_nodes) / n_nodes
    Wn = 0.5 * (hm + hp) - 0.5 * (hp - hm) * np.cos(theta)
    # near a plateau W - h decays like exp(-k|z|), so Chebyshev nodes are ~ln 4 / k apart
    # in z there; geometric nodes bring the spacing down to 0.25 / k and push the
    # linearized tail out to |W - h| = 1e-7 (jump), where its error is ~1e-14
    geo = 0.05 * (hp - hm) * np.exp(-0.25 * np.arange(0, 200))
    geo = geo[geo > 1e-7 * (hp - hm)]
    Wn = np.concatenate([Wn, hm + geo, hp - geo])
    Wn = Wn[np.abs(Wn - alpha) > 1e-9 * (hp - hm)]
    Wn = np.unique(np.append(Wn, alpha))
    i0 = int(np.searchsorted(Wn, alpha))

    inv_speed = lambda w: 1.0 / G.speed(w)
    z = np.zeros_like(Wn)
    for i in range(i0 + 1, len(Wn)):
        dz, _ = quad(inv_speed, Wn[i - 1], Wn[i], epsabs=0.0, epsrel=1e-13, limit=100)
        z[i] = z[i - 1] + dz
    for i in range(i0 - 1, -1, -1):
        dz, _ = quad(inv_speed, Wn[i], Wn[i + 1], epsabs=0.0, epsrel=1e-13, limit=100)
        z[i] = z[i + 1] - dz
    Wd = np.array([G.speed(w) for w in Wn])

    # int_{-inf}^0 (W - h-) dz and int_0^inf (W - h+) dz as integrals in W
    t_minus, _ = quad(lambda w: (w - hm) / G.speed(w), hm, alpha, epsabs=1e-14,
                      epsrel=1e-13, limit=200)
    t_plus, _ = quad(lambda w: (w - hp) / G.speed(w), alpha, hp, epsabs=1e-14,
                     epsrel=1e-13, limit=200)
    energy, _ = quad(G.speed, hm, hp, epsabs=1e-14, epsrel=1e-13, limit=200)

    z_max = decay_lengths / min(k_m, k_p)
    z_max = max(z_max, 1.05 * max(abs(z[0]), abs(z[-1])))
    return FrontProfile(alpha=float(alpha), v_star=vs, h_minus=hm, h_plus=hp,
                        z_nodes=z, W_nodes=Wn, W_dot_nodes=Wd, k_minus=float(k_m),
                        k_plus=float(k_p), W_dot0=float(G.speed(alpha)),
                        W_energy=float(energy), mass_defects=(float(t_minus), float(t_plus)),
                        z_max=float(z_max), _model=model)


@dataclass(frozen=True)
class LayerGeometry:
    x0: float
    x1: float
    beta0: float
    beta1: float
    alpha: float
    orientation: str

    def position(self, epsilon):
        """Asymptotic layer position x0 + eps * x1."""
        return self.x0 + epsilon * self.x1

    def to_dict(self):
        return {"x0": self.x0, "x1": self.x1, "beta0": self.beta0, "beta1": self.beta1,
                "alpha": self.alpha, "orientation": self.orientation}


def mass_range(branch: BranchData):
    return branch.h_minus_star + branch.v_star, branch.h_plus_star + branch.v_star


def geometry(model: BistableModel, branch: BranchData, params: ProblemParams,
             orientation: str = JUMP_UP, profile: FrontProfile | None = None,
             alpha: float | None = None) -> LayerGeometry:
    """Layer position x0 and its first correction x1 from the mass constraint.

    With plateau values hL (left) and hR (right) the mass balance gives
    x0 = (xi - v* - hR) / (hL - hR) and x1 = -(TL + TR) / (hL - hR), where TL, TR
    are the front tail masses on the left and right of the layer.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    lo, hi = mass_range(branch)
    if not lo < params.xi < hi:
        raise MassOutOfRange("mass does not lie strictly between h-(v*)+v* and h+(v*)+v*",
                             xi=params.xi, mass_range=[lo, hi])
    if profile is None:
        profile = front_profile(model, branch, alpha)
    hm, hp, vs = branch.h_minus_star, branch.h_plus_star, branch.v_star
    t_minus, t_plus = profile.mass_defects
    if orientation == JUMP_UP:
        x0 = (vs + hp - params.xi) / (hp - hm)
        x1 = (t_minus + t_plus) / (hp - hm)
    else:
        # mirrored front: the left tail of the layer is the right tail of W
        x0 = (hm + vs - params.xi) / (hm - hp)
        x1 = -(t_plus + t_minus) / (hp - hm)
    return LayerGeometry(x0=float(x0), x1=float(x1), beta0=vs, beta1=0.0,
                         alpha=profile.alpha, orientation=orientation)


@dataclass
class MatchReport:
    Phi0: float
    K: float
    M: float
    R: float
    phi_dot_minus0: float
    phi_dot_plus0: float

    @property
    def ok(self):
        return abs(self.Phi0) <= 1e-8 and abs(self.K) <= 1e-8 and abs(self.R) <= 1e-8 \
            and abs(self.M) >= 1e-8

    def to_dict(self):
        return {"Phi0": self.Phi0, "K": self.K, "M": self.M, "R": self.R,
                "M_sign": int(np.sign(self.M)), "pass": self.ok}


def matching_identities(model: BistableModel, profile: FrontProfile,
                        geom: LayerGeometry, probe=(1.0, 1.0)) -> MatchReport:
    """Residuals of the C^1 matching conditions at the layer.

    Phi0, K and M are evaluated from the closed forms in terms of u-integrals
    of f and f_v.  R is recomputed independently: the first-order mismatch
    Phi1(beta1, x1) is assembled by z-quadrature of the inhomogeneous terms
    against the front at the probe point (beta1, x1), and R = Phi1 - K x1 - M beta1.
    A jump-down layer at x0 is handled as the mirror image of a jump-up layer
    at 1 - x0.
    """
    x0 = geom.x0 if geom.orientation == JUMP_UP else 1.0 - geom.x0
    vs, hm, hp, a = profile.v_star, profile.h_minus, profile.h_plus, profile.alpha

    def uint(g, lo, hi):
        val, _ = quad(lambda u: float(g(u, vs)), lo, hi, epsabs=1e-14, epsrel=1e-13,
                      limit=200)
        return val

    left_f = uint(model.f, hm, a)
    right_f = uint(model.f, a, hp)
    left_fv = uint(model.f_v, hm, a)
    right_fv = uint(model.f_v, a, hp)
    pdm = x0 * np.sqrt(max(-2.0 * left_f, 0.0))
    pdp = (1.0 - x0) * np.sqrt(max(2.0 * right_f, 0.0))

    Phi0 = (1.0 - x0) * pdm - x0 * pdp
    K = x0 * (1.0 - x0) / pdm * (-2.0 * left_f) - pdm \
        + x0 * (1.0 - x0) / pdp * (2.0 * right_f) - pdp
    M = -x0 ** 2 * (1.0 - x0) / pdm * left_fv - x0 * (1.0 - x0) ** 2 / pdp * right_fv

    beta1, x1 = probe
    f_a = float(model.f(a, vs))
    fu_m, fv_m = float(model.f_u(hm, vs)), float(model.f_v(hm, vs))
    fu_p, fv_p = float(model.f_u(hp, vs)), float(model.f_v(hp, vs))
    U1m = -fv_m / fu_m * beta1
    U1p = -fv_p / fu_p * beta1
    zlim = profile.z_max

    def zint(g, lo, hi):
        val, _ = quad(g, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
        return val

    def F1_Wdot(zeta, c, U1, side):
        # the x1 term enters with opposite signs on the two sides
        w = float(profile.value(zeta))
        wd = float(profile.derivative(zeta))
        return (side * 2.0 * c * x1 * float(model.f(w, vs))
                - c * c * float(model.f_u(w, vs)) * U1
                - c * c * float(model.f_v(w, vs)) * beta1) * wd

    # left: phi0-(z) = W(x0 z) - h-, so int F1 phi0-' dz = int F1 W' dzeta
    int_m = zint(lambda t: F1_Wdot(t, x0, U1m, -1.0), -zlim, 0.0)
    int_p = zint(lambda t: F1_Wdot(t, 1.0 - x0, U1p, 1.0), 0.0, zlim)
    pdd_m = -x0 ** 2 * f_a
    pdd_p = -(1.0 - x0) ** 2 * f_a
    pd_m = x0 * profile.W_dot0
    pd_p = (1.0 - x0) * profile.W_dot0
    phi1_m = -U1m * pdd_m / pd_m + int_m / pd_m
    phi1_p = -U1p * pdd_p / pd_p - int_p / pd_p
    Phi1 = (1.0 - x0) * phi1_m - x1 * pd_m - x0 * phi1_p - x1 * pd_p
    R = Phi1 - K * x1 - M * beta1
    return MatchReport(Phi0=float(Phi0), K=float(K), M=float(M), R=float(R),
                       phi_dot_minus0=float(pdm), phi_dot_plus0=float(pdp))


@dataclass
class CompositeApprox:
    x_grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    layer_position: float
    alpha: float
    C: float


def composite(model: BistableModel, branch: BranchData, geom: LayerGeometry,
              profile: FrontProfile, params: ProblemParams, n: int = 2048) -> CompositeApprox:
    """Leading-order uniform approximation on a uniform grid of n points.

    u(x) = W(+-(x - x*)/eps) with x* = x0 + eps x1, i.e. the plateaus h-+(v*)
    plus the inner corrections phi0 on either side; v carries the small
    inner correction psi0 = -phi0 / D, so that eps^2 u + D v is constant.
    """
    if n < 256:
        raise ValueError("composite grid needs at least 256 points")
    eps, D = params.epsilon, params.D
    x = np.linspace(0.0, 1.0, n)
    xs = geom.position(eps)
    sign = 1.0 if geom.orientation == JUMP_UP else -1.0
    u = profile.value(sign * (x - xs) / eps)
    v = branch.v_star - eps ** 2 * (u - profile.alpha) / D
    C = eps ** 2 * profile.alpha + D * branch.v_star
    return CompositeApprox(x_grid=x, u=u, v=v, layer_position=float(xs),
                           alpha=profile.alpha, C=float(C))
