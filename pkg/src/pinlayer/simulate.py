"""Mass-conserving time integration of u_t = eps^2 u_xx + f, v_t = D v_xx - f.

Diffusion is treated by the theta-method with tridiagonal solves, reaction
explicitly.  One reaction evaluation is added to u and subtracted from v, and
the Neumann Laplacian satisfies w^T L = 0 for the trapezoid weights w, so the
discrete mass sum w . (u + v) is conserved up to the rounding of the linear
solves.  With theta = 0.5 the reaction uses second-order Adams-Bashforth
extrapolation (Euler on the first step), giving a second-order scheme.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lapack

from . import grid
from .errors import LinearSolveFailure, WindowNotFound
from .model import BistableModel, ProblemParams
from .steady import detect_layer


@dataclass(frozen=True)
class SimConfig:
    n: int = 2048
    dt: float = 0.02
    t_end: float = 600.0
    theta: float = 0.5
    perturbation_amplitude: float = 1e-4
    seed: int = 0
    n_modes: int = 8
    record_every: int = 10
    # floor of the fittable deviation range; 10x the steady residual level
    solver_tol: float = 1e-10

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.n < 3 or self.record_every < 1:
            raise ValueError("n must be >= 3 and record_every >= 1")
        if self.perturbation_amplitude < 0:
            raise ValueError("perturbation_amplitude must be non-negative")


@dataclass
class SimState:
    t: float
    u: np.ndarray
    v: np.ndarray
    f_prev: np.ndarray | None = None
    steps: int = 0
    # rounding lost in u += du, carried to the next step (Kahan summation)
    carry_u: np.ndarray | float = 0.0
    carry_v: np.ndarray | float = 0.0


def _compensated_add(x, dx, carry):
    """x + dx with Kahan compensation.

    Near a steady state the increments fall below the spacing of u while v,
    which sits closer to zero, still absorbs them; plain addition then drifts
    the mass systematically.
    """
    y = dx - carry
    t = x + y
    return t, (t - x) - y


class _TridiagSolver:
    """LU factorization of I - c L, reused for every step."""

    def __init__(self, n, c):
        lower, diag, upper = grid.laplacian_bands(n)
        h = 1.0 / (n - 1)
        r = c / h ** 2
        dl, d, du, du2, ipiv, info = lapack.dgttrf(-r * lower, 1.0 - r * diag, -r * upper)
        if info != 0:
            raise LinearSolveFailure("tridiagonal factorization failed", info=int(info))
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, b):
        x, info = lapack.dgttrs(*self._lu, b)
        if info != 0 or not np.all(np.isfinite(x)):
            raise LinearSolveFailure("tridiagonal solve failed", info=int(info))
        return x


def diffusion_substep(u, coef, dt, theta=1.0, source=None):
    """One theta-step of u_t = coef u_xx + source with Neumann closure."""
    n = u.size
    rhs = dt * coef * grid.apply_laplacian(u)
    if source is not None:
        rhs = rhs + dt * source
    if theta == 0.0:
        return u + rhs
    return u + _TridiagSolver(n, theta * dt * coef).solve(rhs)


class Stepper:
    """IMEX theta-scheme with cached factorizations for fixed (n, dt, eps, D)."""

    def __init__(self, model: BistableModel, params: ProblemParams, cfg: SimConfig):
        self.model = model
        self.eps2 = params.epsilon ** 2
        self.D = params.D
        self.cfg = cfg
        th, dt = cfg.theta, cfg.dt
        self._su = _TridiagSolver(cfg.n, th * dt * self.eps2)
        self._sv = _TridiagSolver(cfg.n, th * dt * self.D)

    def reaction(self, state: SimState):
        f_now = self.model.f(state.u, state.v) * np.ones_like(state.u)
        if self.cfg.theta == 0.5 and state.f_prev is not None:
            return f_now, 1.5 * f_now - 0.5 * state.f_prev
        return f_now, f_now

    def __call__(self, state: SimState) -> SimState:
        cfg = self.cfg
        dt, th = cfg.dt, cfg.theta
        f_now, R = self.reaction(state)
        # increment form (I - theta c L) du = c L u + dt R: rounding scales with |du|, not |u|
        ru = dt * self.eps2 * grid.apply_laplacian(state.u) + dt * R
        rv = dt * self.D * grid.apply_laplacian(state.v) - dt * R
        u, cu = _compensated_add(state.u, self._su.solve(ru), state.carry_u)
        v, cv = _compensated_add(state.v, self._sv.solve(rv), state.carry_v)
        return SimState(t=state.t + dt, u=u, v=v, f_prev=f_now, steps=state.steps + 1,
                        carry_u=cu, carry_v=cv)


def step(model: BistableModel, params: ProblemParams, state_in: SimState,
         cfg: SimConfig) -> SimState:
    """Advance one time step (builds the factorizations; use Stepper in loops)."""
    if state_in.u.size != cfg.n:
        cfg = replace(cfg, n=state_in.u.size)
    return Stepper(model, params, cfg)(state_in)


def mass(u, v, w=None):
    return float(grid.integrate(u + v, w))


def deviation_norm(u, v, base_u, base_v, w):
    du, dv = u - base_u, v - base_v
    return float(np.sqrt(w @ (du * du + dv * dv)))


@dataclass
class SimTrace:
    t: np.ndarray
    mass: np.ndarray
    layer_position: np.ndarray
    deviation_norm: np.ndarray
    final: SimState

    def rows(self):
        return np.column_stack([self.t, self.mass, self.layer_position, self.deviation_norm])

    columns = ("t", "mass", "layer_position", "deviation_norm")


def run(model: BistableModel, params: ProblemParams, u0, v0, cfg: SimConfig, base=None,
        alpha=None, stop_above=None) -> SimTrace:
    """Time series of (t, mass, layer position, deviation from ``base``) every record_every steps.

    Stops early when the deviation exceeds ``stop_above``.
    """
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if u0.size != cfg.n:
        cfg = replace(cfg, n=u0.size)
    w = grid.trapezoid_weights(cfg.n)
    x = np.linspace(0.0, 1.0, cfg.n)
    fu_max = float(np.max(np.abs(model.f_u(u0, v0))))
    if fu_max > 0 and cfg.dt > 0.1 / fu_max:
        warnings.warn(f"dt={cfg.dt} exceeds 0.1/max|f_u| = {0.1 / fu_max:.3g}; "
                      "reaction is under-resolved in time", stacklevel=2)
    if alpha is None:
        alpha = base.alpha if base is not None else 0.5 * (u0.min() + u0.max())
    bu = base.u if base is not None else None
    bv = base.v if base is not None else None
    stepper = Stepper(model, params, cfg)
    state = SimState(t=0.0, u=u0.copy(), v=v0.copy())
    n_steps = int(round(cfg.t_end / cfg.dt))

    ts, ms, ps, ds = [], [], [], []

    def record(s):
        ts.append(s.t)
        ms.append(mass(s.u, s.v, w))
        pos = detect_layer(x, s.u, alpha)
        ps.append(np.nan if pos is None else pos)
        ds.append(np.nan if bu is None else deviation_norm(s.u, s.v, bu, bv, w))

    record(state)
    for k in range(1, n_steps + 1):
        state = stepper(state)
        if k % cfg.record_every == 0 or k == n_steps:
            record(state)
            if stop_above is not None and ds[-1] > stop_above:
                break
    return SimTrace(t=np.array(ts), mass=np.array(ms), layer_position=np.array(ps),
                    deviation_norm=np.array(ds), final=state)


def perturbation(n, amplitude, seed=0, n_modes=8):
    """Smooth random u-perturbation of zero discrete mass (v is left unperturbed).

    Random coefficients on cos(k pi x), k = 1..n_modes, decaying like 1/k, scaled
    to max-norm ``amplitude``; the weighted mean is removed so w . du = 0.
    """
    x = np.linspace(0.0, 1.0, n)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(n_modes) / np.arange(1, n_modes + 1)
    p = sum(ck * np.cos((k + 1) * np.pi * x) for k, ck in enumerate(c))
    w = grid.trapezoid_weights(n)
    p = p - (w @ p) / np.sum(w)
    scale = np.max(np.abs(p))
    if amplitude == 0 or scale == 0:
        return np.zeros(n)
    return amplitude * p / scale


def front_data(profile, params: ProblemParams, n: int, position: float,
               orientation: str = "jump_up"):
    """Front u = W(+-(x - position)/eps) with constant v chosen so the discrete mass is xi."""
    x = np.linspace(0.0, 1.0, n)
    sign = 1.0 if orientation == "jump_up" else -1.0
    u = profile.value(sign * (x - position) / params.epsilon)
    w = grid.trapezoid_weights(n)
    v = np.full(n, (params.xi - w @ u) / np.sum(w))
    return u, v


@dataclass
class RateFit:
    rate: float
    intercept: float
    r2: float
    t_start: float
    t_stop: float


def fit_growth_rate(t, dev, lo, hi, min_r2=0.999, min_points=20):
    """Exponential rate of ``dev`` on an automatically chosen window.

    Only samples with lo <= dev <= hi are used (the longest contiguous run).
    Candidate windows start progressively later, so that faster transients
    have decayed; the first window whose log-linear fit reaches ``min_r2`` and
    whose two halves agree on the slope within 2% is accepted.
    """
    t = np.asarray(t)
    dev = np.asarray(dev)
    ok = np.isfinite(dev) & (dev >= lo) & (dev <= hi)
    best = (0, 0)
    i = 0
    while i < ok.size:
        if ok[i]:
            j = i
            while j < ok.size and ok[j]:
                j += 1
            if j - i > best[1] - best[0]:
                best = (i, j)
            i = j
        else:
            i += 1
    a, b = best
    if b - a < min_points:
        raise WindowNotFound("deviation did not stay in the fittable range long enough",
                             samples=int(b - a), lo=lo, hi=hi)
    y = np.log(dev[a:b])
    tt = t[a:b]
    for frac in np.linspace(0.0, 0.8, 17):
        s = a + int(frac * (b - a))
        if b - s < min_points:
            break
        ts, ys = t[s:b], np.log(dev[s:b])
        slope, icpt = np.polyfit(ts, ys, 1)
        resid = ys - (slope * ts + icpt)
        ss = np.sum((ys - ys.mean()) ** 2)
        r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 0.0
        m = (b - s) // 2
        s1 = np.polyfit(ts[:m], ys[:m], 1)[0]
        s2 = np.polyfit(ts[m:], ys[m:], 1)[0]
        if r2 >= min_r2 and abs(s1 - s2) <= 0.02 * max(abs(slope), 1e-14):
            return RateFit(rate=float(slope), intercept=float(icpt), r2=float(r2),
                           t_start=float(ts[0]), t_stop=float(ts[-1]))
    raise WindowNotFound("no window with a clean exponential fit", t_start=float(tt[0]),
                         t_stop=float(tt[-1]))


@dataclass
class SimReport:
    mass_drift_max: float
    final_layer_position: float
    growth_rate_fit: float | None
    # a clean exponential fit was found, or (zero perturbation) the state never left the floor
    converged: bool
    fit: RateFit | None = None
    trace: SimTrace | None = field(default=None, repr=False)

    def to_dict(self):
        d = {"mass_drift_max": self.mass_drift_max,
             "final_layer_position": self.final_layer_position,
             "growth_rate_fit": self.growth_rate_fit, "converged": self.converged}
        if self.fit is not None:
            d["fit_window"] = [self.fit.t_start, self.fit.t_stop]
            d["fit_r2"] = self.fit.r2
        return d


def run_stability_experiment(model: BistableModel, params: ProblemParams, base,
                             cfg: SimConfig, jump: float | None = None) -> SimReport:
    """Perturb a steady state within the mass-zero subspace and fit the growth rate.

    The fit uses the deviations between 10x the solver tolerance and 0.1x the
    layer amplitude (the jump across the layer).
    """
    n = base.u.size
    if cfg.n != n:
        cfg = replace(cfg, n=n)
    if jump is None:
        jump = float(np.max(base.u) - np.min(base.u))
    du = perturbation(n, cfg.perturbation_amplitude, cfg.seed, cfg.n_modes)
    hi = 0.1 * jump
    trace = run(model, params, base.u + du, base.v.copy(), cfg, base=base, stop_above=hi)
    drift = float(np.max(np.abs(trace.mass - trace.mass[0])))
    lo = 10.0 * cfg.solver_tol
    fit = None
    if cfg.perturbation_amplitude > 0:
        fit = fit_growth_rate(trace.t, trace.deviation_norm, lo, hi)
    if fit is not None:
        converged = True
    else:
        converged = bool(np.nanmax(trace.deviation_norm) <= lo)
    return SimReport(mass_drift_max=drift, final_layer_position=float(trace.layer_position[-1]),
                     growth_rate_fit=None if fit is None else fit.rate,
                     converged=converged, fit=fit, trace=trace)
