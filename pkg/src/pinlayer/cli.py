"""Command-line front end: ``pinlayer {branch,layer,steady,spectrum,simulate,report}``.

Every subcommand writes ``<name>.json`` and/or CSV tables to the output
directory, plus PNG figures unless ``output.figures = false``.  Exit codes:
0 success (for ``report``: all stability indicators agree), 1 error (a
structured ``error.json`` is written and echoed on stderr), 2 indicator
disagreement (``report`` only).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .branch import branch_table, find_v_star
from .config import RunConfig, load, with_output, with_seed
from .errors import MassOutOfRange, ModelError, PinlayerError
from .layer import composite, front_profile, geometry, matching_identities
from .model import validate_assumptions
from .outputs import dumps, write_csv, write_json
from .simulate import SimConfig, run_stability_experiment
from .spectrum import EvansFunction, analyze, zero_mode_exclusion
from .steady import refine

EXIT_OK, EXIT_ERROR, EXIT_DISAGREE = 0, 1, 2
INDICATORS = ("asymptotic", "evans", "direct", "simulation")


class _Out:
    """Writes tables and summaries according to the configured formats."""

    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.output.directory)
        self.formats = cfg.output.formats
        self.figures = cfg.output.figures
        self.written = []

    def json(self, name, obj):
        if self.formats in ("json", "both"):
            self.written.append(str(write_json(self.dir / f"{name}.json", obj)))

    def csv(self, name, header, rows):
        if self.formats in ("csv", "both"):
            self.written.append(str(write_csv(self.dir / f"{name}.csv", header, rows)))

    def figure(self, fn, name, *args, **kw):
        if self.figures:
            self.written.append(str(fn(*args, path=self.dir / f"{name}.png", **kw)))


def metadata(cfg: RunConfig):
    """Run description without wall-clock values; output placement is left out so that
    reports written to different directories compare byte-for-byte."""
    conf = cfg.to_dict()
    conf.pop("output")
    return {"tool": "pinlayer", "version": __version__, "config": conf}


# ----------------------------------------------------------------- pipeline

def _setup(cfg: RunConfig):
    model = cfg.build_model()
    params = cfg.problem()
    return model, params


def _validated(cfg):
    model, params = _setup(cfg)
    rep = validate_assumptions(model, params)
    if not rep.a4_mass and rep.a2_nondegenerate:
        lo, hi = rep.details["mass_range"]
        raise MassOutOfRange("mass does not lie strictly between h-(v*)+v* and h+(v*)+v*",
                             xi=params.xi, mass_range=[lo, hi])
    if not rep.ok:
        raise ModelError("model assumptions failed", assumptions=rep.to_dict())
    return model, params, rep


def _layer(cfg, model, params):
    br = find_v_star(model)
    prof = front_profile(model, br, cfg.layer.alpha)
    geom = geometry(model, br, params, cfg.layer.orientation, profile=prof)
    return br, prof, geom


def _steady(cfg, model, params, br, prof, geom):
    comp = composite(model, br, geom, prof, params, cfg.grid.n)
    state = refine(model, params, comp, orientation=cfg.layer.orientation)
    return comp, state


def _sim_config(cfg):
    return SimConfig(n=cfg.grid.n, dt=cfg.grid.dt, t_end=cfg.grid.t_end, theta=cfg.grid.theta,
                     perturbation_amplitude=cfg.simulate.perturbation_amplitude,
                     seed=cfg.simulate.seed, n_modes=cfg.simulate.n_modes)


def contour_samples(model, state, lambda_max, m, method="RK45"):
    """|g| on an m x m grid of Re in [-lambda_max, lambda_max], Im in [0, lambda_max]."""
    ev = EvansFunction(model, state, method=method)
    re = np.linspace(-lambda_max, lambda_max, m)
    im = np.linspace(0.0, lambda_max, m)
    rows = []
    for b in im:
        for a in re:
            lam = complex(a, b)
            if lam == 0:
                continue
            rows.append((a, b, abs(ev(lam).g_value)))
    return rows


# ----------------------------------------------------------------- commands

def cmd_branch(cfg, out: _Out):
    model, params = _setup(cfg)
    rep = validate_assumptions(model, params)
    br = find_v_star(model)
    rows = branch_table(model)
    res = {"metadata": metadata(cfg), "branch": br.to_dict(), "assumptions": rep.to_dict()}
    out.json("branch", res)
    out.csv("branch", ["v", "h_minus", "h_zero", "h_plus", "J"], rows)
    out.figure(plotting.plot_branch, "branch", rows, br.v_star)
    return res, EXIT_OK


def cmd_layer(cfg, out: _Out):
    model, params, rep = _validated(cfg)
    br, prof, geom = _layer(cfg, model, params)
    match = matching_identities(model, prof, geom)
    comp = composite(model, br, geom, prof, params, cfg.grid.n)
    res = {"metadata": metadata(cfg), "branch": br.to_dict(), "profile": prof.to_dict(),
           "geometry": geom.to_dict(), "matching": match.to_dict(),
           "layer_position": geom.position(params.epsilon)}
    out.json("layer", res)
    z = prof.z_grid
    out.csv("front", ["z", "W", "W_dot"], zip(z, prof.value(z), prof.derivative(z)))
    out.csv("composite", ["x", "u", "v"], zip(comp.x_grid, comp.u, comp.v))
    out.figure(plotting.plot_layer, "layer", comp.x_grid, comp.u, comp.v, z, prof.value(z))
    return res, EXIT_OK


def cmd_steady(cfg, out: _Out):
    model, params, rep = _validated(cfg)
    br, prof, geom = _layer(cfg, model, params)
    comp, state = _steady(cfg, model, params, br, prof, geom)
    res = {"metadata": metadata(cfg), "steady": state.to_dict(),
           "composite_error_inf": float(np.max(np.abs(state.u - comp.u))),
           "layer_position_asymptotic": geom.position(params.epsilon)}
    out.json("steady", res)
    out.csv("steady", ["x", "u", "v", "u_composite"],
            zip(state.x_grid, state.u, state.v, comp.u))
    out.figure(plotting.plot_steady, "steady", state.x_grid, state.u, comp.u)
    return res, EXIT_OK


def _spectrum(cfg, model, params, state, br, prof, geom):
    sp = cfg.spectrum
    return analyze(model, params, state, br, prof, geom, omega_grid=sp.omega,
                   case3_mu=sp.case3_mu, k=sp.k, evans_kw={"method": sp.integrator})


def cmd_spectrum(cfg, out: _Out):
    model, params, rep = _validated(cfg)
    br, prof, geom = _layer(cfg, model, params)
    comp, state = _steady(cfg, model, params, br, prof, geom)
    spectral = _spectrum(cfg, model, params, state, br, prof, geom)
    res = {"metadata": metadata(cfg), **spectral.to_dict()}
    out.json("spectrum", res)
    ds = spectral.direct
    out.csv("eigenvalues", ["re", "im", "mass_ratio", "constrained"],
            zip(ds.eigenvalues.real, ds.eigenvalues.imag, ds.mass_ratio, ds.constrained))
    contour = None
    if cfg.spectrum.contour_samples > 0:
        contour = contour_samples(model, state, cfg.spectrum.lambda_max,
                                  cfg.spectrum.contour_samples, cfg.spectrum.integrator)
        out.csv("evans_samples", ["re", "im", "abs_g"], contour)
    out.figure(plotting.plot_spectrum, "spectrum", ds.eigenvalues, ds.constrained,
               spectral.lambda_asymptotic, spectral.lambda_evans, contour=contour)
    return res, EXIT_OK


def cmd_simulate(cfg, out: _Out):
    model, params, rep = _validated(cfg)
    br, prof, geom = _layer(cfg, model, params)
    comp, state = _steady(cfg, model, params, br, prof, geom)
    sim = run_stability_experiment(model, params, state, _sim_config(cfg), jump=br.jump)
    res = {"metadata": metadata(cfg), **sim.to_dict()}
    out.json("simulate", res)
    tr = sim.trace
    out.csv("timeseries", list(tr.columns), tr.rows())
    out.figure(plotting.plot_simulation, "simulate", tr.t, tr.deviation_norm, sim.fit)
    return res, EXIT_OK


def agreement_matrix(verdicts: dict):
    return {a: {b: (verdicts[a] is not None and verdicts[a] == verdicts[b])
                for b in INDICATORS} for a in INDICATORS}


def cmd_report(cfg, out: _Out):
    model, params, rep = _validated(cfg)
    br, prof, geom = _layer(cfg, model, params)
    match = matching_identities(model, prof, geom)
    comp, state = _steady(cfg, model, params, br, prof, geom)
    # both consumers only read the (immutable) steady state
    with ThreadPoolExecutor(max_workers=2) as pool:
        f_spectral = pool.submit(_spectrum, cfg, model, params, state, br, prof, geom)
        f_sim = pool.submit(run_stability_experiment, model, params, state, _sim_config(cfg),
                            br.jump)
        spectral, sim = f_spectral.result(), f_sim.result()
    zm = zero_mode_exclusion(model, params, params.xi, 1e-3, scheme="forward", n=cfg.grid.n,
                             orientation=cfg.layer.orientation)
    rate = sim.growth_rate_fit
    verdicts = dict(spectral.verdicts)
    verdicts["simulation"] = None if rate is None else ("stable" if rate < 0 else "unstable")
    matrix = agreement_matrix(verdicts)
    agree = all(all(row.values()) for row in matrix.values())
    res = {
        "metadata": metadata(cfg),
        "assumptions": rep.to_dict(),
        "v_star": br.v_star, "J_prime": br.J_prime_star,
        "x0": geom.x0, "x1": geom.x1,
        "matching": match.to_dict(),
        "steady": state.to_dict(),
        "kappa_star": spectral.asymptotic.kappa_star,
        "lambda_asymptotic": spectral.lambda_asymptotic,
        "lambda_evans": spectral.lambda_evans,
        "lambda_direct": spectral.lambda_direct,
        "sim_growth_rate": rate,
        "sim_mass_drift": sim.mass_drift_max,
        "case2_min_g": None if spectral.case2 is None else spectral.case2.min_abs_g,
        "case3": None if spectral.case3 is None else spectral.case3.to_dict(),
        "zero_mode": zm.to_dict(),
        "verdicts": verdicts,
        "verdict": spectral.asymptotic.verdict,
        "agreement_matrix": matrix,
        "agree": agree,
    }
    out.json("report", res)
    out.csv("report_eigenvalues", ["indicator", "re", "im"],
            [(name, complex(v).real, complex(v).imag) for name, v in
             (("asymptotic", spectral.lambda_asymptotic), ("evans", spectral.lambda_evans),
              ("direct", spectral.lambda_direct), ("simulation", rate)) if v is not None])
    out.csv("timeseries", list(sim.trace.columns), sim.trace.rows())
    out.figure(plotting.plot_steady, "steady", state.x_grid, state.u, comp.u)
    out.figure(plotting.plot_spectrum, "spectrum", spectral.direct.eigenvalues,
               spectral.direct.constrained, spectral.lambda_asymptotic, spectral.lambda_evans)
    out.figure(plotting.plot_simulation, "simulate", sim.trace.t, sim.trace.deviation_norm,
               sim.fit)
    return res, EXIT_OK if agree else EXIT_DISAGREE


COMMANDS = {"branch": cmd_branch, "layer": cmd_layer, "steady": cmd_steady,
            "spectrum": cmd_spectrum, "simulate": cmd_simulate, "report": cmd_report}

SUMMARY_KEYS = {
    "branch": ("branch",),
    "layer": ("geometry", "matching", "layer_position"),
    "steady": ("steady", "composite_error_inf"),
    "spectrum": ("kappa_star", "lambda_asymptotic", "lambda_direct", "lambda_evans",
                 "verdict", "case2_min_g", "case3"),
    "simulate": ("growth_rate_fit", "mass_drift_max", "final_layer_position", "converged"),
    "report": ("verdict", "verdicts", "agree", "lambda_asymptotic", "lambda_evans",
               "lambda_direct", "sim_growth_rate"),
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="pinlayer",
        description="Stationary transition layers of mass-conserving bistable "
                    "reaction-diffusion systems and their stability.")
    p.add_argument("--version", action="version", version=f"pinlayer {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    common.add_argument("--format", choices=("json", "csv", "both"),
                        help="output formats (overrides output.formats)")
    common.add_argument("--seed", type=int, help="perturbation seed (overrides simulate.seed)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a configuration value")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"branch": "root branches, J(v) and the balanced level v*",
             "layer": "front profile, layer geometry and matching identities",
             "steady": "Newton-refined stationary layer",
             "spectrum": "asymptotic, Evans and direct eigenvalues",
             "simulate": "conservative time integration and growth-rate fit",
             "report": "full pipeline with a consolidated stability verdict"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out
    try:
        overrides = list(args.overrides)
        if args.no_figures:
            overrides.append("output.figures=false")
        cfg = load(args.config, overrides)
        cfg = with_seed(with_output(cfg, args.out, args.format), args.seed)
        out_dir = Path(cfg.output.directory)
        res, code = COMMANDS[args.command](cfg, _Out(cfg))
    except PinlayerError as exc:
        return _fail(exc.to_dict(), out_dir)
    except (ValueError, ArithmeticError) as exc:
        return _fail({"kind": type(exc).__name__, "message": str(exc), "details": {}}, out_dir)
    summary = {k: res[k] for k in SUMMARY_KEYS[args.command] if k in res}
    sys.stdout.write(dumps({"command": args.command, "exit_code": code, **summary}))
    return code


def _fail(err, out_dir):
    record = {"error": err}
    if out_dir is not None:
        try:
            write_json(Path(out_dir) / "error.json", record)
        except OSError:
            pass
    sys.stderr.write(dumps(record))
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
