"""Strict TOML run configuration.

Sections ``model`` and ``params`` are required; the others are optional and
filled with defaults.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import re
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .layer import ORIENTATIONS
from .model import BistableModel, ProblemParams, builtin_cubic

FAMILIES = ("cubic",)
FORMATS = ("json", "csv", "both")


@dataclass(frozen=True)
class ModelSection:
    family: str = "cubic"
    s: float | None = None


@dataclass(frozen=True)
class ParamsSection:
    epsilon: float | None = None
    D: float | None = None
    xi: float | None = None


@dataclass(frozen=True)
class LayerSection:
    alpha: float | None = None
    orientation: str = "jump_up"


@dataclass(frozen=True)
class GridSection:
    n: int = 2048
    dt: float = 0.02
    t_end: float = 600.0
    theta: float = 0.5


@dataclass(frozen=True)
class SpectrumSection:
    lambda_max: float = 1.0
    contour_samples: int = 0
    k: int = 6
    omega: tuple = (6.0, 12.0, 20.0)
    case3_mu: float = 0.5
    integrator: str = "RK45"


@dataclass(frozen=True)
class SimulateSection:
    perturbation_amplitude: float = 1e-4
    n_modes: int = 8
    seed: int = 0


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: str = "json"
    figures: bool = True


SECTIONS = {
    "model": ModelSection, "params": ParamsSection, "layer": LayerSection,
    "grid": GridSection, "spectrum": SpectrumSection, "simulate": SimulateSection,
    "output": OutputSection,
}
REQUIRED = {"model": ("family", "s"), "params": ("epsilon", "D", "xi")}


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    params: ParamsSection
    layer: LayerSection = field(default_factory=LayerSection)
    grid: GridSection = field(default_factory=GridSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self):
        d = asdict(self)
        d["spectrum"]["omega"] = list(d["spectrum"]["omega"])
        return d

    def build_model(self) -> BistableModel:
        return builtin_cubic(self.model.s)

    def problem(self) -> ProblemParams:
        return ProblemParams(self.params.epsilon, self.params.D, self.params.xi)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_value(section, key, value, default_type):
    where = f"{section}.{key}"
    if default_type is bool:
        if not isinstance(value, bool):
            return f"{where} must be a boolean"
    elif default_type is int:
        if not isinstance(value, int) or isinstance(value, bool):
            return f"{where} must be an integer"
    elif default_type is float:
        if not _is_number(value):
            return f"{where} must be a number"
    elif default_type is str:
        if not isinstance(value, str):
            return f"{where} must be a string"
    elif default_type is tuple:
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            return f"{where} must be a list of numbers"
    return None


_TYPES = {
    "model": {"family": str, "s": float},
    "params": {"epsilon": float, "D": float, "xi": float},
    "layer": {"alpha": float, "orientation": str},
    "grid": {"n": int, "dt": float, "t_end": float, "theta": float},
    "spectrum": {"lambda_max": float, "contour_samples": int, "k": int, "omega": tuple,
                 "case3_mu": float, "integrator": str},
    "simulate": {"perturbation_amplitude": float, "n_modes": int, "seed": int},
    "output": {"directory": str, "formats": str, "figures": bool},
}


def from_dict(data: dict) -> RunConfig:
    """Validate a parsed mapping and fill defaults."""
    unknown, problems = [], []
    for sec, body in data.items():
        if sec not in SECTIONS:
            unknown.append(sec)
            continue
        if not isinstance(body, dict):
            problems.append(f"{sec} must be a table")
            continue
        for key, value in body.items():
            if key not in _TYPES[sec]:
                unknown.append(f"{sec}.{key}")
                continue
            if value is None and getattr(SECTIONS[sec](), key) is None:
                # optional keys may be given as None from Python (to_dict output)
                continue
            msg = _check_value(sec, key, value, _TYPES[sec][key])
            if msg:
                problems.append(msg)
    for sec, keys in REQUIRED.items():
        body = data.get(sec)
        if not isinstance(body, dict):
            problems.append(f"missing section [{sec}]")
            continue
        for key in keys:
            if key not in body:
                problems.append(f"missing key {sec}.{key}")
    if unknown:
        raise ValidationError("unknown configuration keys: " + ", ".join(sorted(unknown)),
                              keys=sorted(unknown))
    if problems:
        raise ValidationError("; ".join(problems), keys=problems)

    built = {}
    for sec, cls in SECTIONS.items():
        body = dict(data.get(sec, {}))
        for key, typ in _TYPES[sec].items():
            if body.get(key) is not None and typ is float:
                body[key] = float(body[key])
            if key in body and typ is tuple:
                body[key] = tuple(float(v) for v in body[key])
        built[sec] = cls(**body)
    cfg = RunConfig(**built)
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: RunConfig):
    bad = []
    if cfg.model.family not in FAMILIES:
        bad.append(f"model.family must be one of {FAMILIES}")
    if cfg.params.epsilon <= 0 or cfg.params.D <= 0:
        bad.append("params.epsilon and params.D must be positive")
    if cfg.layer.orientation not in ORIENTATIONS:
        bad.append(f"layer.orientation must be one of {ORIENTATIONS}")
    if cfg.grid.n < 256:
        bad.append("grid.n must be at least 256")
    if cfg.grid.dt <= 0 or cfg.grid.t_end <= 0:
        bad.append("grid.dt and grid.t_end must be positive")
    if not 0.5 <= cfg.grid.theta <= 1.0:
        bad.append("grid.theta must lie in [0.5, 1]")
    if cfg.spectrum.lambda_max <= 0 or cfg.spectrum.k < 2 or cfg.spectrum.contour_samples < 0:
        bad.append("spectrum.lambda_max > 0, spectrum.k >= 2, spectrum.contour_samples >= 0")
    if cfg.spectrum.integrator not in ("RK45", "DOP853"):
        bad.append("spectrum.integrator must be RK45 or DOP853")
    if cfg.output.formats not in FORMATS:
        bad.append(f"output.formats must be one of {FORMATS}")
    if cfg.simulate.perturbation_amplitude < 0:
        bad.append("simulate.perturbation_amplitude must be non-negative")
    if bad:
        raise ValidationError("; ".join(bad), keys=bad)


_LOC = re.compile(r"line (\d+), column (\d+)")


def _loads(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = _LOC.search(str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ParseError(f"{source}: {exc}", line=line, column=col) from exc


def _read(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}", line=None, column=None) from exc
    return _loads(text, str(path))


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    return from_dict(_loads(text, source))


def parse_config(path) -> RunConfig:
    return from_dict(_read(path))


def apply_overrides(data: dict, items) -> dict:
    """Apply ``section.key=value`` overrides; values use TOML syntax, bare words are strings."""
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    for item in items or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"override must look like section.key=value: {item!r}",
                                  keys=[item])
        lhs, rhs = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        try:
            value = tomllib.loads(f"v = {rhs.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = rhs.strip()
        out.setdefault(sec, {})[key] = value
    return out


def load(path=None, overrides=None) -> RunConfig:
    """Config from an optional file plus overrides."""
    data = _read(path) if path is not None else {}
    return from_dict(apply_overrides(data, overrides))


def with_output(cfg: RunConfig, directory=None, formats=None) -> RunConfig:
    out = cfg.output
    if directory is not None:
        out = replace(out, directory=str(directory))
    if formats is not None:
        out = replace(out, formats=formats)
    return replace(cfg, output=out)


def with_seed(cfg: RunConfig, seed=None) -> RunConfig:
    if seed is None:
        return cfg
    return replace(cfg, simulate=replace(cfg.simulate, seed=int(seed)))


__all__ = ["RunConfig", "parse_config", "parse_text", "from_dict", "load", "apply_overrides",
           "with_output", "with_seed"]
