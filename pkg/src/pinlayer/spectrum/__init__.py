"""Stability of the stationary layer: direct eigenvalues, Evans function, asymptotics."""

from __future__ import annotations

from dataclasses import dataclass

from .asymptotic import (AsymptoticEigen, EndpointCoefficients, endpoint_coefficients,
                         front_energy_z, kappa_star)
from .cases import (Case2Report, Case3Report, ZeroModeReport, case2_sampling,
                    case3_nonvanishing, zero_mode_exclusion)
from .direct import (DirectSpectrum, LinearizedOperator, direct_spectrum, linearize,
                     polish_eigenvalue, richardson, symbol_eigenvalues)
from .evans import EvansFunction, EvansSample, evans_value, evans_zero_search

__all__ = [
    "AsymptoticEigen", "EndpointCoefficients", "kappa_star", "endpoint_coefficients",
    "front_energy_z", "Case2Report", "Case3Report", "ZeroModeReport", "case2_sampling",
    "case3_nonvanishing", "zero_mode_exclusion", "DirectSpectrum", "LinearizedOperator",
    "direct_spectrum", "linearize", "polish_eigenvalue", "richardson", "symbol_eigenvalues",
    "EvansFunction", "EvansSample", "evans_value", "evans_zero_search", "SpectralReport",
    "analyze",
]


def verdict_of(lam):
    if lam is None:
        return None
    return "stable" if complex(lam).real < 0 else "unstable"


@dataclass
class SpectralReport:
    asymptotic: AsymptoticEigen
    lambda_asymptotic: float
    lambda_direct: complex | None
    lambda_evans: complex | None
    direct: DirectSpectrum
    case2: Case2Report | None
    case3: Case3Report | None
    evans_error: str | None = None

    @property
    def verdicts(self):
        return {"asymptotic": self.asymptotic.verdict,
                "direct": verdict_of(self.lambda_direct),
                "evans": verdict_of(self.lambda_evans)}

    @property
    def verdict(self):
        return self.asymptotic.verdict

    def to_dict(self):
        return {"kappa_star": self.asymptotic.kappa_star,
                "lambda_asymptotic": self.lambda_asymptotic,
                "lambda_direct": self.lambda_direct, "lambda_evans": self.lambda_evans,
                "evans_error": self.evans_error, "verdict": self.verdict,
                "verdicts": self.verdicts, "asymptotic": self.asymptotic.to_dict(),
                "direct": self.direct.to_dict(),
                "case2_min_g": None if self.case2 is None else self.case2.min_abs_g,
                "case3": None if self.case3 is None else
                {"H1": self.case3.H1, "H2": self.case3.H2, "lambda_hat": self.case3.lambda_hat}}


def analyze(model, params, state, branch, profile, geom, omega_grid=(6.0, 12.0, 20.0),
            case3_mu=0.5, k=6, evans_kw=None) -> SpectralReport:
    """Run all spectral indicators on a converged steady state."""
    from ..errors import NoZeroFound

    asym = kappa_star(model, branch, profile, geom, params.D)
    lam_asym = asym.eigenvalue(params.epsilon)
    op = linearize(model, state)
    ds = direct_spectrum(op, k=k)
    lam_direct = ds.leading
    ev = EvansFunction(model, state, **(evans_kw or {}))
    err = None
    try:
        lam_evans = evans_zero_search(model, params, state, lam_asym, evans=ev)
    except NoZeroFound as exc:
        lam_evans, err = None, str(exc)
    omegas = [w for w in omega_grid if 5.0 * params.epsilon < params.epsilon * w < 0.5]
    c2 = case2_sampling(model, params, state, omegas, evans=ev) if omegas else None
    c3 = case3_nonvanishing(model, branch, geom, params, case3_mu, profile=profile)
    return SpectralReport(asymptotic=asym, lambda_asymptotic=lam_asym, lambda_direct=lam_direct,
                          lambda_evans=lam_evans, direct=ds, case2=c2, case3=c3, evans_error=err)
