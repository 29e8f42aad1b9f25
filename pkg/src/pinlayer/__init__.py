"""Single-layer stationary solutions of mass-conserving bistable reaction-diffusion
systems u_t = eps^2 u_xx + f(u, v), v_t = D v_xx - f(u, v) on (0, 1) with Neumann
conditions, and their spectral stability."""

__version__ = "0.1.0"

from .branch import BranchData, J, alpha_bounds, find_v_star, roots_at  # noqa: E402
from .errors import PinlayerError  # noqa: E402
from .layer import (CompositeApprox, FrontProfile, LayerGeometry, composite,  # noqa: E402
                    front_profile, geometry, matching_identities)
from .model import BistableModel, ProblemParams, builtin_cubic, validate_assumptions  # noqa: E402
from .steady import SteadyState, refine, solve_steady  # noqa: E402

__all__ = [
    "BistableModel", "ProblemParams", "builtin_cubic", "validate_assumptions", "BranchData",
    "J", "alpha_bounds", "find_v_star", "roots_at", "PinlayerError", "CompositeApprox",
    "FrontProfile", "LayerGeometry", "composite", "front_profile", "geometry",
    "matching_identities", "SteadyState", "refine", "solve_steady",
]
