"""Shared, cached pipelines for the cubic family f(u, v) = u - u^3 + s v."""

from dataclasses import dataclass
from functools import lru_cache

import pytest

from pinlayer.branch import BranchData, find_v_star
from pinlayer.layer import (CompositeApprox, FrontProfile, LayerGeometry, composite,
                            front_profile, geometry)
from pinlayer.model import BistableModel, ProblemParams, builtin_cubic
from pinlayer.steady import SteadyState, refine


@dataclass(frozen=True)
class Pipeline:
    model: BistableModel
    params: ProblemParams
    branch: BranchData
    profile: FrontProfile
    geom: LayerGeometry
    comp: CompositeApprox
    state: SteadyState


@lru_cache(maxsize=None)
def build(s, eps=0.02, xi=0.0, n=2048, D=1.0, orientation="jump_up"):
    model = builtin_cubic(s)
    params = ProblemParams(eps, D, xi)
    br = find_v_star(model)
    prof = front_profile(model, br)
    geom = geometry(model, br, params, orientation, profile=prof)
    comp = composite(model, br, geom, prof, params, n)
    state = refine(model, params, comp, orientation=orientation)
    return Pipeline(model, params, br, prof, geom, comp, state)


@lru_cache(maxsize=None)
def cubic(s):
    model = builtin_cubic(s)
    br = find_v_star(model)
    return model, br, front_profile(model, br)


@pytest.fixture(scope="session")
def pipeline():
    return build


@pytest.fixture(scope="session")
def stable():
    return build(0.1)


@pytest.fixture(scope="session")
def unstable():
    return build(-0.5)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: tuple(int(p) for p in k.split("."))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
