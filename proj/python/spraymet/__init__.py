"""Numerical metrizability checks for sprays over Finsler structures.

Thin wrapper over the compiled core; see the README for the scenario
schema and the expression grammar.
"""

import json

from ._core import (
    FiberPoint,
    FinslerMetric,
    SampleConfig,
    SampleSet,
    Spray,
    SpraymetError,
    __version__,
    check_fm,
    check_gm,
    check_pm,
    check_regularity,
    first_integral_drift,
    geodesic_spray,
    h_tensor,
    hamel_residual,
    integrate_geodesic,
    make_gyroscopic_spray,
    make_projective_deformation,
    nabla_h_residual,
    recover_projective_factor,
    sample_points,
    validate_spray,
)
from ._core import run_scenario as _run_scenario
from ._core import selftest as _selftest


def run_scenario(scenario, seed=None, jobs=1, out_dir="."):
    """Run a scenario given as a dict or a JSON string.

    Returns (exit_code, report) with the report as a dict.
    """
    if not isinstance(scenario, str):
        scenario = json.dumps(scenario)
    code, report = _run_scenario(scenario, seed=seed, jobs=jobs, out_dir=out_dir)
    return code, json.loads(report)


def selftest(jobs=1):
    """Run the built-in fixture matrix; returns (exit_code, report dict)."""
    code, report = _selftest(jobs=jobs)
    return code, json.loads(report)


__all__ = [
    "FiberPoint",
    "FinslerMetric",
    "SampleConfig",
    "SampleSet",
    "Spray",
    "SpraymetError",
    "__version__",
    "check_fm",
    "check_gm",
    "check_pm",
    "check_regularity",
    "first_integral_drift",
    "geodesic_spray",
    "h_tensor",
    "hamel_residual",
    "integrate_geodesic",
    "make_gyroscopic_spray",
    "make_projective_deformation",
    "nabla_h_residual",
    "recover_projective_factor",
    "run_scenario",
    "sample_points",
    "selftest",
    "validate_spray",
]
