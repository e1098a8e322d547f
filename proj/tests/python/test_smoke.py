import math

import pytest

import spraymet


def test_version():
    assert spraymet.__version__ == "0.1.0"


def test_metric_and_point_round_trip():
    metric = spraymet.FinslerMetric.euclidean(2)
    p = spraymet.FiberPoint([0.0, 0.0], [3.0, 4.0])
    assert metric.finsler(p) == pytest.approx(5.0)
    assert metric.energy(p) == pytest.approx(25.0)
    g = metric.metric_tensor(p)
    assert g[0][0] == pytest.approx(1.0)
    assert g[0][1] == pytest.approx(0.0)


def test_fm_check_passes_for_geodesic_spray():
    metric = spraymet.FinslerMetric.conformal(2, "0.3*x1 - 0.2*x2")
    spray = spraymet.geodesic_spray(metric)
    samples = spraymet.sample_points(
        spraymet.SampleConfig(dimension=2, count=5, seed=3, shell_lo=0.7, shell_hi=1.5)
    )
    verdict = spraymet.check_fm(spray, metric, samples)
    assert verdict["verdict"] == "pass"
    assert verdict["max_residual"] <= 1e-7


def test_fm_check_fails_for_perturbed_spray():
    metric = spraymet.FinslerMetric.euclidean(2)
    spray = spraymet.Spray.from_expressions(["0.1*y1^2", "0"])
    samples = spraymet.sample_points(spraymet.SampleConfig(dimension=2, count=5, seed=3))
    verdict = spraymet.check_fm(spray, metric, samples)
    assert verdict["verdict"] == "fail"


def test_gyroscopic_recovery():
    metric = spraymet.FinslerMetric.euclidean(2)
    omega = [["0", "0.3"], ["-0.3", "0"]]
    spray = spraymet.make_gyroscopic_spray(metric, omega)
    samples = spraymet.sample_points(
        spraymet.SampleConfig(dimension=2, count=4, seed=6, shell_lo=0.7, shell_hi=1.5)
    )
    result = spraymet.check_gm(spray, metric, samples)
    assert result["angular_invariance"]["verdict"] == "pass"
    recovered = result["gyroscopic_form"]["recovered_omega"]
    assert recovered[0][1] == pytest.approx(0.3, abs=1e-8)


def test_trajectory_and_drift():
    spray = spraymet.Spray.flat(2)
    metric = spraymet.FinslerMetric.euclidean(2)
    tilde = spraymet.FinslerMetric.randers([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.0])
    start = spraymet.FiberPoint([0.0, 0.0], [1.0, 0.5])
    result = spraymet.first_integral_drift(spray, metric, tilde, start, t_end=0.5, step=1e-2)
    assert not result["trajectory"]["truncated"]
    assert result["series"]["max_drift"] <= 1e-10
    end = result["trajectory"]["states"][-1]
    assert end[0] == pytest.approx(0.5)
    assert end[1] == pytest.approx(0.25)


def test_h_tensor_annihilates_y():
    metric = spraymet.FinslerMetric.euclidean(2)
    tilde = spraymet.FinslerMetric.randers([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.0])
    p = spraymet.FiberPoint([0.0, 0.0], [1.0, 2.0])
    h = spraymet.h_tensor(metric, tilde, p)
    for i in range(2):
        assert h[i][0] * 1.0 + h[i][1] * 2.0 == pytest.approx(0.0, abs=1e-10)


def test_errors_surface_as_spraymet_error():
    with pytest.raises(spraymet.SpraymetError):
        spraymet.FinslerMetric.custom(2, "y1^2")
    with pytest.raises(spraymet.SpraymetError):
        spraymet.FiberPoint([0.0], [0.1])


def test_run_scenario_dict():
    scenario = {
        "version": 1,
        "dimension": 2,
        "samples": {"seed": 4, "count": 4, "fiber_shell": [0.7, 1.5]},
        "metrics": {"flat": {"family": "euclidean", "dimension": 2}},
        "sprays": {"geo": {"kind": "geodesic", "metric": "flat"}},
        "tasks": [{"task": "check-fm", "spray": "geo", "metric": "flat"}],
    }
    code, report = spraymet.run_scenario(scenario)
    assert code == 0
    assert report["summary"]["all_pass"] is True
    assert report["tasks"][0]["result"]["verdict"] == "pass"


def test_expression_norm_matches_math():
    metric = spraymet.FinslerMetric.custom(2, "sqrt(2*y1^2 + y2^2 + 0.5*y1*y2) + 0.1*y2")
    p = spraymet.FiberPoint([0.0, 0.0], [1.0, 1.0])
    assert metric.finsler(p) == pytest.approx(math.sqrt(3.5) + 0.1)
