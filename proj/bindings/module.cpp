#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "spraymet/connection.hpp"
#include "spraymet/errors.hpp"
#include "spraymet/finsler.hpp"
#include "spraymet/first_integrals.hpp"
#include "spraymet/metrizability.hpp"
#include "spraymet/scenario.hpp"
#include "spraymet/version.hpp"

namespace py = pybind11;

namespace {

using namespace spraymet;

std::vector<std::vector<double>> tensor_matrix(const TensorValue& value) {
    int n = value.dimension();
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = value.at(i, j);
    return out;
}

py::dict report_dict(const ResidualReport& report) {
    py::dict out;
    out["label"] = report.label;
    out["tolerance"] = report.tolerance;
    out["max_residual"] = report.max_residual;
    out["mean_residual"] = report.mean_residual;
    out["worst_point"] = report.worst_point;
    out["pass"] = report.pass;
    out["per_point"] = report.per_point;
    return out;
}

py::dict verdict_dict(const MetrizabilityVerdict& verdict) {
    py::dict out;
    out["problem"] = problem_name(verdict.problem);
    out["verdict"] = status_name(verdict.status);
    out["pass"] = verdict.pass();
    out["max_residual"] = verdict.max_residual;
    out["mean_residual"] = verdict.mean_residual;
    out["worst_point"] = verdict.worst_point;
    out["per_point"] = verdict.per_point;
    out["cross_max"] = verdict.cross_max;
    if (!verdict.recovered_p.empty())
        out["recovered_p"] = verdict.recovered_p;
    if (!verdict.recovered_omega.empty()) {
        out["recovered_omega"] = verdict.recovered_omega;
        out["fiber_spread_max"] = verdict.fiber_spread_max;
        if (verdict.fiber_derivative_max >= 0.0)
            out["fiber_derivative_max"] = verdict.fiber_derivative_max;
    }
    if (verdict.form_gap_max > 0.0)
        out["form_gap_max"] = verdict.form_gap_max;
    if (!verdict.warnings.empty())
        out["warnings"] = verdict.warnings;
    return out;
}

py::dict trajectory_dict(const Trajectory& trajectory) {
    py::dict out;
    out["times"] = trajectory.times;
    std::vector<std::vector<double>> states;
    states.reserve(trajectory.states.size());
    for (const FiberPoint& p : trajectory.states)
        states.push_back(p.coords());
    out["states"] = states;
    out["method"] = trajectory.method;
    out["step"] = trajectory.step;
    out["endpoint_error"] = trajectory.endpoint_error;
    out["truncated"] = trajectory.truncated;
    return out;
}

py::dict series_dict(const FirstIntegralSeries& series) {
    py::dict out;
    out["names"] = series.names;
    out["values"] = series.values;
    out["drift"] = series.drift;
    out["max_drift"] = series.max_drift;
    out["max_h_y"] = series.max_h_y;
    out["complex_spectrum"] = series.complex_spectrum;
    out["crossing_detected"] = series.crossing_detected;
    out["warnings"] = series.warnings;
    return out;
}

Tolerances make_tolerances(double pass_below, double fail_above) {
    Tolerances tolerances;
    tolerances.pass = pass_below;
    tolerances.fail = fail_above;
    return tolerances;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Numerical metrizability checks for sprays over Finsler structures";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "SpraymetError");

    py::class_<FiberPoint>(m, "FiberPoint")
        .def(py::init<std::vector<double>, std::vector<double>, double>(), py::arg("x"), py::arg("y"),
             py::arg("y_min") = kDefaultYMin)
        .def_property_readonly("x", &FiberPoint::x)
        .def_property_readonly("y", &FiberPoint::y)
        .def_property_readonly("dimension", &FiberPoint::dimension)
        .def("coords", &FiberPoint::coords)
        .def("fiber_norm", &FiberPoint::fiber_norm)
        .def("__repr__", &FiberPoint::to_string);

    py::class_<SampleConfig>(m, "SampleConfig")
        .def(py::init([](int dimension, int count, std::uint64_t seed, double shell_lo, double shell_hi,
                         double y_min, std::optional<std::vector<std::array<double, 2>>> base_box) {
                 SampleConfig config;
                 config.seed = seed;
                 config.count = count;
                 if (base_box)
                     config.base_box = *base_box;
                 else
                     config.base_box.assign(static_cast<std::size_t>(dimension), {-1.0, 1.0});
                 config.shell_lo = shell_lo;
                 config.shell_hi = shell_hi;
                 config.y_min = y_min;
                 return config;
             }),
             py::arg("dimension"), py::arg("count"), py::arg("seed") = 0, py::arg("shell_lo") = 0.5,
             py::arg("shell_hi") = 2.0, py::arg("y_min") = kDefaultYMin,
             py::arg("base_box") = std::nullopt)
        .def_readwrite("seed", &SampleConfig::seed)
        .def_readwrite("count", &SampleConfig::count);

    py::class_<SampleSet>(m, "SampleSet")
        .def_property_readonly("points", [](const SampleSet& s) { return s.points; });

    m.def("sample_points", &sample_points, py::arg("config"));

    py::class_<FinslerMetric>(m, "FinslerMetric")
        .def_static("euclidean", &FinslerMetric::euclidean, py::arg("dimension"))
        .def_static("riemannian", &FinslerMetric::riemannian, py::arg("dimension"), py::arg("a"))
        .def_static("randers", &FinslerMetric::randers, py::arg("a"), py::arg("b"))
        .def_static("conformal", &FinslerMetric::conformal, py::arg("dimension"), py::arg("phi"))
        .def_static("custom", &FinslerMetric::custom, py::arg("dimension"), py::arg("f"))
        .def_property_readonly("dimension", &FinslerMetric::dimension)
        .def("describe", &FinslerMetric::describe)
        .def("finsler",
             [](const FinslerMetric& metric, const FiberPoint& p) {
                 return eval_value(metric.finsler_function(), p.coords());
             })
        .def("energy",
             [](const FinslerMetric& metric, const FiberPoint& p) {
                 return eval_value(metric.energy(), p.coords());
             })
        .def("metric_tensor",
             [](const FinslerMetric& metric, const FiberPoint& p) {
                 return tensor_matrix(metric_tensor(metric, p));
             })
        .def("angular_metric", [](const FinslerMetric& metric, const FiberPoint& p) {
            return tensor_matrix(angular_metric(metric, p));
        });

    py::class_<Spray>(m, "Spray")
        .def_static("flat", &Spray::flat, py::arg("dimension"))
        .def_static("from_expressions", &Spray::from_expressions, py::arg("coefficients"))
        .def_property_readonly("dimension", &Spray::dimension)
        .def("coefficients_at", &Spray::coefficients_at, py::arg("p"));

    m.def("geodesic_spray", &geodesic_spray, py::arg("metric"));
    m.def("make_projective_deformation",
          py::overload_cast<const Spray&, const std::string&>(&make_projective_deformation),
          py::arg("base"), py::arg("factor"));
    m.def("make_gyroscopic_spray", &make_gyroscopic_spray, py::arg("metric"), py::arg("omega"));

    m.def(
        "validate_spray",
        [](const Spray& spray, const SampleSet& samples, double tolerance, int jobs) {
            return report_dict(validate_spray(spray, samples, tolerance, jobs));
        },
        py::arg("spray"), py::arg("samples"), py::arg("tolerance") = 1e-7, py::arg("jobs") = 1);
    m.def(
        "check_regularity",
        [](const FinslerMetric& metric, const SampleSet& samples, int jobs) {
            RegularityReport report = check_regularity(metric, samples, jobs);
            py::dict out;
            out["failures"] = report.failures;
            out["pass"] = report.pass;
            return out;
        },
        py::arg("metric"), py::arg("samples"), py::arg("jobs") = 1);

    m.def(
        "check_fm",
        [](const Spray& spray, const FinslerMetric& metric, const SampleSet& samples, double pass_below,
           double fail_above, int jobs) {
            return verdict_dict(
                fm_residual(spray, metric, samples, make_tolerances(pass_below, fail_above), jobs));
        },
        py::arg("spray"), py::arg("metric"), py::arg("samples"), py::arg("pass_below") = 1e-7,
        py::arg("fail_above") = 1e-3, py::arg("jobs") = 1);
    m.def(
        "check_pm",
        [](const Spray& spray, const FinslerMetric& metric, const SampleSet& samples, double pass_below,
           double fail_above, int jobs) {
            return verdict_dict(pm_levicivita_residual(spray, metric, samples,
                                                       make_tolerances(pass_below, fail_above), jobs));
        },
        py::arg("spray"), py::arg("metric"), py::arg("samples"), py::arg("pass_below") = 1e-7,
        py::arg("fail_above") = 1e-3, py::arg("jobs") = 1);
    m.def(
        "check_gm",
        [](const Spray& spray, const FinslerMetric& metric, const SampleSet& samples, double pass_below,
           double fail_above, int jobs) {
            Tolerances tolerances = make_tolerances(pass_below, fail_above);
            py::dict out;
            out["angular_invariance"] =
                verdict_dict(angular_invariance_residual(spray, metric, samples, tolerances, jobs));
            out["gyroscopic_form"] =
                verdict_dict(recover_gyroscopic_form(spray, metric, samples, tolerances, jobs));
            return out;
        },
        py::arg("spray"), py::arg("metric"), py::arg("samples"), py::arg("pass_below") = 1e-7,
        py::arg("fail_above") = 1e-3, py::arg("jobs") = 1);

    m.def(
        "hamel_residual",
        [](const Spray& spray, const FinslerMetric& metric, const FiberPoint& p) {
            TensorValue value = hamel_residual(spray, metric, p);
            std::vector<double> out(static_cast<std::size_t>(value.dimension()));
            for (int i = 0; i < value.dimension(); ++i)
                out[static_cast<std::size_t>(i)] = value.at(i);
            return out;
        },
        py::arg("spray"), py::arg("metric"), py::arg("p"));
    m.def("recover_projective_factor", &recover_projective_factor, py::arg("spray"), py::arg("metric"),
          py::arg("p"));

    m.def(
        "h_tensor",
        [](const FinslerMetric& metric, const FinslerMetric& metric_tilde, const FiberPoint& p) {
            return tensor_matrix(h_tensor(metric, metric_tilde, p));
        },
        py::arg("metric"), py::arg("metric_tilde"), py::arg("p"));
    m.def(
        "nabla_h_residual",
        [](const Spray& spray, const FinslerMetric& metric, const FinslerMetric& metric_tilde,
           const SampleSet& samples, double tolerance, int jobs) {
            return report_dict(nabla_h_residual(spray, metric, metric_tilde, samples, tolerance, jobs));
        },
        py::arg("spray"), py::arg("metric"), py::arg("metric_tilde"), py::arg("samples"),
        py::arg("tolerance") = 1e-7, py::arg("jobs") = 1);

    m.def(
        "integrate_geodesic",
        [](const Spray& spray, const FiberPoint& start, double t_end, double step) {
            StepControl control;
            control.step = step;
            return trajectory_dict(integrate_geodesic(spray, start, t_end, control));
        },
        py::arg("spray"), py::arg("start"), py::arg("t_end"), py::arg("step") = 1e-3);
    m.def(
        "first_integral_drift",
        [](const Spray& spray, const FinslerMetric& metric, const FinslerMetric& metric_tilde,
           const FiberPoint& start, double t_end, double step) {
            StepControl control;
            control.step = step;
            Trajectory trajectory = integrate_geodesic(spray, start, t_end, control);
            py::dict out;
            out["trajectory"] = trajectory_dict(trajectory);
            out["series"] = series_dict(first_integral_drift(spray, metric, metric_tilde, trajectory));
            return out;
        },
        py::arg("spray"), py::arg("metric"), py::arg("metric_tilde"), py::arg("start"),
        py::arg("t_end") = 1.0, py::arg("step") = 1e-3);

    m.def(
        "run_scenario",
        [](const std::string& text, std::optional<std::uint64_t> seed, int jobs,
           const std::string& out_dir) {
            RunOverrides overrides;
            overrides.seed = seed;
            overrides.jobs = jobs;
            overrides.out_dir = out_dir;
            RunResult result = run_scenario(nlohmann::ordered_json::parse(text), overrides);
            return py::make_tuple(result.exit_code, result.report.dump(2));
        },
        py::arg("scenario_json"), py::arg("seed") = std::nullopt, py::arg("jobs") = 1,
        py::arg("out_dir") = ".");
    m.def(
        "selftest",
        [](int jobs) {
            RunResult result = selftest(jobs);
            return py::make_tuple(result.exit_code, result.report.dump(2));
        },
        py::arg("jobs") = 1);
}
