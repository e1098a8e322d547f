#include "spraymet/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include "spraymet/expr.hpp"
#include "spraymet/first_integrals.hpp"
#include "spraymet/version.hpp"

namespace spraymet {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + " " + what);
}

const ordered_json& need(const ordered_json& node, const std::string& key, const std::string& path) {
    if (!node.is_object())
        fail(path, "must be an object");
    auto it = node.find(key);
    if (it == node.end())
        fail(path, "is missing \"" + key + "\"");
    return *it;
}

int as_int(const ordered_json& node, const std::string& path) {
    if (!node.is_number_integer())
        fail(path, "must be an integer");
    return node.get<int>();
}

double as_double(const ordered_json& node, const std::string& path) {
    if (!node.is_number())
        fail(path, "must be a number");
    return node.get<double>();
}

std::string as_string(const ordered_json& node, const std::string& path) {
    if (!node.is_string())
        fail(path, "must be a string");
    return node.get<std::string>();
}

// Expressions may be written as JSON strings or plain numbers.
std::string as_expression(const ordered_json& node, const std::string& path) {
    if (node.is_string())
        return node.get<std::string>();
    if (node.is_number())
        return format_double(node.get<double>());
    fail(path, "must be an expression string or a number");
}

Tolerances parse_tolerances(const ordered_json& scenario) {
    Tolerances tolerances;
    auto it = scenario.find("tolerances");
    if (it == scenario.end())
        return tolerances;
    const ordered_json& node = *it;
    if (!node.is_object())
        fail("scenario.tolerances", "must be an object");
    if (auto p = node.find("pass"); p != node.end())
        tolerances.pass = as_double(*p, "scenario.tolerances.pass");
    if (auto f = node.find("fail"); f != node.end())
        tolerances.fail = as_double(*f, "scenario.tolerances.fail");
    if (!(tolerances.pass > 0.0) || !(tolerances.fail > tolerances.pass))
        fail("scenario.tolerances", "needs 0 < pass < fail");
    return tolerances;
}

SampleConfig parse_samples(const ordered_json& scenario, int dimension) {
    const ordered_json& node = need(scenario, "samples", "scenario");
    SampleConfig config;
    config.base_box.assign(static_cast<std::size_t>(dimension), {-1.0, 1.0});
    if (auto it = node.find("seed"); it != node.end()) {
        if (!it->is_number_unsigned() && !it->is_number_integer())
            fail("scenario.samples.seed", "must be a non-negative integer");
        config.seed = it->get<std::uint64_t>();
    }
    config.count = as_int(need(node, "count", "scenario.samples"), "scenario.samples.count");
    if (auto it = node.find("base_box"); it != node.end()) {
        if (!it->is_array() || it->size() != static_cast<std::size_t>(dimension))
            fail("scenario.samples.base_box", "must be an array of " + std::to_string(dimension) +
                                                  " [lo, hi] pairs");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const ordered_json& pair = (*it)[i];
            std::string path = "scenario.samples.base_box[" + std::to_string(i) + "]";
            if (!pair.is_array() || pair.size() != 2)
                fail(path, "must be a [lo, hi] pair");
            config.base_box[i] = {as_double(pair[0], path), as_double(pair[1], path)};
        }
    }
    if (auto it = node.find("fiber_shell"); it != node.end()) {
        if (!it->is_array() || it->size() != 2)
            fail("scenario.samples.fiber_shell", "must be a [lo, hi] pair");
        config.shell_lo = as_double((*it)[0], "scenario.samples.fiber_shell");
        config.shell_hi = as_double((*it)[1], "scenario.samples.fiber_shell");
    }
    if (auto it = node.find("y_min"); it != node.end())
        config.y_min = as_double(*it, "scenario.samples.y_min");
    return config;
}

FinslerMetric parse_metric(const std::string& name, const ordered_json& node) {
    std::string path = "scenario.metrics." + name;
    std::string family = as_string(need(node, "family", path), path + ".family");
    int dimension = node.contains("dimension") ? as_int(node["dimension"], path + ".dimension") : 0;

    auto matrix_of_expressions = [&](const ordered_json& a, const std::string& apath) {
        if (!a.is_array())
            fail(apath, "must be an array of rows");
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const ordered_json& row = a[i];
            std::string rpath = apath + "[" + std::to_string(i) + "]";
            if (!row.is_array())
                fail(rpath, "must be an array");
            std::vector<std::string> out;
            for (std::size_t j = 0; j < row.size(); ++j)
                out.push_back(as_expression(row[j], rpath + "[" + std::to_string(j) + "]"));
            rows.push_back(std::move(out));
        }
        return rows;
    };

    if (family == "euclidean")
        return FinslerMetric::euclidean(dimension);
    if (family == "riemannian")
        return FinslerMetric::riemannian(dimension, matrix_of_expressions(need(node, "a", path), path + ".a"));
    if (family == "randers") {
        const ordered_json& a = need(node, "a", path);
        if (!a.is_array())
            fail(path + ".a", "must be an array of rows");
        std::vector<std::vector<double>> am;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const ordered_json& row = a[i];
            std::string rpath = path + ".a[" + std::to_string(i) + "]";
            if (!row.is_array())
                fail(rpath, "must be an array of numbers");
            std::vector<double> out;
            for (std::size_t j = 0; j < row.size(); ++j)
                out.push_back(as_double(row[j], rpath + "[" + std::to_string(j) + "]"));
            am.push_back(std::move(out));
        }
        const ordered_json& b = need(node, "b", path);
        if (!b.is_array())
            fail(path + ".b", "must be an array of numbers");
        std::vector<double> bv;
        for (std::size_t i = 0; i < b.size(); ++i)
            bv.push_back(as_double(b[i], path + ".b[" + std::to_string(i) + "]"));
        return FinslerMetric::randers(am, bv);
    }
    if (family == "conformal")
        return FinslerMetric::conformal(dimension,
                                        as_expression(need(node, "phi", path), path + ".phi"));
    if (family == "custom")
        return FinslerMetric::custom(dimension, as_expression(need(node, "f", path), path + ".f"));
    fail(path + ".family", "must be one of euclidean, riemannian, randers, conformal, custom (got \"" +
                               family + "\")");
}

ordered_json residual_report_json(const ResidualReport& report) {
    ordered_json out;
    out["label"] = report.label;
    out["tolerance"] = report.tolerance;
    out["max_residual"] = report.max_residual;
    out["mean_residual"] = report.mean_residual;
    out["worst_point"] = report.worst_point;
    out["pass"] = report.pass;
    out["per_point"] = report.per_point;
    return out;
}

ordered_json verdict_json(const MetrizabilityVerdict& verdict) {
    ordered_json out;
    out["problem"] = problem_name(verdict.problem);
    out["tolerance"] = {{"pass", verdict.tolerances.pass}, {"fail", verdict.tolerances.fail}};
    out["max_residual"] = verdict.max_residual;
    out["mean_residual"] = verdict.mean_residual;
    out["worst_point"] = verdict.worst_point;
    out["verdict"] = status_name(verdict.status);
    out["pass"] = verdict.pass();
    out["per_point"] = verdict.per_point;
    switch (verdict.problem) {
    case Problem::FM:
        out["cross_max_el_form"] = verdict.cross_max;
        break;
    case Problem::PM:
        out["cross_max_contracted"] = verdict.cross_max;
        break;
    case Problem::GM:
        if (!verdict.recovered_omega.empty()) {
            out["cross_max_interior_product"] = verdict.cross_max;
            out["fiber_spread_max"] = verdict.fiber_spread_max;
            if (verdict.fiber_derivative_max >= 0.0)
                out["fiber_derivative_max"] = verdict.fiber_derivative_max;
        } else {
            out["form_gap_max"] = verdict.form_gap_max;
        }
        break;
    }
    if (!verdict.recovered_p.empty())
        out["recovered"] = ordered_json{{"P", verdict.recovered_p}};
    if (!verdict.recovered_omega.empty())
        out["recovered"] = ordered_json{{"omega", verdict.recovered_omega}};
    if (!verdict.warnings.empty())
        out["warnings"] = verdict.warnings;
    return out;
}

std::string timestamp_utc() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

struct Definitions {
    int dimension = 0;
    Tolerances tolerances;
    SampleSet samples;
    std::map<std::string, FinslerMetric> metrics;
    std::map<std::string, Spray> sprays;
};

const FinslerMetric& resolve_metric(const Definitions& defs, const std::string& name,
                                    const std::string& path) {
    auto it = defs.metrics.find(name);
    if (it == defs.metrics.end())
        fail(path, "references metric \"" + name + "\" which is not defined");
    return it->second;
}

const Spray& resolve_spray(const Definitions& defs, const std::string& name, const std::string& path) {
    auto it = defs.sprays.find(name);
    if (it == defs.sprays.end())
        fail(path, "references spray \"" + name + "\" which is not defined");
    return it->second;
}

Spray parse_spray(const Definitions& defs, const std::string& name, const ordered_json& node) {
    std::string path = "scenario.sprays." + name;
    std::string kind = as_string(need(node, "kind", path), path + ".kind");
    if (kind == "flat")
        return Spray::flat(defs.dimension);
    if (kind == "geodesic")
        return geodesic_spray(
            resolve_metric(defs, as_string(need(node, "metric", path), path + ".metric"), path));
    if (kind == "explicit") {
        const ordered_json& c = need(node, "coefficients", path);
        if (!c.is_array())
            fail(path + ".coefficients", "must be an array of expressions");
        std::vector<std::string> sources;
        for (std::size_t i = 0; i < c.size(); ++i)
            sources.push_back(as_expression(c[i], path + ".coefficients[" + std::to_string(i) + "]"));
        return Spray::from_expressions(sources);
    }
    if (kind == "projective") {
        const Spray& base = resolve_spray(defs, as_string(need(node, "base", path), path + ".base"), path);
        return make_projective_deformation(base,
                                           as_expression(need(node, "factor", path), path + ".factor"));
    }
    if (kind == "gyroscopic") {
        const FinslerMetric& metric =
            resolve_metric(defs, as_string(need(node, "metric", path), path + ".metric"), path);
        const ordered_json& w = need(node, "omega", path);
        if (!w.is_array())
            fail(path + ".omega", "must be a matrix of expressions");
        std::vector<std::vector<std::string>> omega;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const ordered_json& row = w[i];
            std::string rpath = path + ".omega[" + std::to_string(i) + "]";
            if (!row.is_array())
                fail(rpath, "must be an array");
            std::vector<std::string> out;
            for (std::size_t j = 0; j < row.size(); ++j)
                out.push_back(as_expression(row[j], rpath + "[" + std::to_string(j) + "]"));
            omega.push_back(std::move(out));
        }
        return make_gyroscopic_spray(metric, omega);
    }
    fail(path + ".kind",
         "must be one of flat, geodesic, explicit, projective, gyroscopic (got \"" + kind + "\")");
}

struct TaskOutcome {
    ordered_json result;
    bool pass = false;
};

TaskOutcome run_validate(const Definitions& defs, const ordered_json& task, const std::string& path,
                         int jobs) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    TaskOutcome outcome;
    ResidualReport homogeneity = validate_spray(spray, defs.samples, defs.tolerances.pass, jobs);
    outcome.result["homogeneity"] = residual_report_json(homogeneity);
    outcome.pass = homogeneity.pass;
    if (task.contains("metric")) {
        const FinslerMetric& metric =
            resolve_metric(defs, as_string(task["metric"], path + ".metric"), path);
        RegularityReport reg = check_regularity(metric, defs.samples, jobs);
        outcome.result["regularity"] =
            ordered_json{{"failures", reg.failures}, {"pass", reg.pass}};
        outcome.pass = outcome.pass && reg.pass;
    }
    return outcome;
}

TaskOutcome run_check_fm(const Definitions& defs, const ordered_json& task, const std::string& path,
                         int jobs) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    MetrizabilityVerdict verdict = fm_residual(spray, metric, defs.samples, defs.tolerances, jobs);
    return {verdict_json(verdict), verdict.pass()};
}

TaskOutcome run_check_pm(const Definitions& defs, const ordered_json& task, const std::string& path,
                         int jobs) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    MetrizabilityVerdict verdict = pm_levicivita_residual(spray, metric, defs.samples, defs.tolerances, jobs);
    return {verdict_json(verdict), verdict.pass()};
}

TaskOutcome run_check_gm(const Definitions& defs, const ordered_json& task, const std::string& path,
                         int jobs) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    MetrizabilityVerdict angular =
        angular_invariance_residual(spray, metric, defs.samples, defs.tolerances, jobs);
    MetrizabilityVerdict gyro = recover_gyroscopic_form(spray, metric, defs.samples, defs.tolerances, jobs);
    TaskOutcome outcome;
    outcome.result["angular_invariance"] = verdict_json(angular);
    outcome.result["gyroscopic_form"] = verdict_json(gyro);
    outcome.pass = angular.pass() && gyro.pass();
    return outcome;
}

TaskOutcome run_hamel(const Definitions& defs, const ordered_json& task, const std::string& path,
                      int jobs) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    ResidualReport report;
    report.label = "hamel";
    report.tolerance = defs.tolerances.pass;
    report.per_point.resize(defs.samples.points.size());
    parallel_for(static_cast<int>(defs.samples.points.size()), jobs, [&](int k) {
        report.per_point[static_cast<std::size_t>(k)] =
            hamel_residual(spray, metric, defs.samples.points[static_cast<std::size_t>(k)]).max_abs();
    });
    report.worst_point = -1;
    for (std::size_t k = 0; k < report.per_point.size(); ++k) {
        double r = report.per_point[k];
        report.mean_residual += r;
        if (report.worst_point < 0 || r > report.max_residual) {
            report.max_residual = r;
            report.worst_point = static_cast<int>(k);
        }
    }
    if (!report.per_point.empty())
        report.mean_residual /= static_cast<double>(report.per_point.size());
    report.pass = report.max_residual <= report.tolerance;
    return {residual_report_json(report), report.pass};
}

std::string export_path(const RunOverrides& overrides, const std::string& prefix, std::size_t index) {
    std::filesystem::create_directories(overrides.out_dir);
    return (std::filesystem::path(overrides.out_dir) / (prefix + "_" + std::to_string(index) + ".csv"))
        .string();
}

TaskOutcome run_first_integrals(const Definitions& defs, const ordered_json& task, const std::string& path,
                                const RunOverrides& overrides) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    const FinslerMetric& metric_tilde =
        resolve_metric(defs, as_string(need(task, "metric_tilde", path), path + ".metric_tilde"), path);

    int trajectories = task.contains("trajectories")
                           ? as_int(task["trajectories"], path + ".trajectories")
                           : 10;
    if (trajectories < 1 || trajectories > static_cast<int>(defs.samples.points.size()))
        fail(path + ".trajectories", "must be between 1 and the sample count");
    double t_end = task.contains("t_end") ? as_double(task["t_end"], path + ".t_end") : 1.0;
    StepControl control;
    if (task.contains("step"))
        control.step = as_double(task["step"], path + ".step");
    double drift_tolerance = task.contains("drift_tolerance")
                                 ? as_double(task["drift_tolerance"], path + ".drift_tolerance")
                                 : 1e-5;

    TaskOutcome outcome;
    ResidualReport nabla =
        nabla_h_residual(spray, metric, metric_tilde, defs.samples, defs.tolerances.pass, overrides.jobs);
    outcome.result["nabla_h"] = residual_report_json(nabla);

    double max_drift = 0.0;
    bool any_truncated = false;
    ordered_json rows = ordered_json::array();
    for (int idx = 0; idx < trajectories; ++idx) {
        Trajectory trajectory =
            integrate_geodesic(spray, defs.samples.points[static_cast<std::size_t>(idx)], t_end, control);
        FirstIntegralSeries series = first_integral_drift(spray, metric, metric_tilde, trajectory);
        if (task.contains("export"))
            export_trajectory(trajectory, series,
                              export_path(overrides, as_string(task["export"], path + ".export"),
                                          static_cast<std::size_t>(idx)));
        ordered_json row;
        row["initial_point"] = idx;
        row["states"] = trajectory.states.size();
        row["truncated"] = trajectory.truncated;
        row["endpoint_error"] = trajectory.endpoint_error;
        row["max_drift"] = series.max_drift;
        row["max_h_y"] = series.max_h_y;
        row["complex_spectrum"] = series.complex_spectrum;
        row["crossing_detected"] = series.crossing_detected;
        if (!series.warnings.empty())
            row["warnings"] = series.warnings;
        rows.push_back(std::move(row));
        max_drift = std::max(max_drift, series.max_drift);
        any_truncated = any_truncated || trajectory.truncated;
    }
    outcome.result["trajectories"] = std::move(rows);
    outcome.result["max_drift"] = max_drift;
    outcome.result["drift_tolerance"] = drift_tolerance;
    outcome.pass = nabla.pass && !any_truncated && max_drift <= drift_tolerance;
    return outcome;
}

TaskOutcome run_geodesics(const Definitions& defs, const ordered_json& task, const std::string& path,
                          const RunOverrides& overrides) {
    const Spray& spray = resolve_spray(defs, as_string(need(task, "spray", path), path + ".spray"), path);
    const FinslerMetric& metric =
        resolve_metric(defs, as_string(need(task, "metric", path), path + ".metric"), path);
    int count = task.contains("count") ? as_int(task["count"], path + ".count") : 1;
    if (count < 1 || count > static_cast<int>(defs.samples.points.size()))
        fail(path + ".count", "must be between 1 and the sample count");
    double t_end = task.contains("t_end") ? as_double(task["t_end"], path + ".t_end") : 1.0;
    StepControl control;
    if (task.contains("step"))
        control.step = as_double(task["step"], path + ".step");
    double energy_tolerance = task.contains("energy_tolerance")
                                  ? as_double(task["energy_tolerance"], path + ".energy_tolerance")
                                  : 1e-6;

    TaskOutcome outcome;
    outcome.pass = true;
    ordered_json rows = ordered_json::array();
    for (int idx = 0; idx < count; ++idx) {
        Trajectory trajectory =
            integrate_geodesic(spray, defs.samples.points[static_cast<std::size_t>(idx)], t_end, control);
        FirstIntegralSeries series = first_integral_drift(spray, metric, metric, trajectory);
        if (task.contains("export"))
            export_trajectory(trajectory, series,
                              export_path(overrides, as_string(task["export"], path + ".export"),
                                          static_cast<std::size_t>(idx)));
        double energy_drift = series.drift.empty() ? 0.0 : series.drift.front();
        ordered_json row;
        row["initial_point"] = idx;
        row["states"] = trajectory.states.size();
        row["truncated"] = trajectory.truncated;
        row["endpoint_error"] = trajectory.endpoint_error;
        row["energy_drift"] = energy_drift;
        rows.push_back(std::move(row));
        outcome.pass = outcome.pass && !trajectory.truncated && energy_drift <= energy_tolerance;
    }
    outcome.result["trajectories"] = std::move(rows);
    outcome.result["energy_tolerance"] = energy_tolerance;
    return outcome;
}

} // namespace

RunResult run_scenario(const ordered_json& scenario, const RunOverrides& overrides) {
    auto start = std::chrono::steady_clock::now();

    if (as_int(need(scenario, "version", "scenario"), "scenario.version") != 1)
        fail("scenario.version", "must be 1");

    Definitions defs;
    defs.dimension = as_int(need(scenario, "dimension", "scenario"), "scenario.dimension");
    if (defs.dimension < 1 || defs.dimension > 12)
        fail("scenario.dimension", "must be between 1 and 12");
    defs.tolerances = parse_tolerances(scenario);

    SampleConfig config = parse_samples(scenario, defs.dimension);
    if (overrides.seed)
        config.seed = *overrides.seed;
    defs.samples = sample_points(config);

    if (auto it = scenario.find("metrics"); it != scenario.end()) {
        if (!it->is_object())
            fail("scenario.metrics", "must be an object");
        for (const auto& [name, value] : it->items()) {
            FinslerMetric metric = parse_metric(name, value);
            if (metric.dimension() == 0)
                fail("scenario.metrics." + name, "needs a dimension");
            defs.metrics.emplace(name, std::move(metric));
        }
    }
    if (auto it = scenario.find("sprays"); it != scenario.end()) {
        if (!it->is_object())
            fail("scenario.sprays", "must be an object");
        for (const auto& [name, value] : it->items())
            defs.sprays.emplace(name, parse_spray(defs, name, value));
    }
    for (const auto& [name, metric] : defs.metrics)
        if (metric.dimension() != defs.dimension)
            fail("scenario.metrics." + name, "dimension does not match the scenario");
    for (const auto& [name, spray] : defs.sprays)
        if (spray.dimension() != defs.dimension)
            fail("scenario.sprays." + name, "dimension does not match the scenario");

    const ordered_json& tasks = need(scenario, "tasks", "scenario");
    if (!tasks.is_array())
        fail("scenario.tasks", "must be an array");

    ordered_json report;
    report["schema_version"] = 1;
    report["tool"] = ordered_json{{"name", kToolName}, {"version", kVersion}};
    {
        ordered_json echo;
        echo["dimension"] = defs.dimension;
        echo["tolerances"] =
            ordered_json{{"pass", defs.tolerances.pass}, {"fail", defs.tolerances.fail}};
        echo["samples"] = ordered_json{
            {"seed", config.seed},         {"count", config.count},
            {"base_box", config.base_box}, {"fiber_shell", {config.shell_lo, config.shell_hi}},
            {"y_min", config.y_min},
        };
        ordered_json metric_names = ordered_json::object();
        for (const auto& [name, metric] : defs.metrics)
            metric_names[name] = metric.describe();
        echo["metrics"] = std::move(metric_names);
        ordered_json spray_names = ordered_json::object();
        for (const auto& [name, spray] : defs.sprays)
            spray_names[name] = spray.coefficient(0).describe();
        echo["sprays"] = std::move(spray_names);
        report["scenario"] = std::move(echo);
    }

    ordered_json task_rows = ordered_json::array();
    std::vector<double> per_task_ms;
    int passed = 0;
    int failed = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const ordered_json& task = tasks[k];
        std::string path = "scenario.tasks[" + std::to_string(k) + "]";
        std::string type = as_string(need(task, "task", path), path + ".task");

        auto task_start = std::chrono::steady_clock::now();
        TaskOutcome outcome;
        try {
            if (type == "validate")
                outcome = run_validate(defs, task, path, overrides.jobs);
            else if (type == "check-fm")
                outcome = run_check_fm(defs, task, path, overrides.jobs);
            else if (type == "check-pm")
                outcome = run_check_pm(defs, task, path, overrides.jobs);
            else if (type == "check-gm")
                outcome = run_check_gm(defs, task, path, overrides.jobs);
            else if (type == "hamel")
                outcome = run_hamel(defs, task, path, overrides.jobs);
            else if (type == "first-integrals")
                outcome = run_first_integrals(defs, task, path, overrides);
            else if (type == "geodesics")
                outcome = run_geodesics(defs, task, path, overrides);
            else
                fail(path + ".task", "must be one of validate, check-fm, check-pm, check-gm, hamel, "
                                     "first-integrals, geodesics (got \"" +
                                         type + "\")");
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw Error(path + " (" + type + "): " + e.what());
        }
        per_task_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                        task_start)
                                  .count());

        ordered_json row;
        row["task"] = type;
        for (const auto& [key, value] : task.items())
            if (key != "task")
                row[key] = value;
        row["pass"] = outcome.pass;
        row["result"] = std::move(outcome.result);
        task_rows.push_back(std::move(row));
        if (outcome.pass)
            ++passed;
        else
            ++failed;
    }
    report["tasks"] = std::move(task_rows);
    report["summary"] = ordered_json{
        {"tasks", tasks.size()},
        {"passed", passed},
        {"failed", failed},
        {"all_pass", failed == 0},
    };
    report["timing"] = ordered_json{
        {"timestamp", timestamp_utc()},
        {"total_ms",
         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()},
        {"per_task_ms", per_task_ms},
    };

    RunResult result;
    result.exit_code = failed == 0 ? 0 : 2;
    result.report = std::move(report);
    return result;
}

RunResult run_scenario_file(const std::string& path, const RunOverrides& overrides) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open scenario file " + path);
    ordered_json scenario;
    try {
        scenario = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scenario file " + path + " is not valid JSON: " + e.what(),
                         e.byte > 0 ? e.byte - 1 : 0);
    }
    return run_scenario(scenario, overrides);
}

} // namespace spraymet
