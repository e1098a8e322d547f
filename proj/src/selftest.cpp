#include "spraymet/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <vector>

#include "derived_fields.hpp"
#include "spraymet/connection.hpp"
#include "spraymet/expr.hpp"
#include "spraymet/first_integrals.hpp"
#include "spraymet/version.hpp"

namespace spraymet {

using nlohmann::ordered_json;

namespace {

struct Fixture {
    std::string name;
    std::string group;
    double observed = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

// Residual fixture: observed stays at or below threshold.
Fixture bounded(std::string name, std::string group, double observed, double threshold,
                std::string detail) {
    Fixture f{std::move(name), std::move(group), observed, threshold, observed <= threshold,
              std::move(detail)};
    return f;
}

// Detector fixture: a deliberately broken input must push observed past threshold.
Fixture detector(std::string name, std::string group, double observed, double threshold,
                 std::string detail) {
    Fixture f{std::move(name), std::move(group), observed, threshold, observed >= threshold,
              std::move(detail)};
    return f;
}

SampleSet make_samples(int dimension, int count, std::uint64_t seed) {
    SampleConfig config;
    config.seed = seed;
    config.count = count;
    config.base_box.assign(static_cast<std::size_t>(dimension), {-0.9, 0.9});
    config.shell_lo = 0.7;
    config.shell_hi = 1.5;
    config.y_min = 0.5;
    return sample_points(config);
}

struct NamedMetric {
    std::string name;
    FinslerMetric metric;
};

std::vector<NamedMetric> family_fixtures() {
    std::vector<NamedMetric> out;
    out.push_back({"euclidean2", FinslerMetric::euclidean(2)});
    out.push_back({"euclidean3", FinslerMetric::euclidean(3)});
    out.push_back({"riemannian2", FinslerMetric::riemannian(2, {{"2 + sin(x1)", "0.2*x2"},
                                                                {"0.2*x2", "1 + 0.5*x1^2"}})});
    out.push_back({"randers2", FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0})});
    out.push_back({"randers3", FinslerMetric::randers({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}},
                                                      {0.3, 0.0, 0.2})});
    out.push_back({"conformal2", FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2")});
    out.push_back({"custom2", FinslerMetric::custom(2, "sqrt(2*y1^2 + y2^2 + 0.5*y1*y2) + 0.1*y2")});
    return out;
}

FinslerMetric conformal2() { return FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"); }

const std::vector<std::vector<std::string>> kOmega0 = {{"0", "0.3"}, {"-0.3", "0"}};

MultiIndex bump(MultiIndex index, int slot, int dimension) {
    if (slot < dimension)
        index.d_base(slot);
    else
        index.d_fiber(slot - dimension);
    return index;
}

void run_ad_fd(std::vector<Fixture>& out, int jobs) {
    for (const auto& [name, metric] : family_fixtures()) {
        int n = metric.dimension();
        SampleSet samples = make_samples(n, 100, 17);
        const ScalarField& f = metric.finsler_function();

        std::vector<MultiIndex> indices;
        for (int a = 0; a < 2 * n; ++a) {
            MultiIndex i1 = bump(MultiIndex(n), a, n);
            indices.push_back(i1);
            for (int b = a; b < 2 * n; ++b) {
                MultiIndex i2 = bump(i1, b, n);
                indices.push_back(i2);
                for (int c = b; c < 2 * n; ++c)
                    indices.push_back(bump(i2, c, n));
            }
        }

        std::vector<double> worst(samples.points.size(), 0.0);
        parallel_for(static_cast<int>(samples.points.size()), jobs, [&](int k) {
            std::vector<double> coords = samples.points[static_cast<std::size_t>(k)].coords();
            double w = 0.0;
            for (const MultiIndex& index : indices) {
                double ad = eval_derivative(f, coords, index);
                double fd = fd_derivative(f, coords, index);
                w = std::max(w, std::abs(ad - fd) / (1.0 + std::abs(ad)));
            }
            worst[static_cast<std::size_t>(k)] = w;
        });
        double observed = *std::max_element(worst.begin(), worst.end());
        out.push_back(bounded("ad-fd/" + name, "ad-fd", observed, 1e-6,
                              "all partials of F up to order 3 at 100 points, relative gap"));
    }
}

void run_homogeneity(std::vector<Fixture>& out, int jobs) {
    for (const auto& [name, metric] : family_fixtures()) {
        int n = metric.dimension();
        SampleSet samples = make_samples(n, 20, 23);
        const ScalarField& f = metric.finsler_function();
        const ScalarField& energy = metric.energy();

        double observed = 0.0;
        for (const FiberPoint& p : samples.points) {
            observed = std::max(observed, std::abs(homogeneity_residual(f, 1, p)));
            observed = std::max(observed, std::abs(homogeneity_residual(energy, 2, p)));
            std::vector<double> coords = p.coords();
            double fv = eval_value(f, coords);
            TensorValue g = metric_tensor(metric, p);
            double gyy = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    gyy += g.at(i, j) * p.y()[static_cast<std::size_t>(i)] *
                           p.y()[static_cast<std::size_t>(j)];
            observed = std::max(observed, std::abs(gyy - fv * fv) / (1.0 + fv * fv));
            TensorValue h = angular_metric(metric, p);
            for (int i = 0; i < n; ++i) {
                double hy = 0.0;
                for (int j = 0; j < n; ++j)
                    hy += h.at(i, j) * p.y()[static_cast<std::size_t>(j)];
                observed = std::max(observed, std::abs(hy));
            }
        }
        RegularityReport reg = check_regularity(metric, samples, jobs);
        Fixture fixture = bounded("homogeneity/" + name, "homogeneity", observed, 1e-9,
                                  "Euler identities, g y y = F^2, h y = 0, rank checks");
        fixture.pass = fixture.pass && reg.pass;
        if (!reg.pass)
            fixture.detail += "; regularity failed at " + std::to_string(reg.failures) + " points";
        out.push_back(std::move(fixture));
    }
}

void run_fm_forward(std::vector<Fixture>& out, int jobs) {
    for (const auto& [name, metric] : family_fixtures()) {
        if (name == "randers3" || name == "custom2")
            continue; // keep the forward set to five fixtures; families already covered
        SampleSet samples = make_samples(metric.dimension(), 10, 31);
        Spray spray = geodesic_spray(metric);
        MetrizabilityVerdict verdict = fm_residual(spray, metric, samples, {}, jobs);
        double observed = std::max(verdict.max_residual, verdict.cross_max);
        Fixture fixture = bounded("fm-forward/" + name, "fm-forward", observed, 1e-7,
                                  "nabla g and Euler-Lagrange form of F^2 on the own geodesic spray");
        fixture.pass = fixture.pass && verdict.pass();
        out.push_back(std::move(fixture));
    }
}

void run_fm_detector(std::vector<Fixture>& out, int jobs) {
    SampleSet samples = make_samples(2, 10, 37);
    Spray spray = Spray::from_expressions({"0.1*y1^2", "0"});
    FinslerMetric metric = FinslerMetric::euclidean(2);
    MetrizabilityVerdict verdict = fm_residual(spray, metric, samples, {}, jobs);
    double observed = std::min(verdict.max_residual, verdict.cross_max);
    Fixture fixture = detector("fm-detector/perturbed-flat", "fm-detector", observed, 1e-3,
                               "both nabla g and the Euler-Lagrange checker must flag the fixture");
    fixture.pass = fixture.pass && verdict.status == VerdictStatus::Fail;
    out.push_back(std::move(fixture));
}

void run_pm(std::vector<Fixture>& out, int jobs) {
    const std::vector<std::string> factors = {"0", "sqrt(y1^2 + y2^2)", "0.2*y1 - 0.1*y2"};
    std::vector<NamedMetric> metrics;
    metrics.push_back({"euclidean2", FinslerMetric::euclidean(2)});
    metrics.push_back({"randers2", FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0})});
    metrics.push_back({"conformal2", conformal2()});

    double recover_gap = 0.0;
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        ScalarFieldExpr factor = parse_expression(factors[fi], 2);
        for (const auto& [mname, metric] : metrics) {
            SampleSet samples = make_samples(2, 10, 41 + fi);
            Spray spray = make_projective_deformation(geodesic_spray(metric), factors[fi]);
            MetrizabilityVerdict verdict = pm_levicivita_residual(spray, metric, samples, {}, jobs);
            for (std::size_t k = 0; k < samples.points.size(); ++k) {
                double injected = eval_value(factor, samples.points[k].coords());
                recover_gap = std::max(recover_gap, std::abs(verdict.recovered_p[k] - injected));
            }
            Fixture fixture =
                bounded("pm/P" + std::to_string(fi) + "-" + mname, "pm-levicivita", verdict.max_residual,
                        1e-7, "Levi-Civita residual on a projective deformation of the geodesic spray");
            fixture.pass = fixture.pass && verdict.pass();
            out.push_back(std::move(fixture));
        }
    }
    out.push_back(bounded("pm/recovered-factor", "pm-levicivita", recover_gap, 1e-8,
                          "recovered projective factor against the injected one, all nine fixtures"));
}

void run_angular(std::vector<Fixture>& out, int jobs) {
    const std::vector<std::string> factors = {"0", "sqrt(y1^2 + y2^2)", "0.2*y1 - 0.1*y2"};
    std::vector<NamedMetric> metrics;
    metrics.push_back({"euclidean2", FinslerMetric::euclidean(2)});
    metrics.push_back({"randers2", FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0})});
    metrics.push_back({"conformal2", conformal2()});

    double gap = 0.0;
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        for (const auto& [mname, metric] : metrics) {
            SampleSet samples = make_samples(2, 10, 47 + fi);
            Spray spray = make_projective_deformation(geodesic_spray(metric), factors[fi]);
            MetrizabilityVerdict verdict = angular_invariance_residual(spray, metric, samples, {}, jobs);
            gap = std::max(gap, verdict.form_gap_max);
            Fixture fixture = bounded("angular/P" + std::to_string(fi) + "-" + mname, "angular",
                                      verdict.max_residual, 1e-7,
                                      "nabla of the angular tensor h/F on a projectively deformed spray");
            fixture.pass = fixture.pass && verdict.pass();
            out.push_back(std::move(fixture));
        }
    }
    out.push_back(bounded("angular/form-gap", "angular", gap, 1e-9,
                          "agreement of the two computation forms of h/F, all nine fixtures"));
}

void run_gyroscopic(std::vector<Fixture>& out, int jobs) {
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    Spray gyro = make_gyroscopic_spray(euclidean, kOmega0);
    SampleSet samples = make_samples(2, 10, 59);

    MetrizabilityVerdict angular = angular_invariance_residual(gyro, euclidean, samples, {}, jobs);
    Fixture fa = bounded("gyro/angular", "gyroscopic", angular.max_residual, 1e-7,
                         "angular invariance on the constructed gyroscopic spray");
    fa.pass = fa.pass && angular.pass();
    out.push_back(std::move(fa));

    MetrizabilityVerdict recovered = recover_gyroscopic_form(gyro, euclidean, samples, {}, jobs);
    Fixture fr = bounded("gyro/residual", "gyroscopic", recovered.max_residual, 1e-7,
                         "Euler-Lagrange form against the recovered 2-form, plus fiber spread");
    fr.pass = fr.pass && recovered.pass();
    out.push_back(std::move(fr));

    double omega_gap = 0.0;
    for (const auto& w : recovered.recovered_omega) {
        omega_gap = std::max(omega_gap, std::abs(w[0 * 2 + 1] - 0.3));
        omega_gap = std::max(omega_gap, std::abs(w[1 * 2 + 0] + 0.3));
        omega_gap = std::max(omega_gap, std::abs(w[0]));
        omega_gap = std::max(omega_gap, std::abs(w[3]));
    }
    out.push_back(bounded("gyro/recovered-omega", "gyroscopic", omega_gap, 1e-8,
                          "recovered omega against the injected constant form at every sample"));
    out.push_back(bounded("gyro/fiber-spread", "gyroscopic", recovered.fiber_spread_max, 1e-8,
                          "recovered omega across three fiber vectors over each base point"));

    FinslerMetric conformal = conformal2();
    Spray flat = Spray::flat(2);
    MetrizabilityVerdict bad_angular = angular_invariance_residual(flat, conformal, samples, {}, jobs);
    out.push_back(detector("gyro/detector-angular", "gyroscopic", bad_angular.max_residual, 1e-3,
                           "flat spray against a conformal metric must break angular invariance"));
    MetrizabilityVerdict bad_recover = recover_gyroscopic_form(flat, conformal, samples, {}, jobs);
    out.push_back(detector("gyro/detector-spread", "gyroscopic", bad_recover.fiber_spread_max, 1e-3,
                           "recovered form must depend on the fiber when no basic form exists"));
}

void run_lemma(std::vector<Fixture>& out, int jobs) {
    (void)jobs;
    FinslerMetric conformal = conformal2();
    SampleSet samples = make_samples(2, 50, 61);
    FieldPtr zero = std::make_shared<ScalarFieldExpr>(ScalarFieldExpr::number(2, 0.0));
    TensorField zero_sigma = TensorField::covector(2, {zero, zero});

    // FM specialization: f = F^2, sigma = 0, degree 2 on the geodesic spray.
    {
        Spray spray = geodesic_spray(conformal);
        double observed = 0.0;
        for (const FiberPoint& p : samples.points) {
            LemmaSplit split = lemma_split_residual(spray, conformal.energy_ptr(), zero_sigma, 2, p);
            observed = std::max({observed, split.symmetric.max_abs(), split.skew.max_abs()});
        }
        out.push_back(bounded("lemma/fm-specialization", "lemma", observed, 1e-9,
                              "f = F^2, sigma = 0 on the geodesic spray, 50 points"));
    }

    // GM specialization: f = F~, sigma = i_S omega_0, degree 1 on the gyroscopic spray.
    {
        FinslerMetric euclidean = FinslerMetric::euclidean(2);
        Spray spray = make_gyroscopic_spray(euclidean, kOmega0);
        TensorField sigma = basic_form_interior_product(kOmega0, 2);
        double observed = 0.0;
        for (const FiberPoint& p : samples.points) {
            LemmaSplit split =
                lemma_split_residual(spray, euclidean.finsler_function_ptr(), sigma, 1, p);
            observed = std::max({observed, split.symmetric.max_abs(), split.skew.max_abs()});
        }
        out.push_back(bounded("lemma/gm-specialization", "lemma", observed, 1e-9,
                              "f = F~, sigma = i_S omega on the gyroscopic spray, 50 points"));
    }

    // Reconstruction: the two split residuals plus d sigma/dy rebuild the
    // fiber derivative of the Euler-Lagrange form even off-shell.
    {
        Spray spray = Spray::flat(2);
        FieldPtr f = conformal.finsler_function_ptr();
        std::vector<std::shared_ptr<const ScalarField>> el_fields;
        for (int i = 0; i < 2; ++i)
            el_fields.push_back(std::make_shared<detail::EulerLagrangeField>(spray, f, i));
        double observed = 0.0;
        for (const FiberPoint& p : samples.points) {
            LemmaSplit split = lemma_split_residual(spray, f, zero_sigma, 1, p);
            std::vector<double> coords = p.coords();
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double direct = detail::derive1<double>(*el_fields[static_cast<std::size_t>(i)],
                                                            coords, 2 + j);
                    double rebuilt = split.symmetric.at(i, j) + split.skew.at(i, j);
                    observed = std::max(observed,
                                        std::abs(rebuilt - direct) / (1.0 + std::abs(direct)));
                }
        }
        out.push_back(bounded("lemma/reconstruction", "lemma", observed, 1e-9,
                              "split residuals rebuild d(EL)/dy for a non-metrizable pair"));
    }
}

void run_first_integrals(std::vector<Fixture>& out, int jobs) {
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    Spray flat = Spray::flat(2);
    SampleSet samples = make_samples(2, 10, 53);

    ResidualReport nabla = nabla_h_residual(flat, euclidean, randers, samples, 1e-7, jobs);
    out.push_back(bounded("first-integrals/nabla-h", "first-integrals", nabla.max_residual, 1e-7,
                          "covariant derivative of H for the flat spray and two flat metrics"));

    double max_drift = 0.0;
    bool truncated = false;
    StepControl control;
    control.step = 1e-3;
    for (int k = 0; k < 10; ++k) {
        Trajectory trajectory =
            integrate_geodesic(flat, samples.points[static_cast<std::size_t>(k)], 1.0, control);
        FirstIntegralSeries series = first_integral_drift(flat, euclidean, randers, trajectory);
        max_drift = std::max(max_drift, series.max_drift);
        truncated = truncated || trajectory.truncated;
    }
    Fixture drift = bounded("first-integrals/drift", "first-integrals", max_drift, 1e-5,
                            "F^2, tr H^k, coefficients and eigenvalues along ten geodesics");
    drift.pass = drift.pass && !truncated;
    out.push_back(std::move(drift));

    double trace_gap = 0.0;
    double hy_gap = 0.0;
    for (const FiberPoint& p : samples.points) {
        TensorValue self = h_tensor(randers, randers, p);
        trace_gap = std::max(trace_gap, std::abs(self.trace() - 1.0));
        TensorValue cross = h_tensor(euclidean, randers, p);
        for (int i = 0; i < 2; ++i) {
            double hy = 0.0;
            for (int j = 0; j < 2; ++j)
                hy += cross.at(i, j) * p.y()[static_cast<std::size_t>(j)];
            hy_gap = std::max(hy_gap, std::abs(hy));
        }
    }
    out.push_back(bounded("first-integrals/trace-identity", "first-integrals", trace_gap, 1e-10,
                          "tr H = n - 1 when both metrics coincide"));
    out.push_back(bounded("first-integrals/h-annihilates-y", "first-integrals", hy_gap, 1e-9,
                          "H y = 0 for the mixed metric pair"));
}

void run_integrator(std::vector<Fixture>& out) {
    FinslerMetric metric = conformal2();
    Spray spray = geodesic_spray(metric);
    FiberPoint start({0.1, -0.2}, {1.0, 0.4});

    auto endpoint = [&](double step) {
        StepControl control;
        control.step = step;
        Trajectory t = integrate_geodesic(spray, start, 1.0, control);
        return t.states.back().coords();
    };
    std::vector<double> reference = endpoint(1.0 / 1024.0);
    auto gap = [&](const std::vector<double>& z) {
        double g = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i)
            g = std::max(g, std::abs(z[i] - reference[i]));
        return g;
    };
    double coarse = gap(endpoint(1.0 / 32.0));
    double fine = gap(endpoint(1.0 / 64.0));
    double ratio = fine > 0.0 ? coarse / fine : 16.0;
    out.push_back(detector("integrator/order", "integrator", ratio, 12.0,
                           "halving the step must shrink the endpoint error about 16x"));

    StepControl control;
    control.step = 1e-3;
    Trajectory trajectory = integrate_geodesic(spray, start, 1.0, control);
    FirstIntegralSeries series = first_integral_drift(spray, metric, metric, trajectory);
    Fixture energy = bounded("integrator/energy-drift", "integrator",
                             series.drift.empty() ? 1.0 : series.drift.front(), 1e-6,
                             "relative drift of F^2 along a conformal geodesic");
    energy.pass = energy.pass && !trajectory.truncated;
    out.push_back(std::move(energy));
}

std::string timestamp_utc() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

} // namespace

RunResult selftest(int jobs) {
    auto start = std::chrono::steady_clock::now();

    std::vector<Fixture> fixtures;
    run_ad_fd(fixtures, jobs);
    run_homogeneity(fixtures, jobs);
    run_fm_forward(fixtures, jobs);
    run_fm_detector(fixtures, jobs);
    run_pm(fixtures, jobs);
    run_angular(fixtures, jobs);
    run_gyroscopic(fixtures, jobs);
    run_lemma(fixtures, jobs);
    run_first_integrals(fixtures, jobs);
    run_integrator(fixtures);

    ordered_json report;
    report["schema_version"] = 1;
    report["tool"] = ordered_json{{"name", kToolName}, {"version", kVersion}};
    ordered_json rows = ordered_json::array();
    ordered_json groups = ordered_json::object();
    int passed = 0;
    for (const Fixture& fixture : fixtures) {
        ordered_json row;
        row["name"] = fixture.name;
        row["group"] = fixture.group;
        row["pass"] = fixture.pass;
        row["observed"] = fixture.observed;
        row["threshold"] = fixture.threshold;
        row["detail"] = fixture.detail;
        rows.push_back(std::move(row));
        if (fixture.pass)
            ++passed;
        if (!groups.contains(fixture.group))
            groups[fixture.group] = true;
        groups[fixture.group] = groups[fixture.group].get<bool>() && fixture.pass;
    }
    report["fixtures"] = std::move(rows);
    report["groups"] = std::move(groups);
    report["summary"] = ordered_json{
        {"total", fixtures.size()},
        {"passed", passed},
        {"failed", fixtures.size() - static_cast<std::size_t>(passed)},
        {"all_pass", passed == static_cast<int>(fixtures.size())},
    };
    report["timing"] = ordered_json{
        {"timestamp", timestamp_utc()},
        {"total_ms",
         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()},
    };

    RunResult result;
    result.exit_code = passed == static_cast<int>(fixtures.size()) ? 0 : 2;
    result.report = std::move(report);
    return result;
}

} // namespace spraymet
