#include "spraymet/metrizability.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <utility>

#include "spraymet/expr.hpp"

#include "derived_fields.hpp"

namespace spraymet {

namespace {

SampleSet probe_points(int dimension) {
    SampleConfig probe;
    probe.seed = 12;
    probe.count = 8;
    probe.base_box.assign(static_cast<std::size_t>(dimension), {-0.5, 0.5});
    probe.shell_lo = 0.7;
    probe.shell_hi = 1.5;
    probe.y_min = 0.5;
    return sample_points(probe);
}

void check_pair(const Spray& spray, const FinslerMetric& metric) {
    if (spray.dimension() != metric.dimension())
        throw ConfigError("spray dimension " + std::to_string(spray.dimension()) +
                          " does not match metric dimension " + std::to_string(metric.dimension()));
}

void require_regular(const FinslerMetric& metric, const SampleSet& samples, int jobs) {
    RegularityReport reg = check_regularity(metric, samples, jobs);
    if (reg.pass)
        return;
    for (const RegularityEntry& entry : reg.entries)
        if (!entry.ok)
            throw DegenerateMetricError(
                metric.describe() + " fails regularity at sample point #" + std::to_string(entry.point) +
                    " (" + samples.points[static_cast<std::size_t>(entry.point)].to_string() + ")",
                {entry.min_singular_g});
    throw DegenerateMetricError(metric.describe() + " fails regularity", {});
}

// Fills max/mean/worst/status from per_point.
void aggregate(MetrizabilityVerdict& verdict) {
    verdict.max_residual = 0.0;
    verdict.mean_residual = 0.0;
    verdict.worst_point = -1;
    for (std::size_t k = 0; k < verdict.per_point.size(); ++k) {
        double r = verdict.per_point[k];
        verdict.mean_residual += r;
        if (r > verdict.max_residual || verdict.worst_point < 0) {
            verdict.max_residual = r;
            verdict.worst_point = static_cast<int>(k);
        }
    }
    if (!verdict.per_point.empty())
        verdict.mean_residual /= static_cast<double>(verdict.per_point.size());
    verdict.status = classify(verdict.max_residual, verdict.tolerances);
}

TensorField fiber_gradient_field(const FieldPtr& f) {
    int n = f->dimension();
    std::vector<FieldPtr> components;
    components.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        components.push_back(std::make_shared<detail::DerivativeField>(f, n + i));
    return TensorField::covector(n, std::move(components));
}

TensorField fiber_hessian_field(const FieldPtr& f) {
    int n = f->dimension();
    std::vector<FieldPtr> components(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            FieldPtr c = std::make_shared<detail::FiberHessianField>(f, i, j);
            components[static_cast<std::size_t>(i * n + j)] = c;
            components[static_cast<std::size_t>(j * n + i)] = c;
        }
    return TensorField::cov2(n, std::move(components));
}

// Parses, shape-checks and probes a basic 2-form given as expressions:
// entries in x only, skew-symmetric.
std::vector<FieldPtr> parse_basic_form(const std::vector<std::vector<std::string>>& omega, int dimension) {
    std::size_t n = static_cast<std::size_t>(dimension);
    if (omega.size() != n)
        throw ConfigError("basic 2-form needs " + std::to_string(dimension) + " rows, got " +
                          std::to_string(omega.size()));
    std::vector<FieldPtr> fields(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (omega[i].size() != n)
            throw ConfigError("basic 2-form row " + std::to_string(i + 1) + " has " +
                              std::to_string(omega[i].size()) + " entries; expected " +
                              std::to_string(dimension));
        for (std::size_t j = 0; j < n; ++j) {
            ScalarFieldExpr entry = parse_expression(omega[i][j], dimension);
            if (entry.uses_fiber_coordinates())
                throw ConfigError("basic 2-form entry (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ") must depend on base coordinates only");
            fields[i * n + j] = std::make_shared<ScalarFieldExpr>(std::move(entry));
        }
    }
    SampleSet probes = probe_points(dimension);
    for (const FiberPoint& p : probes.points) {
        std::vector<double> coords = p.coords();
        std::span<const double> span(coords);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double a = fields[i * n + j]->value(span);
                double b = fields[j * n + i]->value(span);
                if (std::abs(a + b) > 1e-12 * (1.0 + std::abs(a)))
                    throw ConfigError("basic 2-form is not skew-symmetric: entry (" + std::to_string(i + 1) +
                                      "," + std::to_string(j + 1) + ") + entry (" + std::to_string(j + 1) +
                                      "," + std::to_string(i + 1) + ") = " + format_double(a + b) + " at " +
                                      p.to_string());
            }
    }
    return fields;
}

} // namespace

std::string problem_name(Problem problem) {
    switch (problem) {
    case Problem::FM: return "FM";
    case Problem::PM: return "PM";
    case Problem::GM: return "GM";
    }
    return "unknown";
}

std::string status_name(VerdictStatus status) {
    switch (status) {
    case VerdictStatus::Pass: return "pass";
    case VerdictStatus::Fail: return "fail";
    case VerdictStatus::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

VerdictStatus classify(double max_residual, const Tolerances& tolerances) {
    if (!(tolerances.pass > 0.0) || !(tolerances.fail > tolerances.pass))
        throw ConfigError("tolerances need 0 < pass < fail");
    if (max_residual <= tolerances.pass)
        return VerdictStatus::Pass;
    if (max_residual >= tolerances.fail)
        return VerdictStatus::Fail;
    return VerdictStatus::Inconclusive;
}

TensorValue euler_lagrange_form(const Spray& spray, const FieldPtr& lagrangian, const FiberPoint& p) {
    if (!lagrangian)
        throw ConfigError("null Lagrangian");
    if (lagrangian->dimension() != spray.dimension())
        throw ConfigError("Lagrangian dimension does not match the spray");
    int n = spray.dimension();
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);

    std::vector<double> dir = detail::spray_direction<double>(spray, span);
    TensorValue out(Valence::Cov1, n, p);
    double term_scale = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = detail::derive_dir_partial<double>(*lagrangian, span, std::span<const double>(dir), n + i);
        double dx = detail::derive1<double>(*lagrangian, span, i);
        out.at(i) = s - dx;
        term_scale = std::max(term_scale, std::abs(s) + std::abs(dx));
    }

    TensorValue nab = dynamical_covariant_derivative(fiber_gradient_field(lagrangian), spray, p);
    double gap = 0.0;
    for (int i = 0; i < n; ++i) {
        double second = nab.at(i) - horizontal_derivative(*lagrangian, spray, p, i);
        gap = std::max(gap, std::abs(out.at(i) - second));
    }
    if (gap > 1e-10 * (1.0 + term_scale))
        throw Error("Euler-Lagrange form cross-check failed: the two evaluation paths differ by " +
                    format_double(gap) + " at " + p.to_string());
    return out;
}

LemmaSplit lemma_split_residual(const Spray& spray, const FieldPtr& f, const TensorField& sigma,
                                int degree, const FiberPoint& p) {
    if (!f)
        throw ConfigError("null scalar field");
    if (degree == 0)
        throw ConfigError("homogeneity degree must be a nonzero integer");
    int n = spray.dimension();
    if (f->dimension() != n || sigma.dimension() != n)
        throw ConfigError("lemma inputs must share the spray dimension");
    if (sigma.valence() != Valence::Cov1)
        throw ConfigError("sigma must be a covector field");

    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);
    {
        double value = f->value(span);
        double residual = homogeneity_residual(*f, degree, p);
        if (std::abs(residual) > 1e-6 * (1.0 + std::abs(value)))
            throw HomogeneityError("lemma requires f " + std::to_string(degree) +
                                   "-homogeneous in y; residual " + format_double(residual) + " at " +
                                   p.to_string());
    }
    for (int i = 0; i < n; ++i) {
        double value = sigma.component(i).value(span);
        double residual = homogeneity_residual(sigma.component(i), degree, p);
        if (std::abs(residual) > 1e-6 * (1.0 + std::abs(value)))
            throw HomogeneityError("lemma requires sigma " + std::to_string(degree) +
                                   "-homogeneous in y; component " + std::to_string(i + 1) + " residual " +
                                   format_double(residual) + " at " + p.to_string());
    }

    std::vector<double> ds(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            ds[static_cast<std::size_t>(i * n + j)] =
                detail::derive1<double>(sigma.component(i), span, n + j);

    TensorValue nab = dynamical_covariant_derivative(fiber_hessian_field(f), spray, p);

    std::vector<FieldPtr> l(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        l[static_cast<std::size_t>(i)] = std::make_shared<detail::DerivativeField>(f, n + i);
    std::vector<double> d(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            d[static_cast<std::size_t>(a * n + b)] =
                horizontal_derivative(*l[static_cast<std::size_t>(b)], spray, p, a);

    LemmaSplit split{TensorValue(Valence::Cov2, n, p), TensorValue(Valence::Cov2, n, p)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double sym_sigma = 0.5 * (ds[static_cast<std::size_t>(i * n + j)] +
                                      ds[static_cast<std::size_t>(j * n + i)]);
            double skew_sigma = 0.5 * (ds[static_cast<std::size_t>(i * n + j)] -
                                       ds[static_cast<std::size_t>(j * n + i)]);
            split.symmetric.at(i, j) = nab.at(i, j) - sym_sigma;
            split.skew.at(i, j) = d[static_cast<std::size_t>(j * n + i)] -
                                  d[static_cast<std::size_t>(i * n + j)] - skew_sigma;
        }
    return split;
}

TensorField basic_form_interior_product(const std::vector<std::vector<std::string>>& omega, int dimension) {
    parse_basic_form(omega, dimension); // validation only
    std::size_t n = static_cast<std::size_t>(dimension);
    std::vector<FieldPtr> components(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string source;
        for (std::size_t j = 0; j < n; ++j) {
            if (!source.empty())
                source += " + ";
            source += "(" + omega[i][j] + ")*y" + std::to_string(j + 1);
        }
        components[i] = std::make_shared<ScalarFieldExpr>(parse_expression(source, dimension));
    }
    return TensorField::covector(dimension, std::move(components));
}

MetrizabilityVerdict fm_residual(const Spray& spray, const FinslerMetric& metric, const SampleSet& samples,
                                 const Tolerances& tolerances, int jobs) {
    check_pair(spray, metric);
    require_regular(metric, samples, jobs);
    int count = static_cast<int>(samples.points.size());

    MetrizabilityVerdict verdict;
    verdict.problem = Problem::FM;
    verdict.tolerances = tolerances;
    verdict.per_point.resize(static_cast<std::size_t>(count));
    verdict.residuals.reserve(static_cast<std::size_t>(count));
    for (const FiberPoint& p : samples.points)
        verdict.residuals.emplace_back(Valence::Cov2, metric.dimension(), p);
    std::vector<double> cross(static_cast<std::size_t>(count));

    TensorField g = metric_tensor_field(metric);
    FieldPtr energy = metric.energy_ptr();
    parallel_for(count, jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        TensorValue nab = dynamical_covariant_derivative(g, spray, p);
        verdict.per_point[static_cast<std::size_t>(k)] = nab.max_abs();
        verdict.residuals[static_cast<std::size_t>(k)] = std::move(nab);
        cross[static_cast<std::size_t>(k)] = euler_lagrange_form(spray, energy, p).max_abs();
    });

    aggregate(verdict);
    verdict.cross_max = *std::max_element(cross.begin(), cross.end());
    bool primary_ok = verdict.max_residual <= tolerances.pass;
    bool cross_ok = verdict.cross_max <= tolerances.pass;
    if (primary_ok != cross_ok)
        verdict.warnings.push_back("FM cross-check disagreement: max |nabla g| = " +
                                   format_double(verdict.max_residual) + " but max |delta_S F^2| = " +
                                   format_double(verdict.cross_max));
    return verdict;
}

double recover_projective_factor(const Spray& spray, const FinslerMetric& metric, const FiberPoint& p) {
    check_pair(spray, metric);
    const ScalarField& f = metric.finsler_function();
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);
    double fv = f.value(span);
    if (!(fv > 0.0))
        throw DomainError("Finsler function not positive at " + p.to_string());
    double factor = detail::spray_derivative<double>(spray, f, span) / (2.0 * fv);

    int n = metric.dimension();
    std::vector<double> scaled = coords;
    for (int i = 0; i < n; ++i)
        scaled[static_cast<std::size_t>(n + i)] *= 2.0;
    std::span<const double> scaled_span(scaled);
    double f2 = f.value(scaled_span);
    double factor2 = detail::spray_derivative<double>(spray, f, scaled_span) / (2.0 * f2);
    if (std::abs(factor2 - 2.0 * factor) > 1e-9 * (1.0 + 2.0 * std::abs(factor)))
        throw HomogeneityError("recovered projective factor is not 1-homogeneous: P(x,2y) = " +
                               format_double(factor2) + " vs 2 P(x,y) = " + format_double(2.0 * factor));
    return factor;
}

MetrizabilityVerdict pm_levicivita_residual(const Spray& spray, const FinslerMetric& metric,
                                            const SampleSet& samples, const Tolerances& tolerances,
                                            int jobs) {
    check_pair(spray, metric);
    require_regular(metric, samples, jobs);
    int n = metric.dimension();
    int count = static_cast<int>(samples.points.size());

    MetrizabilityVerdict verdict;
    verdict.problem = Problem::PM;
    verdict.tolerances = tolerances;
    verdict.per_point.resize(static_cast<std::size_t>(count));
    verdict.recovered_p.resize(static_cast<std::size_t>(count));
    verdict.residuals.reserve(static_cast<std::size_t>(count));
    for (const FiberPoint& p : samples.points)
        verdict.residuals.emplace_back(Valence::Cov2, n, p);
    std::vector<double> cross(static_cast<std::size_t>(count));

    TensorField g = metric_tensor_field(metric);
    TensorField de = fiber_gradient_field(metric.energy_ptr());
    auto factor_field = std::make_shared<detail::ProjectiveFactorField>(spray, metric.finsler_function_ptr());

    parallel_for(count, jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        std::vector<double> coords = p.coords();
        std::span<const double> span(coords);

        double factor = factor_field->value(span);
        std::vector<double> dp(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            dp[static_cast<std::size_t>(i)] = detail::derive1<double>(*factor_field, span, n + i);

        TensorValue gv = g.evaluate(p);
        std::vector<double> gy(static_cast<std::size_t>(n), 0.0);
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                gy[static_cast<std::size_t>(j)] += gv.at(l, j) * p.y()[static_cast<std::size_t>(l)];

        TensorValue nab = dynamical_covariant_derivative(g, spray, p);
        TensorValue res(Valence::Cov2, n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                res.at(i, j) = nab.at(i, j) - 2.0 * factor * gv.at(i, j) -
                               dp[static_cast<std::size_t>(i)] * gy[static_cast<std::size_t>(j)] -
                               dp[static_cast<std::size_t>(j)] * gy[static_cast<std::size_t>(i)];

        verdict.per_point[static_cast<std::size_t>(k)] = res.max_abs();
        verdict.residuals[static_cast<std::size_t>(k)] = std::move(res);
        verdict.recovered_p[static_cast<std::size_t>(k)] = factor;

        // Contracted consequences of the Levi-Civita equations on the
        // fiber gradient of the energy and its horizontal derivative.
        double energy = metric.energy().value(span);
        TensorValue nab_de = dynamical_covariant_derivative(de, spray, p);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            double dei = detail::derive1<double>(metric.energy(), span, i + n);
            double npfy = nab_de.at(i) - 3.0 * factor * dei - 2.0 * energy * dp[static_cast<std::size_t>(i)];
            double dpfy = horizontal_derivative(metric.energy(), spray, p, i) - factor * dei -
                          energy * dp[static_cast<std::size_t>(i)];
            worst = std::max(worst, std::max(std::abs(npfy), std::abs(dpfy)));
        }
        cross[static_cast<std::size_t>(k)] = worst;
    });

    aggregate(verdict);
    verdict.cross_max = *std::max_element(cross.begin(), cross.end());
    if (verdict.status == VerdictStatus::Pass && verdict.cross_max > 10.0 * tolerances.pass)
        verdict.warnings.push_back("PM contracted identities exceed the pass scale: " +
                                   format_double(verdict.cross_max));
    return verdict;
}

MetrizabilityVerdict angular_invariance_residual(const Spray& spray, const FinslerMetric& metric,
                                                 const SampleSet& samples, const Tolerances& tolerances,
                                                 int jobs) {
    check_pair(spray, metric);
    require_regular(metric, samples, jobs);
    int n = metric.dimension();
    int count = static_cast<int>(samples.points.size());

    MetrizabilityVerdict verdict;
    verdict.problem = Problem::GM;
    verdict.tolerances = tolerances;
    verdict.per_point.resize(static_cast<std::size_t>(count));
    verdict.residuals.reserve(static_cast<std::size_t>(count));
    for (const FiberPoint& p : samples.points)
        verdict.residuals.emplace_back(Valence::Cov2, n, p);
    std::vector<double> gaps(static_cast<std::size_t>(count));

    TensorField hessian = fiber_hessian_field(metric.finsler_function_ptr());
    std::vector<FieldPtr> ratio(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            FieldPtr c = std::make_shared<detail::AngularRatioField>(metric.finsler_function_ptr(),
                                                                     metric.energy_ptr(), i, j);
            ratio[static_cast<std::size_t>(i * n + j)] = c;
            ratio[static_cast<std::size_t>(j * n + i)] = c;
        }
    TensorField ratio_field = TensorField::cov2(n, std::move(ratio));

    parallel_for(count, jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        TensorValue direct = dynamical_covariant_derivative(hessian, spray, p);
        TensorValue via_ratio = dynamical_covariant_derivative(ratio_field, spray, p);
        gaps[static_cast<std::size_t>(k)] = (direct - via_ratio).max_abs();
        verdict.per_point[static_cast<std::size_t>(k)] = direct.max_abs();
        verdict.residuals[static_cast<std::size_t>(k)] = std::move(direct);
    });

    aggregate(verdict);
    verdict.form_gap_max = *std::max_element(gaps.begin(), gaps.end());
    if (verdict.form_gap_max > 1e-9)
        verdict.warnings.push_back("angular invariance forms disagree by " +
                                   format_double(verdict.form_gap_max));
    return verdict;
}

MetrizabilityVerdict recover_gyroscopic_form(const Spray& spray, const FinslerMetric& metric,
                                             const SampleSet& samples, const Tolerances& tolerances,
                                             int jobs) {
    check_pair(spray, metric);
    require_regular(metric, samples, jobs);
    int n = metric.dimension();
    int count = static_cast<int>(samples.points.size());
    FieldPtr f = metric.finsler_function_ptr();

    std::vector<FieldPtr> l(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        l[static_cast<std::size_t>(i)] = std::make_shared<detail::DerivativeField>(f, n + i);

    auto omega_at = [&](const FiberPoint& p) {
        std::vector<double> d(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                d[static_cast<std::size_t>(a * n + b)] =
                    horizontal_derivative(*l[static_cast<std::size_t>(b)], spray, p, a);
        std::vector<double> w(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                w[static_cast<std::size_t>(i * n + j)] = d[static_cast<std::size_t>(j * n + i)] -
                                                         d[static_cast<std::size_t>(i * n + j)];
        return w;
    };

    // Fiber-derivative detector: one more y-derivative of the omega
    // entries; available only while the total order stays within 3.
    bool derivative_test = std::max(spray.coefficient_depth(), f->intrinsic_depth()) + 2 <= 3;
    std::vector<FieldPtr> hd;
    if (derivative_test) {
        hd.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                hd[static_cast<std::size_t>(a * n + b)] = std::make_shared<detail::HorizontalDerivativeField>(
                    spray, l[static_cast<std::size_t>(b)], a);
    }

    MetrizabilityVerdict verdict;
    verdict.problem = Problem::GM;
    verdict.tolerances = tolerances;
    verdict.per_point.resize(static_cast<std::size_t>(count));
    verdict.recovered_omega.resize(static_cast<std::size_t>(count));
    verdict.residuals.reserve(static_cast<std::size_t>(count));
    for (const FiberPoint& p : samples.points)
        verdict.residuals.emplace_back(Valence::Cov1, n, p);
    std::vector<double> spreads(static_cast<std::size_t>(count));
    std::vector<double> iso(static_cast<std::size_t>(count));
    std::vector<double> deriv(static_cast<std::size_t>(count), 0.0);

    parallel_for(count, jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        std::vector<double> w0 = omega_at(p);

        double spread = 0.0;
        for (int m = 1; m <= 2; ++m) {
            std::vector<double> v = detail::fiber_vector(
                samples.config, static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(m * count));
            FiberPoint q(p.x(), std::move(v), samples.config.y_min);
            std::vector<double> wm = omega_at(q);
            for (std::size_t e = 0; e < wm.size(); ++e)
                spread = std::max(spread, std::abs(wm[e] - w0[e]));
        }
        spreads[static_cast<std::size_t>(k)] = spread;

        TensorValue el = euler_lagrange_form(spray, f, p);
        TensorValue res(Valence::Cov1, n, p);
        for (int i = 0; i < n; ++i) {
            double contracted = 0.0;
            for (int j = 0; j < n; ++j)
                contracted += w0[static_cast<std::size_t>(i * n + j)] * p.y()[static_cast<std::size_t>(j)];
            res.at(i) = el.at(i) - contracted;
        }
        iso[static_cast<std::size_t>(k)] = res.max_abs();

        if (derivative_test) {
            std::vector<double> coords = p.coords();
            std::span<const double> span(coords);
            double worst = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    for (int m = 0; m < n; ++m) {
                        double dw =
                            detail::derive1<double>(*hd[static_cast<std::size_t>(j * n + i)], span, n + m) -
                            detail::derive1<double>(*hd[static_cast<std::size_t>(i * n + j)], span, n + m);
                        worst = std::max(worst, std::abs(dw));
                    }
            deriv[static_cast<std::size_t>(k)] = worst;
        }

        verdict.per_point[static_cast<std::size_t>(k)] =
            std::max({spread, res.max_abs(), deriv[static_cast<std::size_t>(k)]});
        verdict.recovered_omega[static_cast<std::size_t>(k)] = std::move(w0);
        verdict.residuals[static_cast<std::size_t>(k)] = std::move(res);
    });

    aggregate(verdict);
    verdict.fiber_spread_max = *std::max_element(spreads.begin(), spreads.end());
    verdict.cross_max = *std::max_element(iso.begin(), iso.end());
    verdict.fiber_derivative_max =
        derivative_test ? *std::max_element(deriv.begin(), deriv.end()) : -1.0;
    if (verdict.fiber_spread_max >= tolerances.fail)
        verdict.warnings.push_back("recovered omega depends on the fiber (spread " +
                                   format_double(verdict.fiber_spread_max) +
                                   "); the spray is not gyroscopic for this metric");
    return verdict;
}

TensorValue hamel_residual(const Spray& spray, const FinslerMetric& metric, const FiberPoint& p) {
    check_pair(spray, metric);
    std::vector<double> coords = p.coords();
    double fv = metric.finsler_function().value(std::span<const double>(coords));
    if (!(fv > 0.0))
        throw DomainError("Finsler function not positive at " + p.to_string());
    return euler_lagrange_form(spray, metric.finsler_function_ptr(), p);
}

Spray make_projective_deformation(const Spray& base, const FieldPtr& factor) {
    if (!factor)
        throw ConfigError("null projective factor");
    if (factor->dimension() != base.dimension())
        throw ConfigError("projective factor dimension does not match the spray");

    SampleSet probes = probe_points(base.dimension());
    for (const FiberPoint& p : probes.points) {
        std::vector<double> coords = p.coords();
        double value = factor->value(std::span<const double>(coords));
        double residual = homogeneity_residual(*factor, 1, p);
        if (std::abs(residual) > 1e-7 * (1.0 + std::abs(value)))
            throw HomogeneityError("projective factor must be 1-homogeneous in y: residual " +
                                   format_double(residual) + " at " + p.to_string());
    }

    int n = base.dimension();
    std::vector<FieldPtr> coefficients;
    coefficients.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        coefficients.push_back(
            std::make_shared<detail::DeformedCoefficientField>(base.coefficient_ptr(i), factor, i));
    return Spray(n, std::move(coefficients));
}

Spray make_projective_deformation(const Spray& base, const std::string& factor) {
    return make_projective_deformation(
        base, std::make_shared<ScalarFieldExpr>(parse_expression(factor, base.dimension())));
}

Spray make_gyroscopic_spray(const FinslerMetric& metric, const std::vector<std::vector<std::string>>& omega) {
    int n = metric.dimension();
    std::vector<FieldPtr> fields = parse_basic_form(omega, n);
    std::vector<FieldPtr> coefficients;
    coefficients.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        coefficients.push_back(std::make_shared<detail::GyroCoefficientField>(
            metric.finsler_function_ptr(), metric.energy_ptr(), fields, i, metric.describe()));
    return Spray(n, std::move(coefficients));
}

} // namespace spraymet
