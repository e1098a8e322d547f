#include "spraymet/finsler.hpp"

#include <cmath>
#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "spraymet/expr.hpp"

#include "derived_fields.hpp"
#include "linalg.hpp"

namespace spraymet {

namespace {

// Relative cutoff separating "numerically zero" singular values (the
// exact null direction of h sits ~1e-16 below the top one).
constexpr double kRankCutoff = 1e-8;

FieldPtr own(ScalarFieldExpr expr) { return std::make_shared<ScalarFieldExpr>(std::move(expr)); }

ScalarFieldExpr fiber_square_sum(int dimension) {
    ScalarFieldExpr sum = ScalarFieldExpr::pow_const(ScalarFieldExpr::fiber_coordinate(dimension, 0), 2.0);
    for (int i = 1; i < dimension; ++i)
        sum = sum + ScalarFieldExpr::pow_const(ScalarFieldExpr::fiber_coordinate(dimension, i), 2.0);
    return sum;
}

void check_dimension(int dimension) {
    if (dimension < 1)
        throw ConfigError("metric dimension must be at least 1");
}

int svd_rank(const Eigen::MatrixXd& m, Eigen::VectorXd& singular_values) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    singular_values = svd.singularValues();
    if (singular_values.size() == 0)
        return 0;
    double cutoff = kRankCutoff * std::max(1.0, singular_values(0));
    int rank = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
        if (singular_values(i) > cutoff)
            ++rank;
    return rank;
}

Eigen::MatrixXd metric_matrix(const FinslerMetric& metric, const FiberPoint& p) {
    std::vector<double> coords = p.coords();
    int n = metric.dimension();
    std::vector<double> g =
        detail::metric_from_energy<double>(metric.energy(), std::span<const double>(coords));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = g[static_cast<std::size_t>(i * n + j)];
    return m;
}

void check_positive(const FinslerMetric& metric, const FiberPoint& p) {
    std::vector<double> coords = p.coords();
    double f = metric.finsler_function().value(std::span<const double>(coords));
    if (!(f > 0.0))
        throw DomainError("Finsler function not positive at " + p.to_string());
}

Eigen::MatrixXd checked_metric_matrix(const FinslerMetric& metric, const FiberPoint& p) {
    check_positive(metric, p);
    Eigen::MatrixXd m = metric_matrix(metric, p);
    Eigen::VectorXd sv;
    int rank = svd_rank(m, sv);
    if (rank < metric.dimension()) {
        std::vector<double> values(sv.data(), sv.data() + sv.size());
        throw DegenerateMetricError("metric tensor is singular at " + p.to_string(), values);
    }
    return m;
}

} // namespace

std::string family_name(MetricFamily family) {
    switch (family) {
    case MetricFamily::Euclidean: return "euclidean";
    case MetricFamily::Riemannian: return "riemannian";
    case MetricFamily::Randers: return "randers";
    case MetricFamily::Conformal: return "conformal";
    case MetricFamily::Custom: return "custom";
    }
    return "unknown";
}

FinslerMetric::FinslerMetric(MetricFamily family, int dimension, FieldPtr f, FieldPtr energy,
                             std::string label)
    : family_(family), dim_(dimension), f_(std::move(f)), energy_(std::move(energy)),
      label_(std::move(label)) {}

std::string FinslerMetric::describe() const { return label_; }

FinslerMetric FinslerMetric::euclidean(int dimension) {
    check_dimension(dimension);
    ScalarFieldExpr energy = fiber_square_sum(dimension);
    ScalarFieldExpr f = ScalarFieldExpr::apply(ExprFunc::Sqrt, energy);
    return FinslerMetric(MetricFamily::Euclidean, dimension, own(std::move(f)), own(std::move(energy)),
                         "euclidean metric (dimension " + std::to_string(dimension) + ")");
}

FinslerMetric FinslerMetric::riemannian(int dimension, const std::vector<std::vector<std::string>>& a) {
    check_dimension(dimension);
    std::size_t n = static_cast<std::size_t>(dimension);
    if (a.size() != n)
        throw ConfigError("riemannian metric needs " + std::to_string(dimension) + " coefficient rows, got " +
                          std::to_string(a.size()));

    // Row i supplies entries a_ij for j >= i, either as the tail of a
    // full row (length n) or as a ragged row (length n - i).
    std::vector<FieldPtr> upper(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t offset;
        if (a[i].size() == n)
            offset = 0;
        else if (a[i].size() == n - i)
            offset = i;
        else
            throw ConfigError("riemannian coefficient row " + std::to_string(i + 1) + " has " +
                              std::to_string(a[i].size()) + " entries; expected " + std::to_string(n) +
                              " or " + std::to_string(n - i));
        for (std::size_t j = i; j < n; ++j) {
            ScalarFieldExpr entry = parse_expression(a[i][j - offset], dimension);
            if (entry.uses_fiber_coordinates())
                throw ConfigError("riemannian coefficient a_" + std::to_string(i + 1) +
                                  std::to_string(j + 1) + " must depend on base coordinates only");
            upper[i * n + j] = own(std::move(entry));
        }
    }

    ScalarFieldExpr energy = ScalarFieldExpr::number(dimension, 0.0);
    bool first = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const auto& entry = static_cast<const ScalarFieldExpr&>(*upper[i * n + j]);
            ScalarFieldExpr term =
                entry * ScalarFieldExpr::fiber_coordinate(dimension, static_cast<int>(i)) *
                ScalarFieldExpr::fiber_coordinate(dimension, static_cast<int>(j));
            if (i != j)
                term = ScalarFieldExpr::scaled(2.0, term);
            energy = first ? std::move(term) : energy + term;
            first = false;
        }
    ScalarFieldExpr f = ScalarFieldExpr::apply(ExprFunc::Sqrt, energy);
    return FinslerMetric(MetricFamily::Riemannian, dimension, own(std::move(f)), own(std::move(energy)),
                         "riemannian metric (dimension " + std::to_string(dimension) + ")");
}

FinslerMetric FinslerMetric::randers(const std::vector<std::vector<double>>& a,
                                     const std::vector<double>& b) {
    int dimension = static_cast<int>(a.size());
    check_dimension(dimension);
    std::size_t n = static_cast<std::size_t>(dimension);
    if (b.size() != n)
        throw ConfigError("randers drift covector has " + std::to_string(b.size()) + " entries; expected " +
                          std::to_string(dimension));

    Eigen::MatrixXd am(dimension, dimension);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != n)
            throw ConfigError("randers matrix row " + std::to_string(i + 1) + " has " +
                              std::to_string(a[i].size()) + " entries; expected " + std::to_string(dimension));
        for (std::size_t j = 0; j < n; ++j)
            am(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j];
    }
    double scale = std::max(1.0, am.cwiseAbs().maxCoeff());
    if ((am - am.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ConfigError("randers matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(am);
    if (llt.info() != Eigen::Success)
        throw ConfigError("randers matrix must be positive definite");
    Eigen::VectorXd bv(dimension);
    for (std::size_t i = 0; i < n; ++i)
        bv(static_cast<Eigen::Index>(i)) = b[i];
    double b_norm2 = bv.dot(llt.solve(bv));
    if (!(b_norm2 < 1.0))
        throw ConfigError("randers drift norm |b|_a = " + format_double(std::sqrt(b_norm2)) +
                          " must be below 1");

    ScalarFieldExpr alpha2 = ScalarFieldExpr::number(dimension, 0.0);
    bool first = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double coeff = (i == j) ? a[i][j] : 2.0 * a[i][j];
            if (coeff == 0.0)
                continue;
            ScalarFieldExpr term = ScalarFieldExpr::scaled(
                coeff, ScalarFieldExpr::fiber_coordinate(dimension, static_cast<int>(i)) *
                           ScalarFieldExpr::fiber_coordinate(dimension, static_cast<int>(j)));
            alpha2 = first ? std::move(term) : alpha2 + term;
            first = false;
        }
    ScalarFieldExpr f = ScalarFieldExpr::apply(ExprFunc::Sqrt, alpha2);
    bool have_beta = false;
    ScalarFieldExpr beta = ScalarFieldExpr::number(dimension, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (b[i] == 0.0)
            continue;
        ScalarFieldExpr term = ScalarFieldExpr::scaled(
            b[i], ScalarFieldExpr::fiber_coordinate(dimension, static_cast<int>(i)));
        beta = have_beta ? beta + term : std::move(term);
        have_beta = true;
    }
    if (have_beta)
        f = f + beta;
    ScalarFieldExpr energy = ScalarFieldExpr::pow_const(f, 2.0);
    return FinslerMetric(MetricFamily::Randers, dimension, own(std::move(f)), own(std::move(energy)),
                         "randers metric (dimension " + std::to_string(dimension) + ")");
}

FinslerMetric FinslerMetric::conformal(int dimension, const std::string& phi) {
    check_dimension(dimension);
    ScalarFieldExpr factor = parse_expression(phi, dimension);
    if (factor.uses_fiber_coordinates())
        throw ConfigError("conformal factor must depend on base coordinates only");
    ScalarFieldExpr square = fiber_square_sum(dimension);
    ScalarFieldExpr energy =
        ScalarFieldExpr::apply(ExprFunc::Exp, ScalarFieldExpr::scaled(2.0, factor)) * square;
    ScalarFieldExpr f = ScalarFieldExpr::apply(ExprFunc::Exp, factor) *
                        ScalarFieldExpr::apply(ExprFunc::Sqrt, square);
    return FinslerMetric(MetricFamily::Conformal, dimension, own(std::move(f)), own(std::move(energy)),
                         "conformal metric exp(" + factor.to_string() + ")|y| (dimension " +
                             std::to_string(dimension) + ")");
}

FinslerMetric FinslerMetric::custom(int dimension, const std::string& f_source) {
    check_dimension(dimension);
    ScalarFieldExpr f = parse_expression(f_source, dimension);
    ScalarFieldExpr energy = ScalarFieldExpr::pow_const(f, 2.0);
    FinslerMetric metric(MetricFamily::Custom, dimension, own(std::move(f)), own(std::move(energy)),
                         "custom metric F = " + f_source + " (dimension " + std::to_string(dimension) + ")");

    // The construction relies on 1-homogeneity in y; probe it before
    // anything downstream can silently misbehave.
    SampleConfig probe;
    probe.seed = 12;
    probe.count = 8;
    probe.base_box.assign(static_cast<std::size_t>(dimension), {-0.5, 0.5});
    probe.shell_lo = 0.7;
    probe.shell_hi = 1.5;
    probe.y_min = 0.5;
    SampleSet samples = sample_points(probe);
    for (const FiberPoint& p : samples.points) {
        std::vector<double> coords = p.coords();
        double value = metric.finsler_function().value(std::span<const double>(coords));
        double residual = homogeneity_residual(metric.finsler_function(), 1, p);
        if (std::abs(residual) > 1e-7 * (1.0 + std::abs(value)))
            throw HomogeneityError("custom Finsler function is not 1-homogeneous in y: residual " +
                                   format_double(residual) + " at " + p.to_string());
    }
    return metric;
}

TensorValue metric_tensor(const FinslerMetric& metric, const FiberPoint& p) {
    Eigen::MatrixXd m = checked_metric_matrix(metric, p);
    int n = metric.dimension();
    TensorValue value(Valence::Cov2, n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            value.at(i, j) = m(i, j);
    return value;
}

TensorValue inverse_metric_tensor(const FinslerMetric& metric, const FiberPoint& p) {
    Eigen::MatrixXd m = checked_metric_matrix(metric, p);
    Eigen::MatrixXd inv = m.inverse();
    int n = metric.dimension();
    TensorValue value(Valence::Con2, n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            value.at(i, j) = inv(i, j);
    return value;
}

TensorValue angular_metric(const FinslerMetric& metric, const FiberPoint& p) {
    check_positive(metric, p);
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);
    int n = metric.dimension();
    const ScalarField& f = metric.finsler_function();
    double fv = f.value(span);
    TensorValue value(Valence::Cov2, n, p);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double h = fv * detail::derive2<double>(f, span, n + i, n + j);
            value.at(i, j) = h;
            value.at(j, i) = h;
        }
    return value;
}

TensorField metric_tensor_field(const FinslerMetric& metric) {
    int n = metric.dimension();
    std::vector<FieldPtr> components(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            FieldPtr c = std::make_shared<detail::MetricComponentField>(metric.energy_ptr(), i, j,
                                                                        metric.describe());
            components[static_cast<std::size_t>(i * n + j)] = c;
            components[static_cast<std::size_t>(j * n + i)] = c;
        }
    return TensorField::cov2(n, std::move(components));
}

Spray geodesic_spray(const FinslerMetric& metric) {
    int n = metric.dimension();
    std::vector<FieldPtr> coefficients;
    coefficients.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        coefficients.push_back(
            std::make_shared<detail::GeodesicCoefficientField>(metric.energy_ptr(), i, metric.describe()));
    return Spray(n, std::move(coefficients));
}

RegularityReport check_regularity(const FinslerMetric& metric, const SampleSet& samples, int jobs) {
    int n = metric.dimension();
    RegularityReport report;
    report.entries.resize(samples.points.size());
    parallel_for(static_cast<int>(samples.points.size()), jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        RegularityEntry& entry = report.entries[static_cast<std::size_t>(k)];
        entry.point = k;
        try {
            std::vector<double> coords = p.coords();
            std::span<const double> span(coords);
            double fv = metric.finsler_function().value(span);
            entry.f_positive = fv > 0.0;

            Eigen::MatrixXd g = metric_matrix(metric, p);
            Eigen::VectorXd sv;
            entry.rank_g = svd_rank(g, sv);
            entry.min_singular_g = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;

            if (entry.f_positive) {
                Eigen::MatrixXd h(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        double v = fv * detail::derive2<double>(metric.finsler_function(), span, n + i, n + j);
                        h(i, j) = v;
                        h(j, i) = v;
                    }
                Eigen::VectorXd hsv;
                entry.rank_h = svd_rank(h, hsv);
            }
            entry.ok = entry.f_positive && entry.rank_g == n && entry.rank_h == n - 1;
        } catch (const DomainError&) {
            entry.ok = false;
        }
    });
    for (const RegularityEntry& entry : report.entries)
        if (!entry.ok)
            ++report.failures;
    report.pass = report.failures == 0;
    return report;
}

} // namespace spraymet
