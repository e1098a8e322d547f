#include "spraymet/first_integrals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "spraymet/connection.hpp"
#include "spraymet/expr.hpp"

#include "derived_fields.hpp"
#include "linalg.hpp"

namespace spraymet {

namespace {

// 17 significant digits: enough to reproduce the exact double on import.
std::string full_precision(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
    return std::string(buffer, end);
}

Eigen::MatrixXd mix11_matrix(const TensorValue& value) {
    int n = value.dimension();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = value.at(i, j);
    return m;
}

// Drift, crossing guard and the derived warnings, all recomputable from
// the raw series (so an export/import round trip reproduces them).
void finalize_series(FirstIntegralSeries& series, int dimension) {
    std::size_t scalars = series.values.size();
    series.drift.assign(scalars, 0.0);
    series.max_drift = 0.0;
    for (std::size_t s = 0; s < scalars; ++s) {
        const std::vector<double>& v = series.values[s];
        if (v.empty())
            continue;
        double v0 = v.front();
        double scale = 1.0 + std::abs(v0);
        double worst = 0.0;
        for (double value : v)
            worst = std::max(worst, std::abs(value - v0) / scale);
        series.drift[s] = worst;
        series.max_drift = std::max(series.max_drift, worst);
    }

    // Sorted eigenvalue series must move on the scale the symmetric
    // functions do; a jump an order beyond that is a sort crossing.
    std::size_t coeff_begin = 3;
    std::size_t eig_begin = coeff_begin + static_cast<std::size_t>(dimension);
    double coeff_drift = 0.0;
    for (std::size_t s = coeff_begin; s < eig_begin && s < scalars; ++s)
        coeff_drift = std::max(coeff_drift, series.drift[s]);
    series.crossing_detected = false;
    double bound = 10.0 * (coeff_drift + 1e-12);
    for (std::size_t s = eig_begin; s < scalars; ++s) {
        const std::vector<double>& v = series.values[s];
        for (std::size_t k = 1; k < v.size(); ++k)
            if (std::abs(v[k] - v[k - 1]) > bound * (1.0 + std::abs(v[k - 1]))) {
                series.crossing_detected = true;
                break;
            }
        if (series.crossing_detected)
            break;
    }

    series.warnings.clear();
    if (series.max_drift > 1e-3)
        series.warnings.push_back("first integrals drift by " + format_double(series.max_drift) +
                                  "; an invariance hypothesis on the (spray, F, F~) triple fails");
    if (series.crossing_detected)
        series.warnings.push_back("sorted eigenvalue series jumps beyond the drift scale; "
                                  "use the characteristic coefficients across the crossing");
}

} // namespace

TensorValue h_tensor(const FinslerMetric& metric, const FinslerMetric& metric_tilde, const FiberPoint& p) {
    if (metric.dimension() != metric_tilde.dimension())
        throw ConfigError("the two metrics must share a dimension");
    int n = metric.dimension();
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);

    double f = metric.finsler_function().value(span);
    double ft = metric_tilde.finsler_function().value(span);
    if (!(f > 0.0) || !(ft > 0.0))
        throw DomainError("Finsler function not positive at " + p.to_string());

    TensorValue g = metric_tensor(metric, p); // rank-checked
    Eigen::MatrixXd gm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gm(i, j) = g.at(i, j);
    Eigen::MatrixXd ginv = gm.inverse();

    Eigen::MatrixXd ht(n, n);
    const ScalarField& ftf = metric_tilde.finsler_function();
    for (int k = 0; k < n; ++k)
        for (int j = k; j < n; ++j) {
            double v = ft * detail::derive2<double>(ftf, span, n + k, n + j);
            ht(k, j) = v;
            ht(j, k) = v;
        }

    Eigen::MatrixXd h = (f / ft) * (ginv * ht);

    // Equivalent form through the tilde metric tensor; the agreement
    // exercises g~ = h~ + l~ l~ and the homogeneity identities at once.
    std::vector<double> gt =
        detail::metric_from_energy<double>(metric_tilde.energy(), span);
    Eigen::MatrixXd gtm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gtm(i, j) = gt[static_cast<std::size_t>(i * n + j)];
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y(i) = p.y()[static_cast<std::size_t>(i)];
    Eigen::VectorXd gty = gtm * y;
    double ft2 = y.dot(gty);
    Eigen::MatrixXd cross = (f / (ft * ft * ft)) * (ginv * (ft2 * gtm - gty * gty.transpose()));
    double gap = (h - cross).cwiseAbs().maxCoeff();
    if (gap > 1e-9 * (1.0 + h.cwiseAbs().maxCoeff()))
        throw Error("H tensor cross-check failed: the two forms differ by " + format_double(gap) +
                    " at " + p.to_string());

    TensorValue out(Valence::Mix11, n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.at(i, j) = h(i, j);
    return out;
}

CharacteristicData characteristic_coefficients(const TensorValue& h) {
    if (h.valence() != Valence::Mix11)
        throw ConfigError("characteristic coefficients need a (1,1) tensor value");
    int n = h.dimension();
    Eigen::MatrixXd a = mix11_matrix(h);

    CharacteristicData data;
    data.coefficients.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    double c = 1.0;
    for (int k = 1; k <= n; ++k) {
        m = a * m + c * Eigen::MatrixXd::Identity(n, n);
        c = -(a * m).trace() / static_cast<double>(k);
        data.coefficients[static_cast<std::size_t>(k - 1)] = (k % 2 == 0) ? c : -c;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
    std::vector<std::pair<double, double>> eigen(static_cast<std::size_t>(n));
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
        eigen[static_cast<std::size_t>(i)] = {solver.eigenvalues()(i).real(),
                                              std::abs(solver.eigenvalues()(i).imag())};
        scale = std::max(scale, std::abs(solver.eigenvalues()(i).real()));
    }
    std::sort(eigen.begin(), eigen.end());
    data.eigen_real.resize(static_cast<std::size_t>(n));
    data.eigen_imag_abs.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        data.eigen_real[static_cast<std::size_t>(i)] = eigen[static_cast<std::size_t>(i)].first;
        data.eigen_imag_abs[static_cast<std::size_t>(i)] = eigen[static_cast<std::size_t>(i)].second;
        if (eigen[static_cast<std::size_t>(i)].second > 1e-9 * (1.0 + scale))
            data.complex_spectrum = true;
    }
    return data;
}

namespace {

// One RK4 pass; returns false when the trajectory leaves the admissible
// domain (the output then holds the last good state).
bool rk4_run(const Spray& spray, std::vector<double> z, double h, long long steps, double y_min,
             Trajectory* record, std::vector<double>* endpoint) {
    int n = spray.dimension();
    std::size_t m = static_cast<std::size_t>(2 * n);

    auto rhs = [&](const std::vector<double>& state) {
        std::vector<double> d(m);
        std::span<const double> span(state);
        for (int i = 0; i < n; ++i) {
            d[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(n + i)];
            d[static_cast<std::size_t>(n + i)] = -2.0 * spray.coefficient(i).value(span);
        }
        return d;
    };
    auto shifted = [&](const std::vector<double>& state, const std::vector<double>& d, double factor) {
        std::vector<double> out(m);
        for (std::size_t i = 0; i < m; ++i)
            out[i] = state[i] + factor * d[i];
        return out;
    };
    auto fiber_norm = [&](const std::vector<double>& state) {
        double sq = 0.0;
        for (int i = 0; i < n; ++i)
            sq += state[static_cast<std::size_t>(n + i)] * state[static_cast<std::size_t>(n + i)];
        return std::sqrt(sq);
    };

    for (long long k = 0; k < steps; ++k) {
        std::vector<double> z_next;
        try {
            std::vector<double> k1 = rhs(z);
            std::vector<double> k2 = rhs(shifted(z, k1, 0.5 * h));
            std::vector<double> k3 = rhs(shifted(z, k2, 0.5 * h));
            std::vector<double> k4 = rhs(shifted(z, k3, h));
            z_next.resize(m);
            for (std::size_t i = 0; i < m; ++i)
                z_next[i] = z[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        } catch (const DomainError&) {
            if (endpoint)
                *endpoint = z;
            return false;
        }
        if (fiber_norm(z_next) < y_min * (1.0 - 1e-12)) {
            if (endpoint)
                *endpoint = z;
            return false;
        }
        z = std::move(z_next);
        if (record) {
            record->times.push_back(static_cast<double>(k + 1) * h);
            record->states.push_back(FiberPoint::from_coords(std::span<const double>(z), y_min));
        }
    }
    if (endpoint)
        *endpoint = z;
    return true;
}

} // namespace

Trajectory integrate_geodesic(const Spray& spray, const FiberPoint& start, double t_end,
                              const StepControl& control) {
    if (!(t_end > 0.0))
        throw ConfigError("integration horizon must be positive");
    if (!(control.step > 0.0))
        throw ConfigError("integration step must be positive");
    if (start.dimension() != spray.dimension())
        throw ConfigError("initial point dimension does not match the spray");

    long long steps = std::max<long long>(1, std::llround(t_end / control.step));
    double h = t_end / static_cast<double>(steps);

    Trajectory trajectory;
    trajectory.method = "rk4";
    trajectory.step = h;
    trajectory.times.push_back(0.0);
    trajectory.states.push_back(start);

    std::vector<double> z = start.coords();
    bool complete = rk4_run(spray, z, h, steps, start.y_min(), &trajectory, nullptr);
    trajectory.truncated = !complete;

    trajectory.endpoint_error = -1.0;
    if (complete) {
        std::vector<double> fine;
        if (rk4_run(spray, start.coords(), 0.5 * h, 2 * steps, start.y_min(), nullptr, &fine)) {
            const std::vector<double> coarse = trajectory.states.back().coords();
            double gap = 0.0;
            for (std::size_t i = 0; i < coarse.size(); ++i)
                gap = std::max(gap, std::abs(coarse[i] - fine[i]));
            trajectory.endpoint_error = gap * 16.0 / 15.0;
        }
    }
    return trajectory;
}

FirstIntegralSeries first_integral_drift(const Spray& spray, const FinslerMetric& metric,
                                         const FinslerMetric& metric_tilde, const Trajectory& trajectory) {
    if (metric.dimension() != spray.dimension() || metric_tilde.dimension() != spray.dimension())
        throw ConfigError("metrics must share the spray dimension");
    int n = spray.dimension();

    FirstIntegralSeries series;
    series.names = {"F2", "tr_H", "tr_H2"};
    for (int i = 1; i <= n; ++i)
        series.names.push_back("c" + std::to_string(i));
    for (int i = 1; i <= n; ++i)
        series.names.push_back("eig" + std::to_string(i));
    series.values.assign(series.names.size(), {});
    for (std::vector<double>& v : series.values)
        v.reserve(trajectory.states.size());

    for (const FiberPoint& p : trajectory.states) {
        std::vector<double> coords = p.coords();
        double energy = metric.energy().value(std::span<const double>(coords));

        TensorValue h = h_tensor(metric, metric_tilde, p);
        Eigen::MatrixXd hm = mix11_matrix(h);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i)
            y(i) = p.y()[static_cast<std::size_t>(i)];
        series.max_h_y = std::max(series.max_h_y, (hm * y).cwiseAbs().maxCoeff());

        CharacteristicData cd = characteristic_coefficients(h);
        series.complex_spectrum = series.complex_spectrum || cd.complex_spectrum;

        std::size_t s = 0;
        series.values[s++].push_back(energy);
        series.values[s++].push_back(hm.trace());
        series.values[s++].push_back((hm * hm).trace());
        for (int i = 0; i < n; ++i)
            series.values[s++].push_back(cd.coefficients[static_cast<std::size_t>(i)]);
        for (int i = 0; i < n; ++i)
            series.values[s++].push_back(cd.eigen_real[static_cast<std::size_t>(i)]);
    }

    finalize_series(series, n);
    return series;
}

ResidualReport nabla_h_residual(const Spray& spray, const FinslerMetric& metric,
                                const FinslerMetric& metric_tilde, const SampleSet& samples,
                                double tolerance, int jobs) {
    if (metric.dimension() != spray.dimension() || metric_tilde.dimension() != spray.dimension())
        throw ConfigError("metrics must share the spray dimension");
    int n = spray.dimension();
    RegularityReport reg = check_regularity(metric, samples, jobs);
    RegularityReport reg_tilde = check_regularity(metric_tilde, samples, jobs);
    if (!reg.pass || !reg_tilde.pass)
        throw DegenerateMetricError("a metric fails regularity over the sample set", {});

    std::vector<FieldPtr> components(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            components[static_cast<std::size_t>(i * n + j)] = std::make_shared<detail::HTensorComponentField>(
                metric.finsler_function_ptr(), metric.energy_ptr(), metric_tilde.finsler_function_ptr(), i,
                j);
    TensorField h = TensorField::mix11(n, std::move(components));

    ResidualReport report;
    report.label = "nabla H";
    report.tolerance = tolerance;
    report.per_point.resize(samples.points.size());
    parallel_for(static_cast<int>(samples.points.size()), jobs, [&](int k) {
        report.per_point[static_cast<std::size_t>(k)] =
            dynamical_covariant_derivative(h, spray, samples.points[static_cast<std::size_t>(k)]).max_abs();
    });

    report.max_residual = 0.0;
    report.mean_residual = 0.0;
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
    report.pass = report.max_residual <= tolerance;
    return report;
}

void export_trajectory(const Trajectory& trajectory, const FirstIntegralSeries& series,
                       const std::string& path) {
    for (const std::vector<double>& v : series.values)
        if (v.size() != trajectory.states.size())
            throw ConfigError("series length does not match the trajectory");
    if (series.names.size() != series.values.size() || series.names.size() < 3 ||
        (series.names.size() - 3) % 2 != 0)
        throw ConfigError("malformed first-integral series");
    int n = static_cast<int>((series.names.size() - 3) / 2);
    if (!trajectory.states.empty() && trajectory.states.front().dimension() != n)
        throw ConfigError("series dimension does not match the trajectory");

    std::ofstream out(path);
    if (!out)
        throw Error("cannot open " + path + " for writing");

    out << "t";
    for (int i = 1; i <= n; ++i)
        out << ",x" << i;
    for (int i = 1; i <= n; ++i)
        out << ",y" << i;
    for (const std::string& name : series.names)
        out << "," << name;
    out << "\n";

    for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
        out << full_precision(trajectory.times[k]);
        const FiberPoint& p = trajectory.states[k];
        for (int i = 0; i < n; ++i)
            out << "," << full_precision(p.x()[static_cast<std::size_t>(i)]);
        for (int i = 0; i < n; ++i)
            out << "," << full_precision(p.y()[static_cast<std::size_t>(i)]);
        for (const std::vector<double>& v : series.values)
            out << "," << full_precision(v[k]);
        out << "\n";
    }
    if (!out)
        throw Error("write to " + path + " failed");
}

ImportedTrajectory import_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path);

    std::string header;
    if (!std::getline(in, header))
        throw ParseError("empty trajectory file", 0);
    std::vector<std::string> columns;
    {
        std::stringstream ss(header);
        std::string item;
        while (std::getline(ss, item, ','))
            columns.push_back(item);
    }
    if (columns.size() < 8 || columns[0] != "t" || columns.size() % 4 != 0)
        throw ParseError("unrecognized trajectory header: " + header, 0);
    int n = static_cast<int>((columns.size() - 4) / 4);

    ImportedTrajectory imported;
    imported.series.names.assign(columns.begin() + 1 + 2 * n, columns.end());
    imported.series.values.assign(imported.series.names.size(), {});

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        row.reserve(columns.size());
        const char* cursor = line.data();
        const char* end = line.data() + line.size();
        while (cursor <= end) {
            const char* stop = cursor;
            while (stop < end && *stop != ',')
                ++stop;
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(cursor, stop, value);
            if (ec != std::errc() || ptr != stop)
                throw ParseError("bad number in trajectory row: " + line,
                                 static_cast<std::size_t>(cursor - line.data()));
            row.push_back(value);
            if (stop == end)
                break;
            cursor = stop + 1;
        }
        if (row.size() != columns.size())
            throw ParseError("trajectory row has " + std::to_string(row.size()) + " fields; expected " +
                                 std::to_string(columns.size()),
                             0);

        imported.trajectory.times.push_back(row[0]);
        std::vector<double> x(row.begin() + 1, row.begin() + 1 + n);
        std::vector<double> y(row.begin() + 1 + n, row.begin() + 1 + 2 * n);
        double norm = 0.0;
        for (double value : y)
            norm += value * value;
        norm = std::sqrt(norm);
        imported.trajectory.states.emplace_back(std::move(x), std::move(y),
                                                std::min(kDefaultYMin, norm * (1.0 - 1e-9)));
        for (std::size_t s = 0; s < imported.series.values.size(); ++s)
            imported.series.values[s].push_back(row[1 + 2 * static_cast<std::size_t>(n) + s]);
    }

    if (imported.trajectory.times.size() > 1)
        imported.trajectory.step = imported.trajectory.times[1] - imported.trajectory.times[0];
    imported.trajectory.endpoint_error = -1.0;
    finalize_series(imported.series, n);
    return imported;
}

} // namespace spraymet
