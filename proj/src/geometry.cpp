#include "spraymet/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "spraymet/expr.hpp"

namespace spraymet {

FiberPoint::FiberPoint(std::vector<double> x, std::vector<double> y, double y_min)
    : x_(std::move(x)), y_(std::move(y)), y_min_(y_min) {
    if (x_.empty() || x_.size() != y_.size())
        throw ConfigError("fiber point needs matching non-empty x and y");
    if (!(y_min_ > 0.0))
        throw ConfigError("y_min must be positive");
    double norm = fiber_norm();
    if (!(norm >= y_min_ * (1.0 - 1e-12)))
        throw ConfigError("fiber vector with |y| = " + std::to_string(norm) + " below the floor y_min = " +
                          std::to_string(y_min_));
}

FiberPoint FiberPoint::from_coords(std::span<const double> coords, double y_min) {
    if (coords.empty() || coords.size() % 2 != 0)
        throw ConfigError("packed coordinates must have even positive size");
    std::size_t n = coords.size() / 2;
    return FiberPoint(std::vector<double>(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n)),
                      std::vector<double>(coords.begin() + static_cast<std::ptrdiff_t>(n), coords.end()), y_min);
}

double FiberPoint::fiber_norm() const {
    double s = 0.0;
    for (double v : y_)
        s += v * v;
    return std::sqrt(s);
}

std::vector<double> FiberPoint::coords() const {
    std::vector<double> packed(x_);
    packed.insert(packed.end(), y_.begin(), y_.end());
    return packed;
}

std::string FiberPoint::to_string() const {
    std::ostringstream out;
    out.precision(17);
    out << "(x=[";
    for (std::size_t i = 0; i < x_.size(); ++i)
        out << (i ? ", " : "") << x_[i];
    out << "], y=[";
    for (std::size_t i = 0; i < y_.size(); ++i)
        out << (i ? ", " : "") << y_[i];
    out << "])";
    return out.str();
}

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101};

double radical_inverse(std::uint64_t index, int base) {
    double inv_base = 1.0 / base;
    double scale = inv_base;
    double result = 0.0;
    while (index != 0) {
        result += static_cast<double>(index % static_cast<std::uint64_t>(base)) * scale;
        index /= static_cast<std::uint64_t>(base);
        scale *= inv_base;
    }
    return result;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t halton_offset(std::uint64_t seed) {
    return 1 + (splitmix64(seed) & 0xfffffULL); // 2^20 distinct leaps
}

void check_sample_config(const SampleConfig& config) {
    int n = config.dimension();
    if (n < 1)
        throw ConfigError("sample config needs a non-empty base box");
    if (static_cast<std::size_t>(2 * n + 1) > std::size(kPrimes))
        throw ConfigError("sampling supports dimension up to " +
                          std::to_string((std::size(kPrimes) - 1) / 2));
    if (config.count < 1)
        throw ConfigError("sample count must be positive");
    for (const auto& interval : config.base_box)
        if (!(interval[0] <= interval[1]))
            throw ConfigError("empty base box interval");
    if (!(config.shell_lo > 0.0))
        throw ConfigError("fiber shell radius must be positive");
    if (!(config.shell_hi >= config.shell_lo))
        throw ConfigError("fiber shell upper radius below lower radius");
    if (!(config.y_min > 0.0))
        throw ConfigError("y_min must be positive");
    if (config.shell_lo < config.y_min)
        throw ConfigError("fiber shell reaches below y_min");
}

// Dimensions 0..n-1 feed the base point, n..2n-1 the fiber direction,
// 2n the fiber radius.
std::vector<double> fiber_vector_at(const SampleConfig& config, std::uint64_t index) {
    int n = config.dimension();
    std::vector<double> dir(static_cast<std::size_t>(n));
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = radical_inverse(index, kPrimes[n + i]);
        dir[static_cast<std::size_t>(i)] = 2.0 * u - 1.0;
        norm2 += dir[static_cast<std::size_t>(i)] * dir[static_cast<std::size_t>(i)];
    }
    double norm = std::sqrt(norm2);
    if (norm < 1e-6) {
        dir.assign(static_cast<std::size_t>(n), 0.0);
        dir[0] = 1.0;
        norm = 1.0;
    }
    // Radius floor nudged up so rounding in the rescale below can never
    // emit |y| under shell_lo.
    double lo = config.shell_lo * (1.0 + 1e-9);
    double hi = std::max(config.shell_hi, lo);
    double r = lo + radical_inverse(index, kPrimes[2 * n]) * (hi - lo);
    for (double& v : dir)
        v *= r / norm;
    return dir;
}

} // namespace

namespace detail {

std::vector<double> fiber_vector(const SampleConfig& config, std::uint64_t index) {
    check_sample_config(config);
    return fiber_vector_at(config, halton_offset(config.seed) + index);
}

} // namespace detail

SampleSet sample_points(const SampleConfig& config) {
    check_sample_config(config);
    int n = config.dimension();
    std::uint64_t offset = halton_offset(config.seed);
    SampleSet set;
    set.config = config;
    set.points.reserve(static_cast<std::size_t>(config.count));
    for (int k = 0; k < config.count; ++k) {
        std::uint64_t index = offset + static_cast<std::uint64_t>(k);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto& box = config.base_box[static_cast<std::size_t>(i)];
            double u = radical_inverse(index, kPrimes[i]);
            x[static_cast<std::size_t>(i)] = box[0] + u * (box[1] - box[0]);
        }
        set.points.emplace_back(std::move(x), fiber_vector_at(config, index), config.y_min);
    }
    return set;
}

Spray::Spray(int dimension, std::vector<FieldPtr> coefficients) : dim_(dimension) {
    if (dimension < 1)
        throw ConfigError("spray dimension must be positive");
    if (coefficients.size() != static_cast<std::size_t>(dimension))
        throw ConfigError("spray needs exactly one coefficient per dimension");
    for (const FieldPtr& g : coefficients) {
        if (!g)
            throw ConfigError("null spray coefficient");
        if (g->dimension() != dimension)
            throw ConfigError("spray coefficient dimension mismatch");
    }
    coefficients_ = std::move(coefficients);
}

Spray Spray::flat(int dimension) {
    std::vector<FieldPtr> zeros;
    zeros.reserve(static_cast<std::size_t>(dimension));
    for (int i = 0; i < dimension; ++i)
        zeros.push_back(std::make_shared<ScalarFieldExpr>(ScalarFieldExpr::number(dimension, 0.0)));
    return Spray(dimension, std::move(zeros));
}

Spray Spray::from_expressions(const std::vector<std::string>& sources) {
    int n = static_cast<int>(sources.size());
    if (n < 1)
        throw ConfigError("spray needs at least one coefficient expression");
    std::vector<FieldPtr> fields;
    fields.reserve(sources.size());
    for (const std::string& src : sources)
        fields.push_back(std::make_shared<ScalarFieldExpr>(parse_expression(src, n)));
    return Spray(n, std::move(fields));
}

int Spray::coefficient_depth() const {
    int depth = 0;
    for (const FieldPtr& g : coefficients_)
        depth = std::max(depth, g->intrinsic_depth());
    return depth;
}

std::vector<double> Spray::coefficients_at(const FiberPoint& p) const {
    std::vector<double> coords = p.coords();
    std::vector<double> values(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i)
        values[static_cast<std::size_t>(i)] = coefficients_[static_cast<std::size_t>(i)]->value(coords);
    return values;
}

double homogeneity_residual(const ScalarField& f, int degree, const FiberPoint& p) {
    if (degree == 0)
        throw ConfigError("homogeneity degree must be a nonzero integer");
    if (f.dimension() != p.dimension())
        throw ConfigError("field and point dimension mismatch");
    if (f.intrinsic_depth() + 1 > 3)
        throw DepthBudgetError("homogeneity check needs one derivative order on " + f.describe());
    std::vector<double> coords = p.coords();
    int n = p.dimension();
    double euler = 0.0;
    for (int i = 0; i < n; ++i)
        euler += coords[static_cast<std::size_t>(n + i)] * detail::derive1<double>(f, coords, n + i);
    return euler - static_cast<double>(degree) * f.value(coords);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    if (count <= 0)
        return;
    int workers = std::min({jobs, count, static_cast<int>(std::thread::hardware_concurrency() > 0
                                                              ? std::thread::hardware_concurrency()
                                                              : 1u)});
    if (workers <= 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::atomic<bool> failed(false);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                int i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

ResidualReport validate_spray(const Spray& spray, const SampleSet& samples, double tolerance, int jobs) {
    ResidualReport report;
    report.label = "spray 2-homogeneity";
    report.tolerance = tolerance;
    int count = static_cast<int>(samples.points.size());
    report.per_point.assign(static_cast<std::size_t>(count), 0.0);
    std::vector<std::string> failures(static_cast<std::size_t>(count));
    parallel_for(count, jobs, [&](int k) {
        const FiberPoint& p = samples.points[static_cast<std::size_t>(k)];
        try {
            double worst = 0.0;
            for (int i = 0; i < spray.dimension(); ++i)
                worst = std::max(worst, std::abs(homogeneity_residual(spray.coefficient(i), 2, p)));
            report.per_point[static_cast<std::size_t>(k)] = worst;
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " at sample point #" + std::to_string(k) + " " +
                              p.to_string());
        }
    });
    double sum = 0.0;
    for (int k = 0; k < count; ++k) {
        double v = report.per_point[static_cast<std::size_t>(k)];
        sum += v;
        if (v > report.max_residual) {
            report.max_residual = v;
            report.worst_point = k;
        }
    }
    report.mean_residual = count > 0 ? sum / count : 0.0;
    report.pass = report.max_residual <= tolerance;
    return report;
}

} // namespace spraymet
