#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spraymet/field.hpp"

namespace spraymet {

inline constexpr double kDefaultYMin = 0.5;

// A point of the slit tangent bundle in a fixed chart. Enforces the
// fiber floor |y| >= y_min (up to one ulp-scale slack at the boundary);
// everything downstream may assume it.
class FiberPoint {
public:
    FiberPoint(std::vector<double> x, std::vector<double> y, double y_min = kDefaultYMin);

    static FiberPoint from_coords(std::span<const double> coords, double y_min = kDefaultYMin);

    int dimension() const noexcept { return static_cast<int>(x_.size()); }
    const std::vector<double>& x() const noexcept { return x_; }
    const std::vector<double>& y() const noexcept { return y_; }
    double y_min() const noexcept { return y_min_; }
    double fiber_norm() const;

    // Packed (x1..xn, y1..yn), the layout every ScalarField consumes.
    std::vector<double> coords() const;

    std::string to_string() const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    double y_min_;
};

struct SampleConfig {
    std::uint64_t seed = 0;
    int count = 0;
    std::vector<std::array<double, 2>> base_box; // per base coordinate [lo, hi]
    double shell_lo = kDefaultYMin;              // fiber radius range [shell_lo, shell_hi]
    double shell_hi = 2.0;
    double y_min = kDefaultYMin;

    int dimension() const noexcept { return static_cast<int>(base_box.size()); }
};

struct SampleSet {
    SampleConfig config;
    std::vector<FiberPoint> points;
};

// Deterministic low-discrepancy sample of the base box times the fiber
// shell. Same config, same bytes, on any platform.
SampleSet sample_points(const SampleConfig& config);

namespace detail {
// Fiber vector generator behind sample_points, exposed so checkers can
// draw extra fiber directions over a fixed base point deterministically.
std::vector<double> fiber_vector(const SampleConfig& config, std::uint64_t index);
} // namespace detail

// A spray in local coordinates: second-order field with coefficients
// G^i(x, y), each positively 2-homogeneous in y. The integral curves
// solve dx/dt = y, dy/dt = -2 G(x, y).
class Spray {
public:
    Spray(int dimension, std::vector<FieldPtr> coefficients);

    static Spray flat(int dimension);
    static Spray from_expressions(const std::vector<std::string>& sources);

    int dimension() const noexcept { return dim_; }
    const ScalarField& coefficient(int i) const { return *coefficients_.at(static_cast<std::size_t>(i)); }
    FieldPtr coefficient_ptr(int i) const { return coefficients_.at(static_cast<std::size_t>(i)); }

    // Largest intrinsic depth among the coefficients; bounds how many
    // external derivative orders of G are available.
    int coefficient_depth() const;

    std::vector<double> coefficients_at(const FiberPoint& p) const;

private:
    int dim_;
    std::vector<FieldPtr> coefficients_;
};

// |f(x, t y) - t^k f(x, y)| scaled Euler check: returns the residual
//   y^i df/dy^i - k f     at p,
// which vanishes iff f is positively k-homogeneous in y near p.
double homogeneity_residual(const ScalarField& f, int degree, const FiberPoint& p);

struct ResidualReport {
    std::string label;
    double tolerance = 0.0;
    double max_residual = 0.0;
    double mean_residual = 0.0;
    int worst_point = -1;
    bool pass = false;
    std::vector<double> per_point; // max abs residual at each sample point
};

// Euler-degree-2 check of every coefficient over the sample set.
ResidualReport validate_spray(const Spray& spray, const SampleSet& samples, double tolerance, int jobs = 1);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; exceptions
// are rethrown on the caller. Aggregation stays deterministic because
// results are indexed, never reduced concurrently.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

} // namespace spraymet
