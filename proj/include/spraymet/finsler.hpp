#pragma once

#include <string>
#include <vector>

#include "spraymet/tensor.hpp"

namespace spraymet {

enum class MetricFamily { Euclidean, Riemannian, Randers, Conformal, Custom };

std::string family_name(MetricFamily family);

// A Finsler structure F on T0M together with its energy E = F^2, both
// expression-backed (depth 0), so the metric tensor and the geodesic
// coefficients stay inside the 3-order derivative budget.
class FinslerMetric {
public:
    // F = |y|
    static FinslerMetric euclidean(int dimension);
    // F = sqrt(a_ij(x) y^i y^j); entries are expressions in x only and
    // are read from the upper triangle (the rest mirrored).
    static FinslerMetric riemannian(int dimension, const std::vector<std::vector<std::string>>& a);
    // F = sqrt(a_ij y^i y^j) + b_i y^i with constant a, b, |b|_a < 1.
    static FinslerMetric randers(const std::vector<std::vector<double>>& a, const std::vector<double>& b);
    // F = exp(phi(x)) |y|
    static FinslerMetric conformal(int dimension, const std::string& phi);
    // F supplied directly as an expression; must be 1-homogeneous in y
    // (validated at probe points).
    static FinslerMetric custom(int dimension, const std::string& f_source);

    MetricFamily family() const noexcept { return family_; }
    int dimension() const noexcept { return dim_; }

    const ScalarField& finsler_function() const { return *f_; }
    FieldPtr finsler_function_ptr() const { return f_; }
    const ScalarField& energy() const { return *energy_; }
    FieldPtr energy_ptr() const { return energy_; }

    std::string describe() const;

private:
    FinslerMetric(MetricFamily family, int dimension, FieldPtr f, FieldPtr energy, std::string label);

    MetricFamily family_;
    int dim_;
    FieldPtr f_;
    FieldPtr energy_;
    std::string label_;
};

// g_ij = 1/2 d^2 F^2 / dy^i dy^j; throws DegenerateMetricError (with the
// singular values) when rank g < n, DomainError when F(p) <= 0.
TensorValue metric_tensor(const FinslerMetric& metric, const FiberPoint& p);
TensorValue inverse_metric_tensor(const FinslerMetric& metric, const FiberPoint& p);

// h_ij = F d^2 F / dy^i dy^j = g_ij - l_i l_j; satisfies h y = 0.
TensorValue angular_metric(const FinslerMetric& metric, const FiberPoint& p);

// The metric tensor as a (0,2) tensor field (components within depth 2).
TensorField metric_tensor_field(const FinslerMetric& metric);

// Geodesic spray of F: G^i = 1/4 g^{ik} (d^2F^2/dy^k dx^h y^h - dF^2/dx^k).
Spray geodesic_spray(const FinslerMetric& metric);

struct RegularityEntry {
    int point = -1;
    bool f_positive = false;
    int rank_g = 0;
    int rank_h = 0;
    double min_singular_g = 0.0;
    bool ok = false;
};

struct RegularityReport {
    std::vector<RegularityEntry> entries;
    int failures = 0;
    bool pass = false;
};

// F > 0, rank g = n, rank h = n-1 at every sample point.
RegularityReport check_regularity(const FinslerMetric& metric, const SampleSet& samples, int jobs = 1);

} // namespace spraymet
