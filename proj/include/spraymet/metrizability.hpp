#pragma once

#include <string>
#include <vector>

#include "spraymet/connection.hpp"
#include "spraymet/finsler.hpp"

namespace spraymet {

enum class Problem { FM, PM, GM };
std::string problem_name(Problem problem);

enum class VerdictStatus { Pass, Fail, Inconclusive };
std::string status_name(VerdictStatus status);

// Residuals at or below `pass` are consistent with metrizability at
// sample resolution; at or above `fail` they are a genuine obstruction;
// in between the sampling is too coarse to decide.
struct Tolerances {
    double pass = 1e-7;
    double fail = 1e-3;
};

VerdictStatus classify(double max_residual, const Tolerances& tolerances);

struct MetrizabilityVerdict {
    Problem problem = Problem::FM;
    Tolerances tolerances;
    VerdictStatus status = VerdictStatus::Inconclusive;
    double max_residual = 0.0;
    double mean_residual = 0.0;
    int worst_point = -1;
    std::vector<double> per_point;          // max abs residual component per sample
    std::vector<TensorValue> residuals;     // full residual tensor per sample

    // Problem-specific companions.
    std::vector<double> recovered_p;                  // PM: P at each sample
    std::vector<std::vector<double>> recovered_omega; // GM: row-major omega at each sample
    double cross_max = 0.0;         // FM: max |d_S F^2|; PM: max contracted-identity
                                    // residual; GM: max |d_S F~ - i_S omega|
    double form_gap_max = 0.0;      // angular invariance: gap between the two forms
    double fiber_spread_max = 0.0;  // GM: max omega spread across fiber vectors
    double fiber_derivative_max = -1.0; // GM: max |d omega / dy|, -1 when out of budget
    std::vector<std::string> warnings;

    bool pass() const noexcept { return status == VerdictStatus::Pass; }
};

// (delta_S L)_i = S(dL/dy^i) - dL/dx^i, cross-checked internally against
// the covariant form nabla(dL/dy^i) - delta L/delta x^i (the N terms
// cancel only in exact arithmetic, so agreement to 1e-10 exercises the
// whole stack).
TensorValue euler_lagrange_form(const Spray& spray, const FieldPtr& lagrangian, const FiberPoint& p);

struct LemmaSplit {
    TensorValue symmetric; // nabla(d^2f/dy^i dy^j) - sym part of d sigma/dy
    TensorValue skew;      // delta_j(df/dy^i) - delta_i(df/dy^j) - skew part of d sigma/dy
};

// Residuals of the two equations equivalent to (delta_S f)_i = sigma_i
// for k-homogeneous f and semi-basic sigma; both vanish iff the pair
// satisfies the Euler-Lagrange relation. Homogeneity of f and sigma is
// validated at p first.
LemmaSplit lemma_split_residual(const Spray& spray, const FieldPtr& f, const TensorField& sigma,
                                int degree, const FiberPoint& p);

// sigma_i = omega_ij(x) y^j for a basic 2-form given as expressions in x.
TensorField basic_form_interior_product(const std::vector<std::vector<std::string>>& omega, int dimension);

// Finsler metrizability: nabla g = 0 over the samples (Theorem 1 shape);
// cross-records max |delta_S F^2|, which must agree with the verdict.
MetrizabilityVerdict fm_residual(const Spray& spray, const FinslerMetric& metric, const SampleSet& samples,
                                 const Tolerances& tolerances = {}, int jobs = 1);

// P = S(F~)/(2 F~) at p; the unique projective factor candidate. Its
// 1-homogeneity is re-verified by a scaling test.
double recover_projective_factor(const Spray& spray, const FinslerMetric& metric, const FiberPoint& p);

// Projective metrizability: Levi-Civita residual
//   nabla g~_ij - 2P g~_ij - dP_i (g~y)_j - dP_j (g~y)_i
// with P recovered per point; the contracted consequences on dF~^2/dy
// and delta F~^2/delta x are recorded as cross checks.
MetrizabilityVerdict pm_levicivita_residual(const Spray& spray, const FinslerMetric& metric,
                                            const SampleSet& samples, const Tolerances& tolerances = {},
                                            int jobs = 1);

// Gyroscopic necessary condition: nabla(d^2F~/dy^i dy^j) = 0, computed
// both directly and through the angular metric ratio; the gap between
// the two forms is recorded.
MetrizabilityVerdict angular_invariance_residual(const Spray& spray, const FinslerMetric& metric,
                                                 const SampleSet& samples,
                                                 const Tolerances& tolerances = {}, int jobs = 1);

// Recovers omega_ij = delta_j(dF~/dy^i) - delta_i(dF~/dy^j) at every
// sample, checks it is fiber-independent (three fiber vectors per base
// point, plus d omega/dy when the depth budget allows) and satisfies
// delta_S F~ = i_S omega. Fiber dependence is a verdict failure, not an
// exception. The recovered omega is skew by construction.
MetrizabilityVerdict recover_gyroscopic_form(const Spray& spray, const FinslerMetric& metric,
                                             const SampleSet& samples, const Tolerances& tolerances = {},
                                             int jobs = 1);

// Components of delta_S F~ at p; zero iff S is projectively related to
// the geodesic spray of F~ at sample resolution.
TensorValue hamel_residual(const Spray& spray, const FinslerMetric& metric, const FiberPoint& p);

// Spray with coefficients G^i - P y^i (the spray S with S~ = S - 2PC);
// P must be 1-homogeneous.
Spray make_projective_deformation(const Spray& base, const FieldPtr& factor);
Spray make_projective_deformation(const Spray& base, const std::string& factor);

// Geodesic spray of F~ shifted by Q^j = -(F~/2) g~^{jk} omega_kl y^l, so
// that delta_S F~ = i_S omega; omega entries are expressions in x only
// and must form a skew matrix.
Spray make_gyroscopic_spray(const FinslerMetric& metric, const std::vector<std::vector<std::string>>& omega);

} // namespace spraymet
