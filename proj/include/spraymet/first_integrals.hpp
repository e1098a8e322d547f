#pragma once

#include <string>
#include <vector>

#include "spraymet/finsler.hpp"

namespace spraymet {

struct StepControl {
    // Nominal step; the actual step divides t_end evenly so the grid is
    // uniform and the endpoint exact.
    double step = 1e-3;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<FiberPoint> states; // x(t), y(t) with y = dx/dt
    std::string method = "rk4";
    double step = 0.0;
    double endpoint_error = 0.0; // Richardson estimate; -1 when unavailable
    bool truncated = false;      // left the admissible domain before t_end
};

// H^i_j = (F/F~) g^{ik} h~_kj with g the metric of F and h~ the angular
// metric of F~; geodesically invariant when S is geodesic for F and F~
// satisfies the angular invariance. Cross-checked internally against the
// equivalent form (F/F~^3) g^{ik}(g~_kj g~_ls - g~_kl g~_js) y^l y^s.
TensorValue h_tensor(const FinslerMetric& metric, const FinslerMetric& metric_tilde, const FiberPoint& p);

struct CharacteristicData {
    std::vector<double> coefficients;   // elementary symmetric e_1..e_n (e_1 = trace, e_n = det)
    std::vector<double> eigen_real;     // sorted ascending by (re, |im|)
    std::vector<double> eigen_imag_abs; // aligned |im|
    bool complex_spectrum = false;
};

// Characteristic polynomial data of a (1,1) tensor value; coefficients
// come from the trace recursion, eigenvalues from a dense solver.
CharacteristicData characteristic_coefficients(const TensorValue& h);

// Fixed-step 4th-order integration of x'' = -2 G(x, x'). States are
// recorded at every step; a half-step rerun provides the endpoint error
// estimate. Leaving the admissible domain (|y| < y_min or an expression
// domain violation) truncates the trajectory and sets the flag.
Trajectory integrate_geodesic(const Spray& spray, const FiberPoint& start, double t_end,
                              const StepControl& control = {});

struct FirstIntegralSeries {
    std::vector<std::string> names;          // F2, tr_H, tr_H2, c1..cn, eig1..eign
    std::vector<std::vector<double>> values; // values[scalar][state]
    std::vector<double> drift;               // per scalar: max |v - v0| / (1 + |v0|)
    double max_drift = 0.0;
    double max_h_y = 0.0; // max |H^i_j y^j| over all states
    bool complex_spectrum = false;
    bool crossing_detected = false; // sorted-eigenvalue jump above the drift scale
    std::vector<std::string> warnings;
};

// Tracks the spectral scalars of H along the trajectory. Large drift is
// reported, never thrown: it documents a violated invariance hypothesis.
FirstIntegralSeries first_integral_drift(const Spray& spray, const FinslerMetric& metric,
                                         const FinslerMetric& metric_tilde, const Trajectory& trajectory);

// max |(nabla H)^i_j| per sample: the differential counterpart of the
// drift measurement.
ResidualReport nabla_h_residual(const Spray& spray, const FinslerMetric& metric,
                                const FinslerMetric& metric_tilde, const SampleSet& samples,
                                double tolerance = 1e-7, int jobs = 1);

// CSV with columns t, x1..xn, y1..yn, F2, tr_H, tr_H2, c1..cn,
// eig1..eign at 17 significant digits; header always written.
void export_trajectory(const Trajectory& trajectory, const FirstIntegralSeries& series,
                       const std::string& path);

struct ImportedTrajectory {
    Trajectory trajectory;
    FirstIntegralSeries series; // drift statistics recomputed from the file
};

ImportedTrajectory import_trajectory(const std::string& path);

} // namespace spraymet
