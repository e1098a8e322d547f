#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "spraymet/first_integrals.hpp"

using namespace spraymet;

namespace {

SampleSet samples2(int count, std::uint64_t seed) {
    SampleConfig config;
    config.seed = seed;
    config.count = count;
    config.base_box = {{-0.9, 0.9}, {-0.9, 0.9}};
    config.shell_lo = 0.7;
    config.shell_hi = 1.5;
    return sample_points(config);
}

std::string temp_csv(const char* stem) {
    return (std::filesystem::temp_directory_path() / (std::string(stem) + ".csv")).string();
}

} // namespace

TEST_CASE("h tensor of a metric against itself projects off y") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    FiberPoint p({0.0, 0.0}, {1.0, 0.0});
    TensorValue h = h_tensor(metric, metric, p);
    CHECK(h.at(0, 0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(h.at(1, 1) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(h.at(0, 1) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(h.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("h tensor annihilates y and keeps trace n-1 for equal metrics") {
    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    for (const FiberPoint& p : samples2(10, 31).points) {
        TensorValue h = h_tensor(randers, randers, p);
        CHECK(std::abs(h.trace() - 1.0) <= 1e-10);
        for (int i = 0; i < 2; ++i) {
            double hy = h.at(i, 0) * p.y()[0] + h.at(i, 1) * p.y()[1];
            CHECK(std::abs(hy) <= 1e-10);
        }
    }
}

TEST_CASE("characteristic coefficients follow the Faddeev-LeVerrier identities") {
    FiberPoint p({0.0, 0.0}, {1.0, 0.0});
    TensorValue diag(Valence::Mix11, 2, p);
    diag.at(0, 0) = 0.0;
    diag.at(1, 1) = 1.0;
    CharacteristicData data = characteristic_coefficients(diag);
    REQUIRE(data.coefficients.size() == 2);
    CHECK(data.coefficients[0] == doctest::Approx(1.0).epsilon(1e-14)); // trace
    CHECK(data.coefficients[1] == doctest::Approx(0.0).epsilon(1e-14)); // determinant
    CHECK_FALSE(data.complex_spectrum);
    REQUIRE(data.eigen_real.size() == 2);
    CHECK(data.eigen_real[0] == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(data.eigen_real[1] == doctest::Approx(1.0).epsilon(1e-13));

    TensorValue rotation(Valence::Mix11, 2, p);
    rotation.at(0, 1) = 1.0;
    rotation.at(1, 0) = -1.0;
    CharacteristicData spin = characteristic_coefficients(rotation);
    CHECK(spin.coefficients[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(spin.coefficients[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spin.complex_spectrum);

    TensorValue wrong(Valence::Cov2, 2, p);
    CHECK_THROWS_AS(characteristic_coefficients(wrong), ConfigError);
}

TEST_CASE("flat geodesics are straight lines") {
    Spray flat = Spray::flat(2);
    FiberPoint start({0.1, -0.2}, {0.8, 0.6});
    StepControl control;
    control.step = 0.01;
    Trajectory t = integrate_geodesic(flat, start, 1.0, control);
    CHECK_FALSE(t.truncated);
    REQUIRE(t.states.size() == 101);
    const FiberPoint& end = t.states.back();
    CHECK(end.x()[0] == doctest::Approx(0.1 + 0.8).epsilon(1e-12));
    CHECK(end.x()[1] == doctest::Approx(-0.2 + 0.6).epsilon(1e-12));
    CHECK(end.y()[0] == doctest::Approx(0.8).epsilon(1e-13));
    CHECK(end.y()[1] == doctest::Approx(0.6).epsilon(1e-13));
    CHECK(t.endpoint_error >= 0.0);
    CHECK(t.endpoint_error <= 1e-12);
}

TEST_CASE("integration truncates when the fiber floor is reached") {
    // dy/dt = -|y| y shrinks the fiber to the floor in finite time.
    Spray spray = Spray::from_expressions({"0.5*sqrt(y1^2 + y2^2)*y1", "0.5*sqrt(y1^2 + y2^2)*y2"});
    FiberPoint start({0.0, 0.0}, {1.0, 0.0});
    StepControl control;
    control.step = 0.01;
    Trajectory t = integrate_geodesic(spray, start, 2.0, control);
    CHECK(t.truncated);
    CHECK(t.states.size() < 201);
    CHECK(t.states.back().fiber_norm() >= 0.5 * (1.0 - 1e-9));
}

TEST_CASE("integration inputs are validated") {
    Spray flat = Spray::flat(2);
    FiberPoint start({0.0, 0.0}, {1.0, 0.0});
    StepControl bad;
    bad.step = 0.0;
    CHECK_THROWS_AS(integrate_geodesic(flat, start, 1.0, bad), ConfigError);
    StepControl ok;
    CHECK_THROWS_AS(integrate_geodesic(flat, start, 0.0, ok), ConfigError);
    CHECK_THROWS_AS(integrate_geodesic(Spray::flat(3), start, 1.0, ok), ConfigError);
}

TEST_CASE("first integrals stay constant for the flat pair") {
    Spray flat = Spray::flat(2);
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    FiberPoint start({0.1, 0.2}, {0.9, -0.8});
    StepControl control;
    control.step = 1e-3;
    Trajectory t = integrate_geodesic(flat, start, 1.0, control);
    FirstIntegralSeries series = first_integral_drift(flat, euclidean, randers, t);
    REQUIRE(series.names.size() == 3 + 2 + 2);
    CHECK(series.names[0] == "F2");
    CHECK(series.max_drift <= 1e-12);
    CHECK(series.max_h_y <= 1e-10);
    CHECK_FALSE(series.crossing_detected);
    CHECK(series.warnings.empty());
}

TEST_CASE("nabla H detects a base-dependent deformation") {
    Spray flat = Spray::flat(2);
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    SampleSet samples = samples2(8, 33);
    ResidualReport good = nabla_h_residual(flat, euclidean, randers, samples, 1e-7);
    CHECK(good.pass);
    CHECK(good.max_residual <= 1e-9);

    FinslerMetric conformal = FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2");
    ResidualReport bad = nabla_h_residual(flat, euclidean, conformal, samples, 1e-7);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_residual >= 1e-3);
}

TEST_CASE("trajectory export and import round-trip exactly") {
    Spray flat = Spray::flat(2);
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    FiberPoint start({0.3, -0.4}, {1.1, 0.9});
    StepControl control;
    control.step = 0.05;
    Trajectory t = integrate_geodesic(flat, start, 0.5, control);
    FirstIntegralSeries series = first_integral_drift(flat, euclidean, randers, t);

    std::string path = temp_csv("spraymet_roundtrip");
    export_trajectory(t, series, path);
    ImportedTrajectory imported = import_trajectory(path);
    std::remove(path.c_str());

    REQUIRE(imported.trajectory.states.size() == t.states.size());
    for (std::size_t k = 0; k < t.states.size(); ++k) {
        CHECK(imported.trajectory.times[k] == t.times[k]);
        CHECK(imported.trajectory.states[k].x() == t.states[k].x());
        CHECK(imported.trajectory.states[k].y() == t.states[k].y());
    }
    REQUIRE(imported.series.names == series.names);
    for (std::size_t s = 0; s < series.values.size(); ++s)
        for (std::size_t k = 0; k < series.values[s].size(); ++k)
            CHECK(imported.series.values[s][k] == series.values[s][k]);
    CHECK(imported.series.max_drift == doctest::Approx(series.max_drift).epsilon(1e-15));
    CHECK(imported.trajectory.endpoint_error == -1.0);
}

TEST_CASE("trajectory import rejects malformed input") {
    std::string path = temp_csv("spraymet_malformed");
    {
        FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("t,x1,y1,bogus\n0,0,1,2\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(import_trajectory(path), ParseError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(import_trajectory("/nonexistent/spraymet.csv"), Error);
}

TEST_CASE("export refuses mismatched series") {
    Spray flat = Spray::flat(2);
    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    FiberPoint start({0.0, 0.0}, {1.0, 0.0});
    StepControl control;
    control.step = 0.1;
    Trajectory t = integrate_geodesic(flat, start, 0.3, control);
    FirstIntegralSeries series = first_integral_drift(flat, euclidean, euclidean, t);
    series.values[0].pop_back();
    CHECK_THROWS_AS(export_trajectory(t, series, temp_csv("spraymet_bad")), ConfigError);
}
