#include <doctest.h>

#include <cmath>
#include <memory>

#include "spraymet/connection.hpp"
#include "spraymet/expr.hpp"
#include "spraymet/metrizability.hpp"

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

FinslerMetric conformal2() { return FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"); }

const std::vector<std::vector<std::string>> kOmega0 = {{"0", "0.3"}, {"-0.3", "0"}};

struct SignFaultGuard {
    ~SignFaultGuard() { testing::set_connection_sign_fault(false); }
};

} // namespace

TEST_CASE("classify respects the tolerance bands") {
    Tolerances t;
    CHECK(classify(1e-9, t) == VerdictStatus::Pass);
    CHECK(classify(1e-5, t) == VerdictStatus::Inconclusive);
    CHECK(classify(1e-2, t) == VerdictStatus::Fail);
    Tolerances bad;
    bad.fail = bad.pass;
    CHECK_THROWS_AS(classify(1.0, bad), ConfigError);
}

TEST_CASE("geodesic sprays are Finsler metrizable by their own metric") {
    SampleSet samples = samples2(8, 21);
    for (const FinslerMetric& metric :
         {FinslerMetric::euclidean(2), conformal2(),
          FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0})}) {
        Spray spray = geodesic_spray(metric);
        MetrizabilityVerdict verdict = fm_residual(spray, metric, samples);
        CHECK(verdict.status == VerdictStatus::Pass);
        CHECK(verdict.max_residual <= 1e-7);
        CHECK(verdict.cross_max <= 1e-7);
        CHECK(verdict.warnings.empty());
        CHECK(verdict.per_point.size() == samples.points.size());
    }
}

TEST_CASE("a perturbed flat spray is not metrizable by the euclidean metric") {
    SampleSet samples = samples2(8, 22);
    Spray spray = Spray::from_expressions({"0.1*y1^2", "0"});
    MetrizabilityVerdict verdict = fm_residual(spray, FinslerMetric::euclidean(2), samples);
    CHECK(verdict.status == VerdictStatus::Fail);
    CHECK(verdict.max_residual >= 1e-3);
}

TEST_CASE("a connection sign fault is caught by the forward fixtures") {
    SampleSet samples = samples2(8, 23);
    FinslerMetric metric = conformal2();
    Spray spray = geodesic_spray(metric);
    SignFaultGuard guard;
    testing::set_connection_sign_fault(true);
    MetrizabilityVerdict verdict = fm_residual(spray, metric, samples);
    CHECK(verdict.status == VerdictStatus::Fail);
    CHECK(verdict.max_residual >= 1e-3);
}

TEST_CASE("projective deformations pass the Levi-Civita test with the right factor") {
    SampleSet samples = samples2(8, 24);
    FinslerMetric metric = conformal2();
    Spray spray = make_projective_deformation(geodesic_spray(metric), "sqrt(y1^2 + y2^2)");
    MetrizabilityVerdict verdict = pm_levicivita_residual(spray, metric, samples);
    CHECK(verdict.status == VerdictStatus::Pass);
    REQUIRE(verdict.recovered_p.size() == samples.points.size());
    for (std::size_t k = 0; k < samples.points.size(); ++k)
        CHECK(verdict.recovered_p[k] ==
              doctest::Approx(samples.points[k].fiber_norm()).epsilon(1e-9));
}

TEST_CASE("the recovered projective factor is 1-homogeneous or the call throws") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    Spray spray = make_projective_deformation(geodesic_spray(metric), "0.2*y1 - 0.1*y2");
    FiberPoint p({0.1, 0.3}, {1.1, -0.6});
    CHECK(recover_projective_factor(spray, metric, p) ==
          doctest::Approx(0.2 * 1.1 + 0.1 * 0.6).epsilon(1e-11));
}

TEST_CASE("projective deformation validates the factor") {
    Spray base = Spray::flat(2);
    CHECK_THROWS_AS(make_projective_deformation(base, "y1^2"), HomogeneityError);
    CHECK_THROWS_AS(make_projective_deformation(base, "x1"), HomogeneityError);
}

TEST_CASE("gyroscopic sprays carry the expected coefficients") {
    // Q^j = -(F/2) g^{jk} omega_kl y^l over the euclidean metric gives
    // G^1 = -0.15 |y| y2, G^2 = +0.15 |y| y1.
    Spray spray = make_gyroscopic_spray(FinslerMetric::euclidean(2), kOmega0);
    FiberPoint p({0.2, -0.7}, {0.8, 1.3});
    double norm = p.fiber_norm();
    std::vector<double> g = spray.coefficients_at(p);
    CHECK(g[0] == doctest::Approx(-0.15 * norm * 1.3).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.15 * norm * 0.8).epsilon(1e-12));
}

TEST_CASE("gyroscopic recovery finds the injected form") {
    SampleSet samples = samples2(8, 25);
    FinslerMetric metric = FinslerMetric::euclidean(2);
    Spray spray = make_gyroscopic_spray(metric, kOmega0);

    MetrizabilityVerdict angular = angular_invariance_residual(spray, metric, samples);
    CHECK(angular.status == VerdictStatus::Pass);
    CHECK(angular.form_gap_max <= 1e-9);

    MetrizabilityVerdict recovered = recover_gyroscopic_form(spray, metric, samples);
    CHECK(recovered.status == VerdictStatus::Pass);
    CHECK(recovered.fiber_spread_max <= 1e-8);
    REQUIRE(recovered.recovered_omega.size() == samples.points.size());
    for (const auto& w : recovered.recovered_omega) {
        CHECK(w[1] == doctest::Approx(0.3).epsilon(1e-8));
        CHECK(w[2] == doctest::Approx(-0.3).epsilon(1e-8));
        CHECK(std::abs(w[0]) <= 1e-9);
        CHECK(std::abs(w[3]) <= 1e-9);
    }
}

TEST_CASE("the hamel residual of a gyroscopic spray is the interior product") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    Spray spray = make_gyroscopic_spray(metric, kOmega0);
    FiberPoint p({0.4, 0.1}, {1.2, -0.5});
    TensorValue sigma = hamel_residual(spray, metric, p);
    CHECK(sigma.at(0) == doctest::Approx(0.3 * -0.5).epsilon(1e-9));
    CHECK(sigma.at(1) == doctest::Approx(-0.3 * 1.2).epsilon(1e-9));
}

TEST_CASE("a flat spray fails the gyroscopic detectors for a conformal metric") {
    SampleSet samples = samples2(8, 26);
    FinslerMetric metric = conformal2();
    Spray flat = Spray::flat(2);
    MetrizabilityVerdict angular = angular_invariance_residual(flat, metric, samples);
    CHECK(angular.status == VerdictStatus::Fail);
    CHECK(angular.max_residual >= 1e-3);
    MetrizabilityVerdict recovered = recover_gyroscopic_form(flat, metric, samples);
    CHECK(recovered.status == VerdictStatus::Fail);
    CHECK(recovered.fiber_spread_max >= 1e-3);
}

TEST_CASE("euler-lagrange form vanishes on shell") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    Spray flat = Spray::flat(2);
    FiberPoint p({0.3, 0.9}, {0.7, 0.8});
    TensorValue el = euler_lagrange_form(flat, metric.energy_ptr(), p);
    CHECK(el.max_abs() <= 1e-12);
}

TEST_CASE("lemma split residuals vanish for both specializations") {
    FiberPoint p({0.2, -0.3}, {1.1, 0.6});
    FieldPtr zero = std::make_shared<ScalarFieldExpr>(ScalarFieldExpr::number(2, 0.0));
    TensorField zero_sigma = TensorField::covector(2, {zero, zero});

    FinslerMetric metric = conformal2();
    Spray geodesic = geodesic_spray(metric);
    LemmaSplit fm = lemma_split_residual(geodesic, metric.energy_ptr(), zero_sigma, 2, p);
    CHECK(fm.symmetric.max_abs() <= 1e-9);
    CHECK(fm.skew.max_abs() <= 1e-9);

    FinslerMetric euclidean = FinslerMetric::euclidean(2);
    Spray gyro = make_gyroscopic_spray(euclidean, kOmega0);
    TensorField sigma = basic_form_interior_product(kOmega0, 2);
    LemmaSplit gm = lemma_split_residual(gyro, euclidean.finsler_function_ptr(), sigma, 1, p);
    CHECK(gm.symmetric.max_abs() <= 1e-9);
    CHECK(gm.skew.max_abs() <= 1e-9);

    CHECK_THROWS_AS(lemma_split_residual(geodesic, metric.energy_ptr(), zero_sigma, 0, p), ConfigError);
    CHECK_THROWS_AS(lemma_split_residual(geodesic, metric.energy_ptr(), zero_sigma, 1, p),
                    HomogeneityError);
}

TEST_CASE("basic form input is validated") {
    CHECK_THROWS_AS(basic_form_interior_product({{"0", "0.3"}}, 2), ConfigError);
    CHECK_THROWS_AS(basic_form_interior_product({{"0", "0.3"}, {"0.3", "0"}}, 2), ConfigError);
    CHECK_THROWS_AS(basic_form_interior_product({{"0", "y1"}, {"-y1", "0"}}, 2), ConfigError);
    TensorField sigma = basic_form_interior_product({{"0", "x1"}, {"-x1", "0"}}, 2);
    FiberPoint p({0.5, 0.0}, {2.0, 3.0});
    TensorValue value = sigma.evaluate(p);
    CHECK(value.at(0) == doctest::Approx(0.5 * 3.0).epsilon(1e-13));
    CHECK(value.at(1) == doctest::Approx(-0.5 * 2.0).epsilon(1e-13));
}

TEST_CASE("pm and fm disagree for a gyroscopic-only spray") {
    SampleSet samples = samples2(8, 27);
    FinslerMetric metric = FinslerMetric::euclidean(2);
    Spray gyro = make_gyroscopic_spray(metric, kOmega0);
    MetrizabilityVerdict fm = fm_residual(gyro, metric, samples);
    CHECK(fm.status == VerdictStatus::Fail);
    MetrizabilityVerdict gm = angular_invariance_residual(gyro, metric, samples);
    CHECK(gm.status == VerdictStatus::Pass);
}
