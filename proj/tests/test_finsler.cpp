#include <doctest.h>

#include <cmath>
#include <vector>

#include "spraymet/finsler.hpp"

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

} // namespace

TEST_CASE("euclidean metric tensor is the identity") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    FiberPoint p({0.0, 0.0}, {0.8, -1.1});
    TensorValue g = metric_tensor(metric, p);
    CHECK(g.at(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g.at(1, 1) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g.at(0, 1) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("frozen randers metric tensor values") {
    FinslerMetric metric = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    FiberPoint p10({0.0, 0.0}, {1.0, 0.0});
    TensorValue g = metric_tensor(metric, p10);
    CHECK(g.at(0, 0) == doctest::Approx(2.25).epsilon(1e-13));
    CHECK(g.at(1, 1) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(g.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    FiberPoint p11({0.0, 0.0}, {1.0, 1.0});
    TensorValue g11 = metric_tensor(metric, p11);
    CHECK(g11.at(0, 0) == doctest::Approx(2.1338834764831844).epsilon(1e-13));
    CHECK(g11.at(0, 1) == doctest::Approx(0.1767766952966369).epsilon(1e-12));
    CHECK(g11.at(1, 0) == doctest::Approx(0.1767766952966369).epsilon(1e-12));
    CHECK(g11.at(1, 1) == doctest::Approx(1.176776695296637).epsilon(1e-13));
}

TEST_CASE("inverse metric tensor inverts") {
    FinslerMetric metric = FinslerMetric::randers({{1.0, 0.2}, {0.2, 2.0}}, {0.3, -0.1});
    FiberPoint p({0.1, -0.4}, {1.1, 0.7});
    TensorValue g = metric_tensor(metric, p);
    TensorValue ginv = inverse_metric_tensor(metric, p);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double entry = 0.0;
            for (int k = 0; k < 2; ++k)
                entry += g.at(i, k) * ginv.at(k, j);
            CHECK(entry == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-11));
        }
}

TEST_CASE("angular metric annihilates y and matches the euclidean oracle") {
    FinslerMetric metric = FinslerMetric::euclidean(2);
    FiberPoint p({0.0, 0.0}, {1.0, 0.0});
    TensorValue h = angular_metric(metric, p);
    CHECK(h.at(0, 0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(h.at(1, 1) == doctest::Approx(1.0).epsilon(1e-13));

    FinslerMetric randers = FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0});
    FiberPoint q({0.0, 0.0}, {0.9, 1.2});
    TensorValue hr = angular_metric(randers, q);
    for (int i = 0; i < 2; ++i) {
        double hy = hr.at(i, 0) * 0.9 + hr.at(i, 1) * 1.2;
        CHECK(std::abs(hy) <= 1e-12);
    }
}

TEST_CASE("conformal metric evaluates the factor") {
    FinslerMetric metric = FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2");
    FiberPoint p({0.5, -0.5}, {3.0, 4.0});
    double expected = std::exp(0.3 * 0.5 + 0.2 * 0.5) * 5.0;
    CHECK(eval_value(metric.finsler_function(), p.coords()) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(eval_value(metric.energy(), p.coords()) == doctest::Approx(expected * expected).epsilon(1e-13));
}

TEST_CASE("riemannian rows may be full or upper-triangular") {
    FinslerMetric full = FinslerMetric::riemannian(2, {{"2", "0.5"}, {"0.5", "1"}});
    FinslerMetric ragged = FinslerMetric::riemannian(2, {{"2", "0.5"}, {"1"}});
    FiberPoint p({0.2, 0.3}, {1.0, -0.5});
    CHECK(eval_value(full.energy(), p.coords()) ==
          doctest::Approx(eval_value(ragged.energy(), p.coords())).epsilon(1e-15));
    CHECK(eval_value(full.energy(), p.coords()) ==
          doctest::Approx(2.0 - 0.5 + 0.25).epsilon(1e-14));
}

TEST_CASE("metric construction rejects bad input") {
    CHECK_THROWS_AS(FinslerMetric::euclidean(0), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::riemannian(2, {{"y1", "0"}, {"0", "1"}}), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::riemannian(2, {{"1", "0"}}), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::randers({{1.0, 0.3}, {0.0, 1.0}}, {0.1, 0.0}), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {1.0, 0.2}), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::randers({{-1.0, 0.0}, {0.0, 1.0}}, {0.1, 0.0}), ConfigError);
    CHECK_THROWS_AS(FinslerMetric::custom(2, "y1^2"), HomogeneityError);
    CHECK_THROWS_AS(FinslerMetric::custom(2, "x1 + y1"), HomogeneityError);
}

TEST_CASE("degenerate fiber metrics are reported") {
    FinslerMetric linear = FinslerMetric::custom(2, "2*y1 + 3*y2");
    FiberPoint p({0.0, 0.0}, {1.0, 1.0});
    CHECK_THROWS_AS(metric_tensor(linear, p), DegenerateMetricError);
}

TEST_CASE("regularity reporting") {
    SampleSet samples = samples2(12, 5);
    RegularityReport good = check_regularity(FinslerMetric::randers({{1.0, 0.0}, {0.0, 1.0}}, {0.5, 0.0}),
                                             samples);
    CHECK(good.pass);
    CHECK(good.failures == 0);
    REQUIRE(good.entries.size() == 12);
    for (const RegularityEntry& entry : good.entries) {
        CHECK(entry.f_positive);
        CHECK(entry.rank_g == 2);
        CHECK(entry.rank_h == 1);
        CHECK(entry.min_singular_g > 0.0);
    }

    RegularityReport bad = check_regularity(FinslerMetric::custom(2, "2*y1 + 3*y2"), samples);
    CHECK_FALSE(bad.pass);
    CHECK(bad.failures > 0);
}

TEST_CASE("geodesic spray of the euclidean metric is flat") {
    Spray spray = geodesic_spray(FinslerMetric::euclidean(2));
    FiberPoint p({0.4, -0.1}, {1.3, 0.6});
    std::vector<double> g = spray.coefficients_at(p);
    CHECK(std::abs(g[0]) <= 1e-13);
    CHECK(std::abs(g[1]) <= 1e-13);
}

TEST_CASE("conformal geodesic spray matches the hand formula") {
    // For E = exp(2 phi(x)) |y|^2 with linear phi: G^i = (phi_k y^k) y^i - phi_i |y|^2 / 2.
    FinslerMetric metric = FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2");
    Spray spray = geodesic_spray(metric);
    FiberPoint p({0.0, 0.0}, {1.0, 2.0});
    std::vector<double> g = spray.coefficients_at(p);
    double py = 0.3 * 1.0 - 0.2 * 2.0; // phi_k y^k
    CHECK(g[0] == doctest::Approx(py * 1.0 - 0.3 * 5.0 / 2.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(py * 2.0 + 0.2 * 5.0 / 2.0).epsilon(1e-12));

    ResidualReport report = validate_spray(spray, samples2(10, 8), 1e-9);
    CHECK(report.pass);
}

TEST_CASE("metric descriptions name the family") {
    CHECK(FinslerMetric::euclidean(3).describe().find("euclidean") != std::string::npos);
    CHECK(FinslerMetric::conformal(2, "x1").describe().find("conformal") != std::string::npos);
}
