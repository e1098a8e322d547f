#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "spraymet/expr.hpp"
#include "spraymet/geometry.hpp"

using namespace spraymet;

namespace {

SampleConfig config2(int count, std::uint64_t seed) {
    SampleConfig config;
    config.seed = seed;
    config.count = count;
    config.base_box = {{-1.0, 2.0}, {0.5, 3.0}};
    config.shell_lo = 0.7;
    config.shell_hi = 1.5;
    return config;
}

} // namespace

TEST_CASE("fiber points enforce the fiber floor") {
    CHECK_THROWS_AS(FiberPoint({0.0}, {0.1}), ConfigError);
    CHECK_THROWS_AS(FiberPoint({0.0}, {1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(FiberPoint({0.0}, {1.0}, -1.0), ConfigError);
    FiberPoint p({1.0, 2.0}, {0.6, 0.8});
    CHECK(p.fiber_norm() == doctest::Approx(1.0));
    std::vector<double> coords = p.coords();
    REQUIRE(coords.size() == 4);
    CHECK(coords[0] == 1.0);
    CHECK(coords[3] == 0.8);
    FiberPoint back = FiberPoint::from_coords(coords);
    CHECK(back.x() == p.x());
    CHECK(back.y() == p.y());
}

TEST_CASE("sampling is deterministic and respects the bounds") {
    SampleSet first = sample_points(config2(40, 9));
    SampleSet second = sample_points(config2(40, 9));
    REQUIRE(first.points.size() == 40);
    for (std::size_t k = 0; k < first.points.size(); ++k) {
        CHECK(first.points[k].x() == second.points[k].x());
        CHECK(first.points[k].y() == second.points[k].y());
        const FiberPoint& p = first.points[k];
        CHECK(p.x()[0] >= -1.0);
        CHECK(p.x()[0] <= 2.0);
        CHECK(p.x()[1] >= 0.5);
        CHECK(p.x()[1] <= 3.0);
        double norm = p.fiber_norm();
        CHECK(norm >= 0.7 * (1.0 - 1e-12));
        CHECK(norm <= 1.5 * (1.0 + 1e-12));
    }
    SampleSet other = sample_points(config2(40, 10));
    CHECK(other.points[0].x() != first.points[0].x());
}

TEST_CASE("sample configuration is validated") {
    SampleConfig config = config2(10, 1);
    config.count = 0;
    CHECK_THROWS_AS(sample_points(config), ConfigError);
    config = config2(10, 1);
    config.shell_lo = 0.1; // below y_min
    CHECK_THROWS_AS(sample_points(config), ConfigError);
    config = config2(10, 1);
    config.base_box.clear();
    CHECK_THROWS_AS(sample_points(config), ConfigError);
}

TEST_CASE("homogeneity residual flags the right degrees") {
    ScalarFieldExpr f = parse_expression("sqrt(y1^2 + y2^2)", 2);
    ScalarFieldExpr e = parse_expression("y1^2 + y2^2", 2);
    FiberPoint p({0.1, 0.2}, {0.8, -0.9});
    CHECK(std::abs(homogeneity_residual(f, 1, p)) <= 1e-12);
    CHECK(std::abs(homogeneity_residual(e, 2, p)) <= 1e-12);
    CHECK(std::abs(homogeneity_residual(f, 2, p)) > 0.1);
    CHECK_THROWS_AS(homogeneity_residual(f, 0, p), ConfigError);
}

TEST_CASE("spray construction and validation") {
    Spray flat = Spray::flat(2);
    FiberPoint p({0.3, -0.2}, {1.0, 0.5});
    std::vector<double> g = flat.coefficients_at(p);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);

    CHECK_THROWS_AS(Spray::from_expressions({}), ConfigError);

    Spray good = Spray::from_expressions({"0.1*y1^2", "y1*y2"});
    SampleSet samples = sample_points(config2(15, 4));
    ResidualReport report = validate_spray(good, samples, 1e-9);
    CHECK(report.pass);
    CHECK(report.max_residual <= 1e-9);

    Spray bad = Spray::from_expressions({"y1", "0"}); // 1-homogeneous, not 2
    ResidualReport broken = validate_spray(bad, samples, 1e-9);
    CHECK_FALSE(broken.pass);
    CHECK(broken.max_residual > 0.1);
    CHECK(broken.worst_point >= 0);
    CHECK(broken.per_point.size() == samples.points.size());
}

TEST_CASE("parallel_for visits every index and propagates exceptions") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(257, 4, [&](int i) { hits[static_cast<std::size_t>(i)].fetch_add(1); });
    for (const auto& h : hits)
        CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(8, 3,
                                 [](int i) {
                                     if (i == 5)
                                         throw DomainError("boom");
                                 }),
                    DomainError);
}
