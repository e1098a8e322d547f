#include <doctest.h>

#include <cmath>
#include <memory>

#include "spraymet/connection.hpp"
#include "spraymet/expr.hpp"
#include "spraymet/finsler.hpp"

using namespace spraymet;

namespace {

FieldPtr expr_field(const std::string& source, int dimension) {
    return std::make_shared<ScalarFieldExpr>(parse_expression(source, dimension));
}

} // namespace

TEST_CASE("conformal connection coefficients match the hand formula") {
    // N^i_j = phi_j y^i + (phi_k y^k) delta^i_j - phi_i y_j for E = exp(2 phi)|y|^2.
    FinslerMetric metric = FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2");
    Spray spray = geodesic_spray(metric);
    FiberPoint p({0.0, 0.0}, {1.0, 2.0});
    TensorValue n = connection_coefficients(spray, p);
    CHECK(n.at(0, 0) == doctest::Approx(-0.1).epsilon(1e-11));
    CHECK(n.at(0, 1) == doctest::Approx(-0.8).epsilon(1e-11));
    CHECK(n.at(1, 0) == doctest::Approx(0.8).epsilon(1e-11));
    CHECK(n.at(1, 1) == doctest::Approx(-0.1).epsilon(1e-11));
}

TEST_CASE("connection coefficients are 1-homogeneous in y") {
    Spray spray = geodesic_spray(FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"));
    FiberPoint p({0.3, -0.4}, {0.9, 1.1});
    FiberPoint scaled({0.3, -0.4}, {1.8, 2.2});
    TensorValue n = connection_coefficients(spray, p);
    TensorValue n2 = connection_coefficients(spray, scaled);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(n2.at(i, j) == doctest::Approx(2.0 * n.at(i, j)).epsilon(1e-9));
}

TEST_CASE("the flat spray has a vanishing connection") {
    Spray flat = Spray::flat(3);
    FiberPoint p({0.1, 0.2, 0.3}, {1.0, -0.7, 0.6});
    TensorValue n = connection_coefficients(flat, p);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(n.at(i, j) == 0.0);
}

TEST_CASE("spray derivative and horizontal derivative recompose the partials") {
    Spray spray = geodesic_spray(FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"));
    FieldPtr f = expr_field("exp(0.2*x2)*y1^2 + x1*y2", 2);
    FiberPoint p({0.4, -0.3}, {1.2, 0.8});
    std::vector<double> coords = p.coords();

    TensorValue n = connection_coefficients(spray, p);
    for (int i = 0; i < 2; ++i) {
        double horizontal = horizontal_derivative(*f, spray, p, i);
        double rebuilt = horizontal;
        for (int k = 0; k < 2; ++k)
            rebuilt += n.at(k, i) * eval_derivative(*f, coords, MultiIndex::fiber(2, k));
        CHECK(rebuilt == doctest::Approx(eval_derivative(*f, coords, MultiIndex::base(2, i)))
                             .epsilon(1e-12));
    }

    // S(f) = y^h df/dx^h - 2 G^h df/dy^h.
    double sf = spray_apply(spray, *f, p);
    std::vector<double> g = spray.coefficients_at(p);
    double direct = 0.0;
    for (int h = 0; h < 2; ++h) {
        direct += p.y()[static_cast<std::size_t>(h)] * eval_derivative(*f, coords, MultiIndex::base(2, h));
        direct -= 2.0 * g[static_cast<std::size_t>(h)] *
                  eval_derivative(*f, coords, MultiIndex::fiber(2, h));
    }
    CHECK(sf == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("covariant derivative handles each valence") {
    Spray spray = geodesic_spray(FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"));
    FiberPoint p({0.2, 0.1}, {1.0, -0.9});

    FieldPtr f = expr_field("x1*y2 + y1^2/(y1^2 + y2^2)*y2", 2);
    TensorField scalar = TensorField::scalar(f);
    TensorValue ds = dynamical_covariant_derivative(scalar, spray, p);
    CHECK(ds.scalar() == doctest::Approx(spray_apply(spray, *f, p)).epsilon(1e-12));

    // nabla delta^i_j f: the connection terms cancel, leaving S(f) delta^i_j.
    FieldPtr zero = expr_field("0", 2);
    TensorField mixed = TensorField::mix11(2, {f, zero, zero, f});
    TensorValue dm = dynamical_covariant_derivative(mixed, spray, p);
    double sf = spray_apply(spray, *f, p);
    CHECK(dm.at(0, 0) == doctest::Approx(sf).epsilon(1e-11));
    CHECK(dm.at(1, 1) == doctest::Approx(sf).epsilon(1e-11));
    CHECK(dm.trace() == doctest::Approx(2.0 * sf).epsilon(1e-11));
    CHECK(std::abs(dm.at(0, 1)) <= 1e-12);

    TensorField con2 = TensorField::cov2(2, {f, zero, zero, f});
    CHECK_NOTHROW(dynamical_covariant_derivative(con2, spray, p));
}

TEST_CASE("covariant derivative of a covector uses the connection once") {
    // With the flat spray nabla omega_i = S(omega_i).
    Spray flat = Spray::flat(2);
    FiberPoint p({0.5, -0.2}, {0.8, 0.9});
    FieldPtr a = expr_field("x1*y1", 2);
    FieldPtr b = expr_field("x2*y2", 2);
    TensorField omega = TensorField::covector(2, {a, b});
    TensorValue d = dynamical_covariant_derivative(omega, flat, p);
    CHECK(d.at(0) == doctest::Approx(spray_apply(flat, *a, p)).epsilon(1e-12));
    CHECK(d.at(1) == doctest::Approx(spray_apply(flat, *b, p)).epsilon(1e-12));
}

TEST_CASE("index range is checked") {
    Spray flat = Spray::flat(2);
    FieldPtr f = expr_field("y1", 2);
    FiberPoint p({0.0, 0.0}, {1.0, 0.0});
    CHECK_THROWS_AS(horizontal_derivative(*f, flat, p, 2), ConfigError);
    CHECK_THROWS_AS(horizontal_derivative(*f, flat, p, -1), ConfigError);
}

TEST_CASE("the sign-fault hook flips the connection") {
    Spray spray = geodesic_spray(FinslerMetric::conformal(2, "0.3*x1 - 0.2*x2"));
    FiberPoint p({0.0, 0.0}, {1.0, 2.0});
    TensorValue n = connection_coefficients(spray, p);
    testing::set_connection_sign_fault(true);
    TensorValue flipped = connection_coefficients(spray, p);
    testing::set_connection_sign_fault(false);
    CHECK_FALSE(testing::connection_sign_fault());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(flipped.at(i, j) == doctest::Approx(-n.at(i, j)).epsilon(1e-13));
}
