#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "spraymet/expr.hpp"

using namespace spraymet;

namespace {

std::size_t parse_error_position(const std::string& source, int dimension) {
    try {
        parse_expression(source, dimension);
    } catch (const ParseError& e) {
        return e.position();
    }
    FAIL("expected a parse error for: ", source);
    return 0;
}

} // namespace

TEST_CASE("expression evaluation and precedence") {
    ScalarFieldExpr e = parse_expression("2 + 3*x1*y2 - y1^2/4", 2);
    std::vector<double> coords = {2.0, -1.0, 3.0, 5.0}; // x1 x2 y1 y2
    CHECK(eval_value(e, coords) == doctest::Approx(2.0 + 3.0 * 2.0 * 5.0 - 9.0 / 4.0));

    ScalarFieldExpr unary = parse_expression("-y1^2", 1);
    std::vector<double> c1 = {0.0, 3.0};
    CHECK(eval_value(unary, c1) == doctest::Approx(-9.0));

    ScalarFieldExpr funcs = parse_expression("exp(log(x1)) + sin(x2)^2 + cos(x2)^2", 2);
    std::vector<double> c2 = {4.0, 0.7, 1.0, 1.0};
    CHECK(eval_value(funcs, c2) == doctest::Approx(5.0));
}

TEST_CASE("frozen derivative values for the euclidean norm") {
    ScalarFieldExpr f = parse_expression("sqrt(y1^2 + y2^2)", 2);
    std::vector<double> coords = {0.0, 0.0, 3.0, 4.0};
    CHECK(eval_value(f, coords) == doctest::Approx(5.0).epsilon(1e-14));

    MultiIndex d1 = MultiIndex::fiber(2, 0);
    CHECK(eval_derivative(f, coords, d1) == doctest::Approx(0.6).epsilon(1e-14));

    MultiIndex d3 = MultiIndex::fiber(2, 0, 3);
    CHECK(eval_derivative(f, coords, d3) == doctest::Approx(-0.04608).epsilon(1e-12));
}

TEST_CASE("frozen mixed derivative for a randers function") {
    ScalarFieldExpr f = parse_expression("sqrt(y1^2 + y2^2) + 0.5*y1", 2);
    std::vector<double> coords = {0.0, 0.0, 1.0, 1.0};
    MultiIndex mixed = MultiIndex::fiber(2, 0).d_fiber(1);
    CHECK(eval_derivative(f, coords, mixed) == doctest::Approx(-0.3535533905932738).epsilon(1e-13));
}

TEST_CASE("dual-number derivatives agree with the finite-difference oracle") {
    ScalarFieldExpr f = parse_expression("exp(0.3*x1)*sqrt(2*y1^2 + y2^2 + 0.5*y1*y2) + sin(x2)*y2", 2);
    std::vector<double> coords = {0.4, -0.2, 0.9, 1.1};
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
            MultiIndex index(2);
            auto bump = [](MultiIndex& m, int slot) {
                if (slot < 2)
                    m.d_base(slot);
                else
                    m.d_fiber(slot - 2);
            };
            bump(index, a);
            bump(index, b);
            double ad = eval_derivative(f, coords, index);
            double fd = fd_derivative(f, coords, index);
            CHECK(std::abs(ad - fd) <= 1e-7 * (1.0 + std::abs(ad)));
        }
}

TEST_CASE("parse errors carry byte positions") {
    CHECK(parse_error_position("x3 + 1", 2) == 0);      // coordinate out of range
    CHECK(parse_error_position("1 + tan(x1)", 2) == 4); // unknown function
    CHECK(parse_error_position("(x1 + y1", 2) == 8);    // unbalanced paren
    CHECK(parse_error_position("y1^y2", 2) == 2);       // non-constant exponent, at the '^'
    CHECK_THROWS_AS(parse_expression("", 2), ParseError);
    CHECK_THROWS_AS(parse_expression("x1 @ y1", 2), ParseError);
}

TEST_CASE("printing is idempotent and reparses to the same values") {
    const char* sources[] = {
        "2 + 3*x1*y2 - y1^2/4",
        "-(y1 - y2)^2",
        "exp(0.3*x1)*sqrt(2*y1^2 + y2^2 + 0.5*y1*y2)",
        "1/(1 + y1^2)",
        "y1^-2 * (x1 + -3)",
    };
    std::vector<double> coords = {0.3, -0.7, 1.2, 0.8};
    for (const char* source : sources) {
        ScalarFieldExpr first = parse_expression(source, 2);
        std::string printed = first.to_string();
        ScalarFieldExpr second = parse_expression(printed, 2);
        CHECK(second.to_string() == printed);
        CHECK(eval_value(second, coords) == doctest::Approx(eval_value(first, coords)).epsilon(1e-15));
    }
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, -3.0, 1e-17, 12345.6789, -0.3535533905932738}) {
        ScalarFieldExpr parsed = parse_expression(format_double(v), 1);
        std::vector<double> coords = {0.0, 1.0};
        CHECK(eval_value(parsed, coords) == v);
    }
}

TEST_CASE("coordinate usage flags") {
    CHECK(parse_expression("x1 + 1", 2).uses_base_coordinates());
    CHECK_FALSE(parse_expression("x1 + 1", 2).uses_fiber_coordinates());
    CHECK(parse_expression("y2", 2).uses_fiber_coordinates());
    CHECK_FALSE(parse_expression("3", 2).uses_base_coordinates());
}
