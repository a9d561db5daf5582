#include <cmath>
#include <vector>

#include "doctest.h"
#include "relvar/expr.hpp"

using relvar::errc;
using relvar::error;
using relvar::expr::Expression;

TEST_SUITE("expr") {

TEST_CASE("arithmetic and precedence") {
    const std::vector<double> none;
    CHECK(Expression::parse("1+2*3").eval(none) == doctest::Approx(7.0));
    CHECK(Expression::parse("(1+2)*3").eval(none) == doctest::Approx(9.0));
    CHECK(Expression::parse("2+3*4^2").eval(none) == doctest::Approx(50.0));
    CHECK(Expression::parse("2^3^2").eval(none) == doctest::Approx(512.0));  // right-assoc
    CHECK(Expression::parse("-2^2").eval(none) == doctest::Approx(-4.0));
    CHECK(Expression::parse("10/4").eval(none) == doctest::Approx(2.5));
    CHECK(Expression::parse("1 - 2 - 3").eval(none) == doctest::Approx(-4.0));
    CHECK(Expression::parse(" .5 + 1e2 ").eval(none) == doctest::Approx(100.5));
}

TEST_CASE("variables and functions") {
    const std::vector<double> vars = {0.3, 0.7, 0.9, 0.1, 0.5};
    const auto e = Expression::parse("sin(3*x1) + 2*x3*x5");
    CHECK(e.eval(vars) == doctest::Approx(std::sin(0.9) + 2 * 0.9 * 0.5));
    CHECK(e.variables() == std::vector<int>{1, 3, 5});

    CHECK(Expression::parse("tanh(x2)").eval(vars) == doctest::Approx(std::tanh(0.7)));
    CHECK(Expression::parse("exp(log(x2))").eval(vars) == doctest::Approx(0.7));
    CHECK(Expression::parse("sqrt(abs(-4))").eval(vars) == doctest::Approx(2.0));
    CHECK(Expression::parse("cos(0)").eval(vars) == doctest::Approx(1.0));
}

TEST_CASE("syntax errors") {
    for (const char* bad : {"", "1+", "(1", "sin", "sin 1", "x", "x0", "1,2", "foo(1)", "2**3"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(Expression::parse(bad), error);
        try {
            Expression::parse(bad);
        } catch (const error& e) {
            CHECK(e.code() == errc::expr_syntax);
        }
    }
}

TEST_CASE("variable out of range at eval") {
    const auto e = Expression::parse("x3");
    const std::vector<double> two = {1.0, 2.0};
    CHECK_THROWS_AS(e.eval(two), error);
}

}  // TEST_SUITE
