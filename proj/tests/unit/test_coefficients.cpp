#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "grusin/coefficients.hpp"
#include "grusin/geometry.hpp"

using namespace grusin;

TEST_CASE("piecewise power picks the branch by the base")
{
    CHECK(piecewise_power(0.5, 2, 3) == doctest::Approx(0.25));
    CHECK(piecewise_power(2, 2, 3) == doctest::Approx(8));
    CHECK(piecewise_power(1, 7, -4) == doctest::Approx(1));
    CHECK_THROWS_AS((void)piecewise_power(-0.1, 1, 1), std::domain_error);
}

TEST_CASE("piecewise power is continuous at one")
{
    for (double alpha : {-3.0, 0.5, 2.0})
        for (double alphap : {-1.0, 0.0, 4.0}) {
            CHECK(std::abs(piecewise_power(1 - 1e-9, alpha, alphap) - 1) < 1e-7);
            CHECK(std::abs(piecewise_power(1 + 1e-9, alpha, alphap) - 1) < 1e-7);
        }
}

TEST_CASE("coefficient representative")
{
    CHECK(coefficient(3.7, 0, 0) == doctest::Approx(1));
    CHECK(coefficient(1.0, 0.5, 0.5) == doctest::Approx(1));
    // exp form of s^(2d) (1+s^2)^(d'-d) as an independent evaluation
    const double s = 2.0, d = 0.25, dp = 0.5;
    const double oracle = std::exp(2 * d * std::log(s) + (dp - d) * std::log1p(s * s));
    CHECK(coefficient(s, d, dp) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(coefficient(s, d, dp) == doctest::Approx(2.1147).epsilon(1e-4));
    const double x[] = {1.2, -1.6};
    CHECK(coefficient(std::span<const double>(x), d, dp) == doctest::Approx(coefficient(2.0, d, dp)));
}

TEST_CASE("coefficient has the local and global power laws")
{
    const double d = 0.3, dp = 0.8;
    const double small = std::log(coefficient(2e-6, d, dp) / coefficient(1e-6, d, dp)) / std::log(2.0);
    const double large = std::log(coefficient(2e6, d, dp) / coefficient(1e6, d, dp)) / std::log(2.0);
    CHECK(small == doctest::Approx(2 * d).epsilon(1e-6));
    CHECK(large == doctest::Approx(2 * dp).epsilon(1e-6));
}

TEST_CASE("derived exponents of the Euclidean case")
{
    const DerivedExponents e = derive_exponents({1, 1, 0, 0, 0, 0});
    CHECK(e.D == doctest::Approx(2));
    CHECK(e.Dp == doctest::Approx(2));
    CHECK(e.beta == doctest::Approx(0));
    CHECK(e.rho == doctest::Approx(1));
    CHECK(e.gamma == doctest::Approx(0));
    CHECK(e.alpha == doctest::Approx(1));
}

TEST_CASE("derived exponents of the classical Grushin operator")
{
    const GrusinParameters p{1, 1, 0, 0, 1, 1};
    const DerivedExponents e = derive_exponents(p);
    CHECK(e.D == doctest::Approx(3));
    CHECK(e.Dp == doctest::Approx(3));
    CHECK(e.beta == doctest::Approx(1));
    CHECK(e.rho == doctest::Approx(2));
    CHECK(e.gamma == doctest::Approx(0.5));
    CHECK(e.alpha == doctest::Approx(0.5));
    // Homogeneous dimension under (x1, x2) -> (s x1, s^2 x2): closed-form balls scale like r^3.
    const Point origin{{0.0}, {0.0}};
    for (double r : {0.01, 1.0, 100.0}) {
        const double ratio = ball_volume(p, origin, 2 * r).volume / ball_volume(p, origin, r).volume;
        CHECK(ratio == doctest::Approx(8).epsilon(1e-9));
    }
}

TEST_CASE("derived exponents with two degenerate directions")
{
    const DerivedExponents e = derive_exponents({2, 1, 0.5, 0, 0, 0});
    CHECK(e.D == doctest::Approx(5));
    CHECK(e.Dp == doctest::Approx(3));
    CHECK(e.doubling_dim() == doctest::Approx(5));
}

TEST_CASE("parameter validation names the violated constraint")
{
    GrusinParameters p{1, 1, 1.2, 0, 0, 0};
    try {
        p.validate();
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("delta1 must lie in [0,1)") != std::string::npos);
    }
    CHECK_THROWS_AS((GrusinParameters{0, 1, 0, 0, 0, 0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((GrusinParameters{1, 1, 0, 0, -1, 0}.validate()), std::invalid_argument);
}

TEST_CASE("frozen coefficients agree outside the slab")
{
    const CoefficientField field({1, 1, 0.5, 0.5, 1, 1}, 0.5);
    const CoefficientField raw({1, 1, 0.5, 0.5, 1, 1});
    CHECK(field.c1(0.0) == doctest::Approx(raw.c1(0.5)));
    CHECK(field.c2(0.1) == doctest::Approx(raw.c2(0.5)));
    CHECK(field.c1(2.0) == doctest::Approx(raw.c1(2.0)));
    CHECK(field.local_exponent1() == 0.0);
    CHECK(raw.local_exponent1() == 0.5);
}
