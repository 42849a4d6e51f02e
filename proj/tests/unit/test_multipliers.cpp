#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grusin/errors.hpp"
#include "grusin/fitting.hpp"
#include "grusin/multipliers.hpp"

using namespace grusin;

TEST_CASE("multiplier values")
{
    const MultiplierSpec grusin{{1, 1, 0, 0, 1, 1}, 1.0};
    const double zero[] = {0.0};
    CHECK(multiplier_value(grusin, zero, zero) == 0.0);
    const double p2[] = {4.0};
    CHECK(multiplier_value(grusin, zero, p2) == doctest::Approx(4));
    const MultiplierSpec flat{{2, 1, 0, 0, 0, 0}, 1.0};
    const double q1[] = {0.3, -1.2}, q2[] = {2.0};
    CHECK(multiplier_value(flat, q1, q2) == doctest::Approx(0.09 + 1.44 + 4));
}

TEST_CASE("multiplier sublevel volumes")
{
    const MultiplierSpec flat2{{1, 1, 0, 0, 0, 0}, 1.0};
    const MultiplierSpec flat3{{2, 1, 0, 0, 0, 0}, 1.0};
    for (double r : {0.1, 1.0, 7.0}) {
        CHECK(vf_volume(flat2, r) == doctest::Approx(std::numbers::pi * r * r).epsilon(1e-6));
        CHECK(vf_volume(flat3, r) == doctest::Approx(4.0 / 3.0 * std::numbers::pi * r * r * r).epsilon(1e-6));
    }
    CHECK(unit_ball_volume(4) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2));
    const MultiplierSpec single{{1, 0, 0.4, 0.1, 0, 0}, 1.0};
    CHECK(vf_volume(single, 2.0) == doctest::Approx(vf_block_volume(single, 1, 2.0)));
    CHECK(vf_block_volume(single, 2, 2.0) == 1.0);
}

TEST_CASE("multiplier sublevel volumes are nondecreasing")
{
    const MultiplierSpec spec{{1, 1, 0.5, 0.2, 0.3, 0.8}, 1.0};
    double previous = 0.0;
    for (double r = 1e-3; r < 1e3; r *= 1.7) {
        const double v = vf_volume(spec, r);
        CHECK(v >= previous);
        previous = v;
    }
}

TEST_CASE("multiplier volume growth exponents")
{
    for (const GrusinParameters& p : {GrusinParameters{1, 1, 0, 0, 1, 1}, GrusinParameters{1, 1, 0.5, 0.2, 0.3, 0.8},
                                      GrusinParameters{2, 1, 0.25, 0.5, 1, 0}}) {
        const MultiplierSpec spec{p, 1.0};
        const DerivedExponents e = derive_exponents(p);
        auto slope = [&](double lo, double hi) {
            std::vector<double> r, v;
            for (int i = 0; i <= 10; ++i) {
                r.push_back(lo * std::pow(hi / lo, i / 10.0));
                v.push_back(vf_volume(spec, r.back()));
            }
            return fit_loglog(r, v).slope;
        };
        CHECK(slope(1e-3, 1e-2) == doctest::Approx(e.Dp).epsilon(0.05));
        CHECK(slope(1e2, 1e3) == doctest::Approx(e.D).epsilon(0.05));
    }
}

TEST_CASE("discrete and Fourier forms agree for constant coefficients")
{
    const Grid g(1, {129, 129}, {4.0, 4.0});
    const DivergenceFormOperator op = assemble(g, CoefficientField({1, 1, 0, 0, 0, 0}));
    const MultiplierSpec spec{{1, 1, 0, 0, 0, 0}, 1.0};
    std::vector<double> values(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.coordinate(i, 0) - 0.3, y = g.coordinate(i, 1) + 0.2;
        values[i] = std::exp(-(x * x + y * y) / 0.5);
    }
    const double discrete = form_value(op, op.from_grid(values));
    const double h = g.spacing(0);
    CHECK(fourier_form(g, spec, values) == doctest::Approx(discrete).epsilon(4 * h * h));
}

TEST_CASE("Nash check with constant coefficients")
{
    const DivergenceFormOperator op = assemble(Grid(1, {129, 129}, {4.0, 4.0}), CoefficientField({1, 1, 0, 0, 0, 0}));
    const MultiplierSpec spec{{1, 1, 0, 0, 0, 0}, 1.0};
    NashOptions o;
    o.ensemble = 50;
    const NashReport r = nash_check(op, spec, o);
    CHECK(r.min_ratio == doctest::Approx(1).epsilon(0.1));
    CHECK(r.max_ratio == doctest::Approx(1).epsilon(0.1));
    CHECK(r.min_margin >= 0.0);
    o.min_width = 0.05;
    CHECK_THROWS_AS((void)nash_check(op, spec, o), PreconditionError);
}

TEST_CASE("Nash check for the classical operator")
{
    const GrusinParameters p{1, 1, 0, 0, 1, 1};
    const Grid g(1, {129, 129}, {4.0, 4.0});
    const MultiplierSpec spec{p, 1.0};
    NashOptions o;
    o.ensemble = 100;
    const NashReport small = nash_check(assemble(g, CoefficientField(p)), spec, o);
    o.ensemble = 200;
    const NashReport large = nash_check(assemble(g, CoefficientField(p)), spec, o);
    CHECK(small.min_ratio > 0.0);
    CHECK(std::max(small.min_ratio / large.min_ratio, large.min_ratio / small.min_ratio) <= 1.25);
    CHECK(large.min_margin >= 0.0);
    o.half_line = true;
    const NashReport half = nash_check(assemble(g, CoefficientField(p), Boundary::half_line_positive), spec, o);
    CHECK(half.volume_factor == 4.0);
    CHECK(half.min_margin >= 0.0);
    CHECK_THROWS_AS((void)nash_check(assemble(g, CoefficientField(p)), spec, o), PreconditionError);
}

TEST_CASE("Hardy inequality")
{
    CHECK(hardy_optimal_constant(3) == doctest::Approx(0.25));
    CHECK(hardy_check(3, 1.0, 0.0).lambda_min >= -1e-10);
    CHECK(hardy_check(3, 1.0, 0.5).lambda_min >= -1e-8);
    CHECK(hardy_check(3, 1.0, 4.0).lambda_min < 0.0);
}

TEST_CASE("operator inequalities")
{
    const OperatorInequalityReport r = operator_inequality_checks(1000, 20, 0.3, 1, 5);
    CHECK(r.trials == 1000);
    CHECK(r.worst_power_ratio >= -1e-10);
    CHECK(r.worst_sum_root >= -1e-10);
    CHECK(operator_inequality_checks(200, 10, 0.7, 2, 6).worst_sum_root >= -1e-10);
}
