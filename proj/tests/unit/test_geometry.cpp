#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "grusin/errors.hpp"
#include "grusin/geometry.hpp"

using namespace grusin;

namespace {

const GrusinParameters kGrusin{1, 1, 0, 0, 1, 1};

}  // namespace

TEST_CASE("block-two distance vanishes for equal second coordinates")
{
    CHECK(delta_distance(kGrusin, {{0.3}, {1.5}}, {{-2.0}, {1.5}}) == 0.0);
}

TEST_CASE("block-two distance branches agree on the switching surface")
{
    CHECK(delta_distance(kGrusin, {{0.5}, {0.0}}, {{0.5}, {1.0}}) == doctest::Approx(1));
    CHECK(delta_distance(kGrusin, {{0.25}, {0.0}}, {{-0.75}, {1.0}}) == doctest::Approx(1));
}

TEST_CASE("block-two distance on the degeneracy line")
{
    const Point x{{0.0}, {0.0}}, y{{0.0}, {4.0}};
    CHECK(delta_distance(kGrusin, x, y) == doctest::Approx(2));
    // A geodesic computed on a grid is equivalent to the closed form with a moderate constant.
    const Grid g(1, {161, 161}, {4.0, 5.0});
    const DistanceField f = numerical_distance(CoefficientField(kGrusin), g, x);
    const double ratio = f[g.snap(y).index] / closed_form_distance(kGrusin, x, y);
    CHECK(ratio > 0.5);
    CHECK(ratio < 3.0);
}

TEST_CASE("closed-form distance basics")
{
    const Point x{{0.4}, {-1.0}}, y{{-0.2}, {0.5}};
    CHECK(closed_form_distance(kGrusin, x, x) == 0.0);
    const GrusinParameters flat{1, 1, 0, 0, 0, 0};
    CHECK(closed_form_distance(flat, x, y) == doctest::Approx(0.6 + 1.5));
    CHECK(closed_form_distance(kGrusin, x, y) == doctest::Approx(closed_form_distance(kGrusin, y, x)));
}

TEST_CASE("numerical distance is zero at the source")
{
    const Grid g(1, {33, 33}, {2.0, 2.0});
    const Point src{{0.5}, {-0.25}};
    const DistanceField f = numerical_distance(CoefficientField(kGrusin), g, src);
    CHECK(f[g.snap(src).index] == 0.0);
    CHECK(f.unreachable() == 0);
}

TEST_CASE("one-dimensional distance matches adaptive quadrature")
{
    const GrusinParameters p{1, 0, 0.5, 0.5, 0, 0};
    const CoefficientField c(p);
    const Grid g(1, {1025}, {2.0});  // h = 1/256 <= x/200 for x >= 0.78
    const DistanceField f = numerical_distance(c, g, Point{{0.0}, {}});
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (double x : {0.8, 1.0, 1.5, 2.0}) {
        const double oracle = integrator.integrate([&](double s) { return 1.0 / std::sqrt(c.c1(s)); }, 0.0, x);
        CHECK(f[g.snap(Point{{x}, {}}).index] == doctest::Approx(oracle).epsilon(0.02));
    }
}

TEST_CASE("ball below the cell size is a single cell")
{
    const Grid g(1, {33, 33}, {2.0, 2.0});
    const DistanceField f = numerical_distance(CoefficientField(kGrusin), g, Point{{1.0}, {0.0}});
    const BallVolume b = ball_volume(f, 1e-3);
    CHECK(b.below_cell_size);
    CHECK(b.volume == doctest::Approx(g.node_weight()));
}

TEST_CASE("distance-field volumes at the origin grow like r^D")
{
    const Grid g(1, {321, 769}, {5.0, 3.0});
    const DistanceField f = numerical_distance(CoefficientField(kGrusin), g, Point{{0.0}, {0.0}});
    const BallVolumeTable t = volume_table(f, geometric_radii(0.3, std::pow(10.0, 1.0 / 7), 8));
    double slope = std::log(t.volumes.back() / t.volumes.front()) / std::log(t.radii.back() / t.radii.front());
    CHECK(slope == doctest::Approx(3).epsilon(0.1));
}

TEST_CASE("distance-field volumes off the degeneracy set grow like r^(n+m)")
{
    const Grid g(1, {257, 129}, {2.0, 1.0});
    const DistanceField f = numerical_distance(CoefficientField(kGrusin), g, Point{{1.0}, {0.0}});
    const BallVolumeTable t = volume_table(f, geometric_radii(0.08, std::pow(10.0, 1.0 / 7), 8));
    const double slope = std::log(t.volumes.back() / t.volumes.front()) / std::log(t.radii.back() / t.radii.front());
    CHECK(slope == doctest::Approx(2).epsilon(0.1));
}

TEST_CASE("doubling exponent for constant coefficients is the dimension")
{
    const GrusinParameters flat{1, 1, 0, 0, 0, 0};
    const DoublingEstimate e = multiscale_doubling(CoefficientField(flat), Point{{0.3}, {0.0}}, geometric_radii(0.05, 2, 5));
    CHECK(e.max_exponent == doctest::Approx(2).epsilon(0.1));
}

TEST_CASE("doubling exponent of the classical operator")
{
    const CoefficientField c(kGrusin);
    const auto radii = geometric_radii(0.03, 2, 8);
    CHECK(multiscale_doubling(c, Point{{0.0}, {0.0}}, radii).max_exponent <= 3.3);
    const DoublingEstimate far = multiscale_doubling(c, Point{{3.0}, {0.0}}, geometric_radii(0.02, 2, 5));
    CHECK(far.max_exponent == doctest::Approx(2).epsilon(0.15));
}

TEST_CASE("doubling exponent rejects non-monotone volumes")
{
    BallVolumeTable t;
    t.radii = {1, 2, 4, 8, 16, 32, 64, 128};
    t.volumes = {1, 3, 9, 27, 20, 81, 243, 729};
    CHECK_THROWS_AS((void)doubling_exponent(t), DataError);
    t.radii.pop_back();
    t.volumes.pop_back();
    CHECK_THROWS_AS((void)doubling_exponent(t), std::invalid_argument);
}

TEST_CASE("coprime stencil in two dimensions")
{
    CHECK(coprime_stencil(2, 1).size() == 8);
    CHECK(coprime_stencil(2, 2).size() == 16);
}
