#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "grusin/operator.hpp"

using namespace grusin;

TEST_CASE("grid construction")
{
    const Grid a = build_grid(GrusinParameters{1, 0, 0, 0, 0, 0}, 1.0, 3);
    CHECK(a.spacing(0) == doctest::Approx(1));
    CHECK(a.coordinate(0, 0) == doctest::Approx(-1));
    CHECK(a.coordinate(1, 0) == doctest::Approx(0));
    CHECK(a.coordinate(2, 0) == doctest::Approx(1));
    const Grid b = build_grid(GrusinParameters{}, 8.0, 257);
    CHECK(b.spacing(0) == 1.0 / 16);
    CHECK(b.spacing(1) == 1.0 / 16);
    CHECK(b.refined().spacing(0) == 1.0 / 32);
    CHECK_THROWS((void)build_grid(GrusinParameters{}, 8.0, 256));
}

TEST_CASE("face conductance of a uniform medium")
{
    const CoefficientField c(GrusinParameters{1, 1, 0, 0, 0, 0});
    const double a[] = {0.3, -0.2};
    const double h = 0.125;
    CHECK(face_conductance(c, 0, a, h) == doctest::Approx(1 / (h * h)));
    CHECK(face_conductance(c, 1, a, h) == doctest::Approx(1 / (h * h)));
}

TEST_CASE("face conductance vanishes across a non-integrable singularity")
{
    const CoefficientField c(GrusinParameters{1, 0, 0.75, 0.75, 0, 0});
    const double h = 0.01;
    const double a[] = {-h / 2};
    CHECK(face_conductance(c, 0, a, h) == 0.0);
    const double b[] = {0.0};
    CHECK(face_conductance(c, 0, b, h) == 0.0);
}

TEST_CASE("face conductance matches adaptive quadrature")
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (const auto& p : {GrusinParameters{1, 0, 0.25, 0.25, 0, 0}, GrusinParameters{1, 0, 0.25, 0.5, 0, 0}}) {
        const CoefficientField c(p);
        for (const auto& [lo, h] : {std::pair{0.0, 0.01}, std::pair{-0.005, 0.01}, std::pair{0.7, 0.3}}) {
            auto inv = [&](double s) { return 1.0 / c.c1(std::abs(s)); };
            const double hi = lo + h;
            const double integral = lo < 0.0 && hi > 0.0 ? integrator.integrate(inv, lo, 0.0) + integrator.integrate(inv, 0.0, hi)
                                                         : integrator.integrate(inv, lo, hi);
            const double mean = integral / h;
            const double oracle = 1.0 / mean / (h * h);
            const double a[] = {lo};
            const double value = face_conductance(c, 0, a, h);
            CHECK(value > 0.0);
            CHECK(value == doctest::Approx(oracle).epsilon(1e-8));
        }
    }
}

TEST_CASE("three-node Neumann stencil")
{
    const Grid g(1, {3}, {1.0});
    const DivergenceFormOperator op = assemble(g, CoefficientField(GrusinParameters{1, 0, 0, 0, 0, 0}));
    const Eigen::MatrixXd A = Eigen::MatrixXd(op.matrix());
    Eigen::MatrixXd expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK((A - expected).norm() < 1e-14);
}

TEST_CASE("assembled operator is symmetric with zero row sums")
{
    const Grid g(1, {17, 17}, {2.0, 2.0});
    const DivergenceFormOperator op = assemble(g, CoefficientField(GrusinParameters{1, 1, 0.3, 0.6, 1, 0.5}));
    const Eigen::MatrixXd A = Eigen::MatrixXd(op.matrix());
    CHECK((A - A.transpose()).norm() < 1e-12 * A.norm());
    CHECK((A * Eigen::VectorXd::Ones(A.rows())).cwiseAbs().maxCoeff() < 1e-10 * A.norm());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (i != j) CHECK(A(i, j) <= 0.0);
}

TEST_CASE("form value of constants and of the coordinate function")
{
    const double L = 3.0;
    const Grid g(1, {97}, {L});
    const DivergenceFormOperator op = assemble(g, CoefficientField(GrusinParameters{1, 0, 0, 0, 0, 0}));
    CHECK(std::abs(form_value(op, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(op.size()), 2.5))) < 1e-12);
    Eigen::VectorXd x(static_cast<Eigen::Index>(op.size()));
    for (std::size_t k = 0; k < op.size(); ++k) x[static_cast<Eigen::Index>(k)] = g.coordinate(op.node(k), 0);
    CHECK(form_value(op, x) == doctest::Approx(2 * L).epsilon(g.spacing(0) * g.spacing(0)));
}

TEST_CASE("indicator of one side keeps a bounded form under strong degeneracy")
{
    auto indicator_form = [](double delta, int nodes) {
        const Grid g(1, {nodes}, {1.0});
        const DivergenceFormOperator op = assemble(g, CoefficientField(GrusinParameters{1, 0, delta, delta, 0, 0}));
        Eigen::VectorXd u(static_cast<Eigen::Index>(op.size()));
        for (std::size_t k = 0; k < op.size(); ++k) {
            const double x = g.coordinate(op.node(k), 0);
            u[static_cast<Eigen::Index>(k)] = x > 0 ? 1.0 : (x < 0 ? 0.0 : 0.5);
        }
        return form_value(op, u);
    };
    double previous = 0.0;
    for (int nodes : {65, 129, 257, 513}) {
        const double strong = indicator_form(0.75, nodes);
        CHECK(strong < 1e-12);
        const double weak = indicator_form(0.25, nodes);
        CHECK(weak > previous);  // grows without bound below the threshold
        previous = weak;
    }
    CHECK(!couples_across_origin(assemble(Grid(1, {33}, {1.0}), CoefficientField(GrusinParameters{1, 0, 0.5, 0.5, 0, 0}))));
}

TEST_CASE("boundary modes select the expected unknowns")
{
    const Grid g(1, {9, 5}, {1.0, 1.0});
    const CoefficientField c(GrusinParameters{1, 1, 0, 0, 0, 0});
    CHECK(assemble(g, c).size() == 45);
    CHECK(assemble(g, c, Boundary::dirichlet_origin).size() == 40);
    CHECK(assemble(g, c, Boundary::half_line_positive).size() == 25);
    CHECK(assemble(g, c, Boundary::half_line_negative).size() == 25);
    CHECK(boundary_from_string(to_string(Boundary::half_line_positive)) == Boundary::half_line_positive);
}
