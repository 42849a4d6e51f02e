#include <doctest.h>

#include <cmath>

#include "grusin/errors.hpp"
#include "grusin/geometry.hpp"
#include "grusin/wave.hpp"

using namespace grusin;

namespace {

double bump(double r) { return r < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0; }

Eigen::VectorXd radial_bump(const DivergenceFormOperator& op, const std::vector<double>& center, double radius,
                            std::vector<std::size_t>* support = nullptr)
{
    const Grid& g = op.grid();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
    for (std::size_t k = 0; k < op.size(); ++k) {
        double r2 = 0.0;
        for (int a = 0; a < g.dimension(); ++a) {
            const double z = (g.coordinate(op.node(k), a) - center[a]) / radius;
            r2 += z * z;
        }
        v[static_cast<Eigen::Index>(k)] = bump(std::sqrt(r2));
        if (support && r2 < 1.0) support->push_back(op.node(k));
    }
    return v;
}

}  // namespace

TEST_CASE("cosine propagator at time zero")
{
    const DivergenceFormOperator op = assemble(Grid(1, {33}, {2.0}), CoefficientField({1, 0, 0, 0, 0, 0}));
    const Eigen::VectorXd v = radial_bump(op, {0.0}, 0.5);
    CHECK((cosine_propagator(op, v, 0.0).current - v).norm() == 0.0);
}

TEST_CASE("one-dimensional waves split into two half bumps")
{
    const Grid g(1, {2049}, {4.0});  // h = 1/256
    const DivergenceFormOperator op = assemble(g, CoefficientField({1, 0, 0, 0, 0, 0}));
    const double w = 0.5;
    const Eigen::VectorXd v = radial_bump(op, {0.0}, w);
    const WaveState s = cosine_propagator(op, v, 1.0);
    double sup = 0.0;
    for (std::size_t k = 0; k < op.size(); ++k) {
        const double x = g.coordinate(op.node(k), 0);
        const double exact = 0.5 * (bump(std::abs(x - 1.0) / w) + bump(std::abs(x + 1.0) / w));
        sup = std::max(sup, std::abs(s.current[static_cast<Eigen::Index>(k)] - exact));
    }
    CHECK(sup < 1e-2);
    CHECK(s.energy_drift < 1e-10);
}

TEST_CASE("steps beyond the stability bound are rejected")
{
    const DivergenceFormOperator op = assemble(Grid(1, {65}, {2.0}), CoefficientField({1, 0, 0, 0, 0, 0}));
    WaveOptions o;
    o.dt = 2.0 * cfl_bound(op.matrix());
    CHECK_THROWS_AS((void)cosine_propagator(op, radial_bump(op, {0.0}, 0.5), 1.0, o), PreconditionError);
}

TEST_CASE("finite speed of propagation")
{
    const Grid g(1, {257, 257}, {4.0, 4.0});
    for (const GrusinParameters& p : {GrusinParameters{1, 1, 0, 0, 0, 0}, GrusinParameters{1, 1, 0, 0, 1, 1}}) {
        const CoefficientField c(p);
        const DivergenceFormOperator op = assemble(g, c);
        std::vector<std::size_t> support;
        const Eigen::VectorXd v = radial_bump(op, {0.0, 0.0}, 0.75, &support);
        const int order = p.delta2 == 0 ? 4 : 2;  // closer to the Euclidean metric for constant coefficients
        const DistanceField field = numerical_distance(c, g, support, order);
        CHECK(finite_speed_check(op, field, v, 0.0, 0.1).leaked_fraction == 0.0);
        CHECK(finite_speed_check(op, field, v, 1.0, 0.1).leaked_fraction < 1e-6);
    }
}

TEST_CASE("Davies-Gaffney estimate for identical sets")
{
    const Grid g(1, {33, 33}, {2.0, 2.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 1, 0, 0, 1, 1})), EvolutionMethod::automatic(33 * 33));
    std::vector<std::size_t> a;
    for (std::size_t k = 0; k < sg.op().size(); ++k)
        if (std::abs(g.coordinate(sg.op().node(k), 0)) <= 0.25 && std::abs(g.coordinate(sg.op().node(k), 1)) <= 0.25)
            a.push_back(k);
    const std::vector<double> dist(sg.op().size(), 0.0);
    const double times[] = {0.1, 1.0};
    CHECK(davies_gaffney_check(sg, dist, a, a, times, 0.2).worst_margin <= 0.0);
}

TEST_CASE("Davies-Gaffney estimate for separated boxes")
{
    const GrusinParameters p{1, 1, 0, 0, 1, 1};
    const Grid g(1, {129, 129}, {4.0, 4.0});
    const CoefficientField c(p);
    EvolutionMethod m;
    m.tolerance = 1e-10;
    const Semigroup sg(assemble(g, c), m);
    const auto& op = sg.op();
    std::vector<std::size_t> a, b, a_nodes;
    for (std::size_t k = 0; k < op.size(); ++k) {
        const double x = g.coordinate(op.node(k), 0), y = g.coordinate(op.node(k), 1);
        if (std::abs(y) > 0.25) continue;
        if (std::abs(x + 1.5) <= 0.25) {
            a.push_back(k);
            a_nodes.push_back(op.node(k));
        } else if (std::abs(x - 1.5) <= 0.25) {
            b.push_back(k);
        }
    }
    const DistanceField field = numerical_distance(c, g, a_nodes);
    std::vector<double> numeric(op.size()), closed(op.size(), kInfinity);
    for (std::size_t k = 0; k < op.size(); ++k) {
        numeric[k] = field[op.node(k)];
        const Point x = g.point(op.node(k));
        for (std::size_t n : a_nodes) closed[k] = std::min(closed[k], closed_form_distance(p, g.point(n), x));
    }
    double d = kInfinity;
    for (std::size_t k : b) d = std::min(d, numeric[k]);
    const double times[] = {d * d / 64.0};  // d^2 / 4t = 16
    CHECK(davies_gaffney_check(sg, numeric, a, b, times, 0.2).worst_margin < 0.0);
    CHECK(davies_gaffney_check(sg, closed, a, b, times, 0.2).worst_margin < 0.0);
}
