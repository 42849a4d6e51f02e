#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grusin/errors.hpp"
#include "grusin/fitting.hpp"
#include "grusin/kernel_checks.hpp"
#include "grusin/semigroup.hpp"

using namespace grusin;

namespace {

EvolutionMethod method(MethodKind kind, double tol = 1e-10)
{
    EvolutionMethod m;
    m.kind = kind;
    m.tolerance = tol;
    return m;
}

const MethodKind kAll[] = {MethodKind::exact_eigendecomposition, MethodKind::krylov_exponential,
                           MethodKind::crank_nicolson};

}  // namespace

TEST_CASE("zero time returns the input exactly")
{
    const DivergenceFormOperator op = assemble(Grid(1, {17, 17}, {2.0, 2.0}), CoefficientField({1, 1, 0, 0, 1, 1}));
    const Eigen::VectorXd v = Eigen::VectorXd::Random(static_cast<Eigen::Index>(op.size()));
    for (MethodKind k : kAll) CHECK((apply_semigroup(op, v, 0.0, method(k)) - v).norm() == 0.0);
}

TEST_CASE("constants are preserved under Neumann truncation")
{
    const DivergenceFormOperator op = assemble(Grid(1, {17, 17}, {2.0, 2.0}), CoefficientField({1, 1, 0.3, 0.1, 1, 1}));
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(op.size()));
    for (MethodKind k : kAll)
        for (double t : {0.01, 1.0, 50.0}) CHECK((apply_semigroup(op, one, t, method(k)) - one).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("methods agree on a small problem")
{
    const DivergenceFormOperator op = assemble(Grid(1, {21, 21}, {2.0, 2.0}), CoefficientField({1, 1, 0, 0, 1, 1}));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
    v[static_cast<Eigen::Index>(op.size() / 2)] = 1.0;
    const Eigen::VectorXd exact = apply_semigroup(op, v, 0.3, method(MethodKind::exact_eigendecomposition));
    EvolutionMethod polynomial = method(MethodKind::krylov_exponential);
    polynomial.shift_invert = false;
    CHECK((apply_semigroup(op, v, 0.3, method(MethodKind::krylov_exponential)) - exact).norm() < 1e-7 * exact.norm());
    CHECK((apply_semigroup(op, v, 0.3, polynomial) - exact).norm() < 1e-7 * exact.norm());
    CHECK((apply_semigroup(op, v, 0.3, method(MethodKind::crank_nicolson, 1e-8)) - exact).norm() < 1e-5 * exact.norm());
}

TEST_CASE("conservation of the exact and Krylov methods")
{
    const Semigroup exact(assemble(Grid(1, {513}, {8.0}), CoefficientField({1, 0, 0.5, 0.5, 0, 0})),
                          method(MethodKind::exact_eigendecomposition));
    const std::size_t sources[] = {3, 100, 256, 400, 511};
    const double times[] = {0.01, 0.1, 1, 10, 100};
    CHECK(conservation_report(exact, sources, times).max_deviation <= 1e-8);
    const Semigroup krylov(assemble(Grid(1, {65, 65}, {4.0, 4.0}), CoefficientField({1, 1, 0, 0, 1, 1})),
                           method(MethodKind::krylov_exponential, 1e-8));
    const std::size_t s2[] = {0, 1000, 2112, 4000};
    CHECK(conservation_report(krylov, s2, times).max_deviation <= 1e-6);
}

TEST_CASE("absorbing hyperplane loses mass below the separation threshold")
{
    const Semigroup sg(assemble(Grid(1, {129}, {4.0}), CoefficientField({1, 0, 0.25, 0.25, 0, 0}), Boundary::dirichlet_origin),
                       method(MethodKind::exact_eigendecomposition));
    const std::size_t sources[] = {60, 70};
    const double times[] = {0.5, 2.0};
    CHECK(conservation_report(sg, sources, times).max_deviation > 1e-3);
}

TEST_CASE("exact method refuses oversized problems")
{
    EvolutionMethod m = method(MethodKind::exact_eigendecomposition);
    m.max_dimension = 100;
    const DivergenceFormOperator op = assemble(Grid(1, {11, 11}, {1.0, 1.0}), CoefficientField({1, 1, 0, 0, 0, 0}));
    CHECK_THROWS_AS(Semigroup(op, m), CapacityError);
    CHECK(EvolutionMethod::automatic(10).kind == MethodKind::exact_eigendecomposition);
    CHECK(EvolutionMethod::automatic(100000).kind == MethodKind::krylov_exponential);
}

TEST_CASE("free-space kernel on a fine one-dimensional grid")
{
    const Grid g(1, {1025}, {8.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 0, 0, 0, 0, 0})), method(MethodKind::exact_eigendecomposition));
    const KernelSlice k = heat_kernel(sg, 512, 0.1);
    double sup = 0.0;
    for (std::size_t i = 0; i < sg.op().size(); ++i) {
        const double x = g.coordinate(sg.op().node(i), 0);
        sup = std::max(sup, std::abs(k.values[static_cast<Eigen::Index>(i)] -
                                     std::exp(-x * x / 0.4) / std::sqrt(4 * std::numbers::pi * 0.1)));
    }
    CHECK(sup < 1e-3);
    CHECK(boundary_tail(8.0, 0.1) < 1e-8);
}

TEST_CASE("Euclidean on-diagonal decay")
{
    const Grid g(1, {2049}, {16.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 0, 0, 0, 0, 0})), method(MethodKind::krylov_exponential));
    const std::size_t candidates[] = {1024};
    const double times[] = {0.05, 0.1, 0.2, 0.5, 1, 2};
    const std::size_t nodes[] = {1024};
    const DecayReport r = ondiagonal_decay(sg, candidates, times, distance_to_boundary(sg.op().coefficients(), g, nodes));
    CHECK(r.refused.empty());
    CHECK(fit_loglog(r.times, r.sup_diag).slope == doctest::Approx(-0.5).epsilon(0.05));
}

TEST_CASE("decay refuses times contaminated by the boundary")
{
    const Grid g(1, {65}, {2.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 0, 0, 0, 0, 0})), method(MethodKind::exact_eigendecomposition));
    const std::size_t candidates[] = {32};
    const double times[] = {0.01, 0.05, 1.0};
    const DecayReport r = ondiagonal_decay(sg, candidates, times, 2.0, 1e-6);
    CHECK(r.refused.size() == 1);
    CHECK(r.refused.front() == 1.0);
}

TEST_CASE("Gaussian bounds are finite and positive for constant coefficients")
{
    const Grid g(1, {65, 65}, {4.0, 4.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 1, 0, 0, 0, 0})), method(MethodKind::krylov_exponential));
    const Point samples[] = {{{0.0}, {0.0}}, {{0.5}, {0.5}}, {{-1.0}, {0.25}}};
    const double times[] = {0.2, 0.4};
    const GaussianBoundReport r = gaussian_bounds(sg, samples, times, 0.1);
    CHECK(std::isfinite(r.upper_constant));
    CHECK(r.upper_constant > 0);
    CHECK(r.lower_constant > 0);
}

TEST_CASE("on-diagonal lower bound on one side of a separating hyperplane")
{
    const Grid g(1, {257}, {4.0});
    const Semigroup sg(assemble(g, CoefficientField({1, 0, 0.75, 0.75, 0, 0}), Boundary::half_line_positive),
                       method(MethodKind::exact_eigendecomposition));
    const Point samples[] = {{{0.5}, {}}, {{1.0}, {}}};
    const double times[] = {0.1, 0.3};
    CHECK(gaussian_bounds(sg, samples, times, 0.1).lower_constant > 0);
}

TEST_CASE("kernel comparison preconditions and identical coefficients")
{
    const Grid g(1, {65, 65}, {4.0, 4.0});
    const GrusinParameters flat{1, 1, 0, 0, 0, 0};
    std::vector<std::size_t> region;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.x1_norm(i) >= 2.0 && g.x1_norm(i) <= 2.5 && std::abs(g.coordinate(i, 1)) <= 0.5) region.push_back(i);
    const std::size_t sources[] = {region.front()};
    const double times[] = {0.05, 0.5};
    const ComparisonReport r = kernel_comparison(g, flat, 1.0, region, sources, times, method(MethodKind::krylov_exponential));
    for (double d : r.sup_difference) CHECK(d <= 1e-10);
    const std::size_t inside[] = {g.snap({{0.0}, {0.0}}).index};
    CHECK_THROWS_AS((void)kernel_comparison(g, flat, 1.0, inside, inside, times, method(MethodKind::krylov_exponential)),
                    PreconditionError);
}

TEST_CASE("separation dichotomy")
{
    const Grid g(1, {17}, {2.0});
    const SeparationReport strong = separation_check({1, 0, 0.75, 0.75, 0, 0}, g, 3, 1.0, 1.0, 1e-8);
    CHECK(strong.strongly_degenerate);
    CHECK(strong.passed);
    for (const auto& lv : strong.levels) CHECK(lv.max_cross_kernel == 0.0);
    const SeparationReport boundary = separation_check({1, 0, 0.5, 0.5, 0, 0}, g, 2, 1.0, 1.0, 1e-8);
    CHECK(boundary.strongly_degenerate);
    for (const auto& lv : boundary.levels) CHECK(lv.max_cross_kernel == 0.0);
    const SeparationReport weak = separation_check({1, 0, 0.25, 0.25, 0, 0}, g, 3, 1.0, 1.0, 1e-8);
    CHECK(!weak.strongly_degenerate);
    CHECK(weak.passed);
    for (const auto& lv : weak.levels) CHECK(lv.min_cross_kernel > 0.0);
}
