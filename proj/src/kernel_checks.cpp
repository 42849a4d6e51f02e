#include "grusin/kernel_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "grusin/errors.hpp"
#include "grusin/fitting.hpp"

namespace grusin {

ConservationReport conservation_report(const Semigroup& semigroup, std::span<const std::size_t> sources,
                                       std::span<const double> times)
{
    ConservationReport r;
    for (std::size_t y : sources) {
        const auto slices = heat_kernel_times(semigroup, y, times);
        for (const auto& k : slices) {
            const double dev = std::abs(1.0 - k.mass());
            if (dev >= r.max_deviation) {
                r.max_deviation = dev;
                r.worst_source = y;
                r.worst_time = k.t;
            }
        }
    }
    return r;
}

double distance_to_boundary(const CoefficientField& coeffs, const Grid& grid, std::span<const std::size_t> nodes,
                            int stencil_order)
{
    const DistanceField field = numerical_distance(coeffs, grid, nodes, stencil_order);
    double best = kInfinity;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        bool edge = false;
        for (int k = 0; k < grid.dimension() && !edge; ++k) {
            const int i = grid.axis_index(idx, k);
            edge = i == 0 || i == grid.nodes(k) - 1;
        }
        if (edge) best = std::min(best, field[idx]);
    }
    return best;
}

double boundary_tail(double distance, double t)
{
    if (std::isinf(distance)) return 0.0;
    return std::exp(-distance * distance / (4.0 * t));
}

DecayReport ondiagonal_decay(const Semigroup& semigroup, std::span<const std::size_t> candidates,
                             std::span<const double> times, double boundary_distance, double guard)
{
    DecayReport r;
    std::vector<double> accepted;
    for (double t : times) {
        if (boundary_tail(boundary_distance, t) > guard)
            r.refused.push_back(t);
        else
            accepted.push_back(t);
    }
    std::sort(accepted.begin(), accepted.end());
    r.times = accepted;
    r.sup_diag.assign(accepted.size(), 0.0);
    r.argmax.assign(accepted.size(), 0);
    if (accepted.empty()) return r;
    const SparseMatrix& A = semigroup.op().matrix();
    for (std::size_t y : candidates) {
        if (A.coeff(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y)) == 0.0) continue;
        const auto slices = heat_kernel_times(semigroup, y, accepted);
        for (std::size_t i = 0; i < slices.size(); ++i) {
            const double v = slices[i].values[static_cast<Eigen::Index>(y)];
            if (v > r.sup_diag[i]) {
                r.sup_diag[i] = v;
                r.argmax[i] = y;
            }
        }
    }
    return r;
}

GaussianBoundReport gaussian_bounds(const Semigroup& semigroup, std::span<const Point> samples,
                                    std::span<const double> times, double epsilon, int stencil_order,
                                    double noise_floor)
{
    const auto& op = semigroup.op();
    const Grid& grid = op.grid();
    std::vector<std::size_t> nodes;
    std::vector<DistanceField> fields;
    for (const Point& p : samples) {
        const std::size_t idx = grid.snap(p).index;
        if (!op.contains(idx)) throw PreconditionError("gaussian_bounds: sample point is not an unknown of the operator");
        nodes.push_back(idx);
        fields.push_back(numerical_distance(op.coefficients(), grid, p, stencil_order));
    }
    GaussianBoundReport r;
    r.lower_constant = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const auto slices = heat_kernel_times(semigroup, op.unknown(nodes[j]), times);
        for (const auto& k : slices) {
            const double vy = ball_volume(fields[j], std::sqrt(k.t)).volume;
            const double floor = noise_floor * k.values.cwiseAbs().maxCoeff();
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                KernelSample s;
                s.x = grid.point(nodes[i]);
                s.y = grid.point(nodes[j]);
                s.t = k.t;
                s.kernel = k.values[static_cast<Eigen::Index>(op.unknown(nodes[i]))];
                s.distance = fields[j][nodes[i]];
                s.volume_x = ball_volume(fields[i], std::sqrt(k.t)).volume;
                s.volume_y = vy;
                const double upper = s.kernel * std::sqrt(s.volume_x * s.volume_y) *
                                     std::exp(s.distance * s.distance / (4.0 * (1.0 + epsilon) * s.t));
                s.resolved = s.kernel > floor;
                if (s.resolved && upper > r.upper_constant) {
                    r.upper_constant = upper;
                    r.upper_argmax = s;
                }
                if (i == j) {
                    const double lower = s.kernel * s.volume_x;
                    if (lower < r.lower_constant) {
                        r.lower_constant = lower;
                        r.lower_argmin = s;
                    }
                }
                r.samples.push_back(std::move(s));
            }
        }
    }
    return r;
}

ComparisonReport kernel_comparison(const Grid& grid, const GrusinParameters& params, double r_cut,
                                   std::span<const std::size_t> region, std::span<const std::size_t> sources,
                                   std::span<const double> times, const EvolutionMethod& method, int stencil_order)
{
    if (!(r_cut > 0.0)) throw PreconditionError("kernel_comparison: r_cut must be positive");
    if (region.empty() || sources.empty()) throw PreconditionError("kernel_comparison: region and sources must be non-empty");
    for (std::size_t idx : region)
        if (!(grid.x1_norm(idx) > r_cut)) throw PreconditionError("kernel_comparison: region A must lie in {|x1| > r_cut}");
    for (std::size_t idx : sources)
        if (std::find(region.begin(), region.end(), idx) == region.end())
            throw PreconditionError("kernel_comparison: sources must belong to the region");

    const CoefficientField true_coeffs(params);
    const CoefficientField frozen(params, 0.5 * r_cut);
    const Semigroup s2(assemble(grid, true_coeffs), method);
    const Semigroup s1(assemble(grid, frozen), method);

    std::vector<std::size_t> inner;
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        if (grid.x1_norm(idx) <= 0.5 * r_cut) inner.push_back(idx);
    ComparisonReport r;
    const DistanceField field = numerical_distance(frozen, grid, inner, stencil_order);
    r.rho = kInfinity;
    for (std::size_t idx : region) r.rho = std::min(r.rho, field[idx]);

    r.times.assign(times.begin(), times.end());
    r.sup_difference.assign(times.size(), 0.0);
    for (std::size_t y : sources) {
        const auto k1 = heat_kernel_times(s1, s1.op().unknown(y), times);
        const auto k2 = heat_kernel_times(s2, s2.op().unknown(y), times);
        for (std::size_t i = 0; i < times.size(); ++i)
            for (std::size_t x : region) {
                const double d = std::abs(k1[i].values[static_cast<Eigen::Index>(s1.op().unknown(x))] -
                                          k2[i].values[static_cast<Eigen::Index>(s2.op().unknown(x))]);
                r.sup_difference[i] = std::max(r.sup_difference[i], d);
            }
    }
    const Point origin{std::vector<double>(params.n, 0.0), std::vector<double>(params.m, 0.0)};
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double v = ball_volume(params, origin, t / r.rho).volume;
        r.reference.push_back(std::exp(-r.rho * r.rho / (4.0 * t)) / (v * std::sqrt(r.rho * r.rho / t)));
        if (r.sup_difference[i] > 0.0) {
            xs.push_back(r.rho * r.rho / (4.0 * t));
            ys.push_back(std::log(r.sup_difference[i]));
        }
    }
    r.slope = xs.size() == times.size() && xs.size() >= 2 ? fit_line(xs, ys).slope
                                                          : std::numeric_limits<double>::quiet_NaN();
    return r;
}

namespace {

// Grid nodes whose x1 coordinates have the given sign and all coordinates lie within the window.
std::vector<std::size_t> window_nodes(const Grid& grid, int sign, double window)
{
    std::vector<std::size_t> out;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const double x0 = grid.coordinate(idx, 0);
        if (sign * x0 <= 0.0) continue;
        bool inside = true;
        for (int k = 0; k < grid.dimension() && inside; ++k) inside = std::abs(grid.coordinate(idx, k)) <= window;
        if (inside) out.push_back(idx);
    }
    return out;
}

}  // namespace

SeparationReport separation_check(const GrusinParameters& params, const Grid& coarsest, int levels, double t,
                                  double window, double tolerance)
{
    if (params.n != 1) throw PreconditionError("separation_check: requires n = 1");
    if (levels < 1) throw std::invalid_argument("separation_check: at least one level is required");
    SeparationReport report;
    report.strongly_degenerate = params.delta1 >= 0.5;
    EvolutionMethod method;
    method.kind = MethodKind::krylov_exponential;
    method.tolerance = 1e-10;
    const CoefficientField coeffs(params);
    Grid grid = coarsest;
    for (int level = 0; level < levels; ++level, grid = grid.refined()) {
        SeparationLevel lv;
        lv.spacing = grid.spacing(0);
        const Semigroup neumann(assemble(grid, coeffs, Boundary::neumann_truncation), method);
        const Semigroup dirichlet(assemble(grid, coeffs, Boundary::dirichlet_origin), method);
        const auto positive = window_nodes(grid, 1, window);
        const auto negative = window_nodes(grid, -1, window);
        std::vector<std::size_t> sources;
        for (double f : {0.25, 0.5, 1.0}) {
            Point p{std::vector<double>{f * window}, std::vector<double>(params.m, 0.0)};
            sources.push_back(grid.snap(p).index);
        }
        lv.min_cross_kernel = kInfinity;
        const double times[] = {t};
        for (std::size_t y : sources) {
            const auto kn = heat_kernel_times(neumann, neumann.op().unknown(y), times).front();
            const auto kd = heat_kernel_times(dirichlet, dirichlet.op().unknown(y), times).front();
            for (std::size_t x : negative) {
                const double v = kn.values[static_cast<Eigen::Index>(neumann.op().unknown(x))];
                lv.max_cross_kernel = std::max(lv.max_cross_kernel, std::abs(v));
                lv.min_cross_kernel = std::min(lv.min_cross_kernel, v);
            }
            for (std::size_t x : positive) {
                const double a = kn.values[static_cast<Eigen::Index>(neumann.op().unknown(x))];
                const double b = kd.values[static_cast<Eigen::Index>(dirichlet.op().unknown(x))];
                lv.dirichlet_gap = std::max(lv.dirichlet_gap, std::abs(a - b));
            }
        }
        report.levels.push_back(lv);
    }

    bool ok = true;
    const auto& L = report.levels;
    if (report.strongly_degenerate) {
        for (const auto& lv : L) ok = ok && lv.max_cross_kernel == 0.0;
        // Gaps below the tolerance are solver noise and count as zero.
        for (std::size_t i = 1; i < L.size(); ++i)
            ok = ok && L[i].dirichlet_gap <= std::max(L[i - 1].dirichlet_gap, tolerance);
        ok = ok && L.back().dirichlet_gap <= tolerance;
        report.verdict = ok ? "separated: cross kernel vanishes and Dirichlet/Neumann gap decreases to zero"
                            : "expected separation not observed";
    } else {
        for (const auto& lv : L) ok = ok && lv.min_cross_kernel > 0.0;
        for (const auto& lv : L) ok = ok && lv.dirichlet_gap > tolerance && lv.dirichlet_gap >= 0.25 * L.front().dirichlet_gap;
        report.verdict = ok ? "coupled: cross kernel positive and Dirichlet/Neumann gap bounded below"
                            : "expected coupling not observed";
    }
    report.passed = ok;
    return report;
}

}  // namespace grusin
