#include "grusin/wave.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "grusin/errors.hpp"

namespace grusin {

double cfl_bound(const SparseMatrix& A, double lambda_pad)
{
    const double lam = estimate_lambda_max(A, 20) * lambda_pad;
    if (!(lam > 0.0)) return kInfinity;
    return 2.0 / std::sqrt(lam);
}

WaveState cosine_propagator(const SparseMatrix& A, const Eigen::VectorXd& v, double t, const WaveOptions& options)
{
    if (t < 0.0) throw std::invalid_argument("cosine_propagator: time must be non-negative");
    if (v.size() != A.rows()) throw std::invalid_argument("cosine_propagator: vector size mismatch");
    WaveState s;
    s.cfl = cfl_bound(A, options.lambda_pad);
    double dt_max = options.dt > 0.0 ? options.dt : options.safety * s.cfl;
    if (!(dt_max > 0.0) || dt_max > s.cfl)
        throw PreconditionError("cosine_propagator: step " + std::to_string(dt_max) + " violates the CFL bound " +
                                std::to_string(s.cfl));
    s.current = v;
    s.previous = v;
    if (t == 0.0) return s;
    s.steps = std::max(1L, static_cast<long>(std::ceil(t / dt_max)));
    const double dt = t / static_cast<double>(s.steps);
    s.dt = dt;
    const double dt2 = dt * dt;

    // Discrete energy |(u_{k+1}-u_k)/dt|^2 + <u_{k+1}, A u_k> is invariant under the recursion.
    Eigen::VectorXd Au = A * v;
    Eigen::VectorXd next = v - 0.5 * dt2 * Au;
    Eigen::VectorXd Anext = A * next;
    auto energy = [&](const Eigen::VectorXd& u0, const Eigen::VectorXd& u1, const Eigen::VectorXd& Au0) {
        return (u1 - u0).squaredNorm() / dt2 + u1.dot(Au0);
    };
    const double e0 = energy(v, next, Au);
    const double scale = std::max(std::abs(e0), 1e-300);
    Eigen::VectorXd prev = v;
    Eigen::VectorXd cur = next;
    Au = Anext;
    for (long k = 1; k < s.steps; ++k) {
        next = 2.0 * cur - prev - dt2 * Au;
        Anext = A * next;
        const double e = energy(cur, next, Au);
        s.energy_drift = std::max(s.energy_drift, std::abs(e - e0) / scale);
        prev.swap(cur);
        cur.swap(next);
        Au.swap(Anext);
    }
    s.current = cur;
    s.previous = prev;
    s.time = t;
    return s;
}

WaveState cosine_propagator(const DivergenceFormOperator& op, const Eigen::VectorXd& v, double t,
                            const WaveOptions& options)
{
    return cosine_propagator(op.matrix(), v, t, options);
}

LeakageReport finite_speed_check(const DivergenceFormOperator& op, const DistanceField& field, const Eigen::VectorXd& v,
                                 double t, double epsilon, const WaveOptions& options)
{
    const Grid& grid = op.grid();
    double h = 0.0;
    for (int k = 0; k < grid.dimension(); ++k) h = std::max(h, grid.spacing(k));
    LeakageReport r;
    r.cone_radius = (1.0 + epsilon) * t + 2.0 * h * field.stencil_order();
    const double vnorm = v.norm();
    if (vnorm == 0.0) return r;
    const WaveState s = cosine_propagator(op, v, t, options);
    r.energy_drift = s.energy_drift;
    double outside = 0.0;
    for (std::size_t k = 0; k < op.size(); ++k)
        if (field[op.node(k)] > r.cone_radius) outside += s.current[static_cast<Eigen::Index>(k)] * s.current[static_cast<Eigen::Index>(k)];
    r.leaked_fraction = std::sqrt(outside) / vnorm;
    return r;
}

DaviesGaffneyReport davies_gaffney_check(const Semigroup& semigroup, std::span<const double> distances,
                                         std::span<const std::size_t> set_a, std::span<const std::size_t> set_b,
                                         std::span<const double> times, double epsilon)
{
    const auto& op = semigroup.op();
    if (set_a.empty() || set_b.empty()) throw std::invalid_argument("davies_gaffney_check: sets must be non-empty");
    if (distances.size() != op.size()) throw std::invalid_argument("davies_gaffney_check: distance vector size mismatch");
    const std::unordered_set<std::size_t> a(set_a.begin(), set_a.end());
    const std::unordered_set<std::size_t> b(set_b.begin(), set_b.end());
    if (a != b)
        for (std::size_t k : b)
            if (a.count(k)) throw PreconditionError("davies_gaffney_check: sets overlap");

    DaviesGaffneyReport r;
    r.distance = kInfinity;
    for (std::size_t k : set_b) r.distance = std::min(r.distance, distances[k]);
    if (a == b) r.distance = 0.0;

    const double w = op.weight();
    Eigen::VectorXd ind_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
    for (std::size_t k : set_b) ind_b[static_cast<Eigen::Index>(k)] = 1.0;
    const double norm_a = std::sqrt(w * static_cast<double>(a.size()));
    const double norm_b = std::sqrt(w * static_cast<double>(b.size()));
    const auto evolved = semigroup.apply_times(ind_b, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double inner = 0.0;
        for (std::size_t k : a) inner += evolved[i][static_cast<Eigen::Index>(k)];
        inner *= w;
        const double t = times[i];
        const double margin = std::log(std::abs(inner)) + r.distance * r.distance / (4.0 * t * (1.0 + epsilon)) -
                              std::log(norm_a * norm_b);
        r.margins.push_back(margin);
        if (margin > r.worst_margin) {
            r.worst_margin = margin;
            r.worst_time = t;
        }
    }
    return r;
}

}  // namespace grusin
