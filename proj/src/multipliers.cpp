#include "grusin/multipliers.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "grusin/errors.hpp"
#include "grusin/geometry.hpp"
#include "grusin/quadrature.hpp"

namespace grusin {

MultiplierBranch MultiplierSpec::branch() const
{
    return params.delta1 >= params.delta1p ? MultiplierBranch::local_dominant : MultiplierBranch::global_dominant;
}

double MultiplierSpec::block1(double L) const
{
    if (L <= 0.0) return 0.0;
    return std::pow(L, 1.0 - params.delta1p) * std::pow(1.0 + L, -(params.delta1 - params.delta1p));
}

double MultiplierSpec::block2(double L) const
{
    if (L <= 0.0) return 0.0;
    const DerivedExponents e = derive_exponents(params);
    return std::pow(L, e.alphap) * std::pow(1.0 + L, e.alpha - e.alphap);
}

double multiplier_value(const MultiplierSpec& spec, std::span<const double> p1, std::span<const double> p2)
{
    double L1 = 0.0, L2 = 0.0;
    for (double v : p1) L1 += v * v;
    for (double v : p2) L2 += v * v;
    return spec.scale * (spec.block1(L1) + spec.block2(L2));
}

double unit_ball_volume(int d)
{
    if (d < 0) throw std::invalid_argument("unit_ball_volume: negative dimension");
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

namespace {

// Radius R with F(R^2) = s for an increasing symbol F vanishing at 0.
template <class F>
double inverse_radius(F&& symbol, double s)
{
    if (s <= 0.0) return 0.0;
    double lo = 1.0, hi = 1.0;
    while (symbol(hi * hi) < s) {
        hi *= 2.0;
        if (hi > 1e150) return kInfinity;
    }
    while (symbol(lo * lo) >= s) {
        lo *= 0.5;
        if (lo < 1e-150) return 0.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        (symbol(mid * mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// The FFTW planner is not thread-safe.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

}  // namespace

double vf_block_volume(const MultiplierSpec& spec, int block, double r)
{
    if (!(r > 0.0)) throw std::invalid_argument("vf_volume: r must be positive");
    if (block != 1 && block != 2) throw std::invalid_argument("vf_block_volume: block must be 1 or 2");
    const int d = block == 1 ? spec.params.n : spec.params.m;
    if (d == 0) return 1.0;
    const double R = inverse_radius(
        [&](double L) { return spec.scale * (block == 1 ? spec.block1(L) : spec.block2(L)); }, r * r);
    return unit_ball_volume(d) * std::pow(R, d);
}

double vf_volume(const MultiplierSpec& spec, double r)
{
    if (!(r > 0.0)) throw std::invalid_argument("vf_volume: r must be positive");
    const int n = spec.params.n;
    const int m = spec.params.m;
    if (m == 0) return vf_block_volume(spec, 1, r);
    const double s = r * r;
    const double R1 = inverse_radius([&](double L) { return spec.scale * spec.block1(L); }, s);
    const double shell = n * unit_ball_volume(n);  // surface measure of the unit sphere in R^n
    const double wm = unit_ball_volume(m);
    // rho = R1 g(u) with g(u) = u^2 (3 - 2u) smooths both endpoints.
    const GaussRule& rule = gauss_legendre(10);
    constexpr int panels = 48;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double u0 = static_cast<double>(p) / panels;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double u = u0 + rule.nodes[q] / panels;
            const double rho = R1 * u * u * (3.0 - 2.0 * u);
            const double jac = R1 * 6.0 * u * (1.0 - u);
            const double rest = s - spec.scale * spec.block1(rho * rho);
            if (rest <= 0.0) continue;
            const double R2 = inverse_radius([&](double L) { return spec.scale * spec.block2(L); }, rest);
            acc += rule.weights[q] / panels * shell * std::pow(rho, n - 1) * wm * std::pow(R2, m) * jac;
        }
    }
    return acc;
}

double fourier_form(const Grid& grid, const MultiplierSpec& spec, std::span<const double> values)
{
    if (values.size() != grid.size()) throw std::invalid_argument("fourier_form: vector size mismatch");
    const int d = grid.dimension();
    const int n = grid.n();
    std::vector<int> M(d);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) {
        M[k] = grid.nodes(k) - 1;  // periodic box drops the last node per axis
        total *= static_cast<std::size_t>(M[k]);
    }
    auto* data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    if (!data) throw std::bad_alloc();
    std::vector<int> multi(d, 0);
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rem = lin;
        for (int k = 0; k < d; ++k) {
            multi[k] = static_cast<int>(rem % static_cast<std::size_t>(M[k]));
            rem /= static_cast<std::size_t>(M[k]);
        }
        data[lin][0] = values[grid.linear_index(multi)];
        data[lin][1] = 0.0;
    }
    std::vector<int> dims(M.rbegin(), M.rend());  // FFTW expects the slowest axis first
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft(d, dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    double cell = 1.0, dp = 1.0;
    for (int k = 0; k < d; ++k) {
        cell *= grid.spacing(k);
        dp *= 2.0 * std::numbers::pi / (M[k] * grid.spacing(k));
    }
    std::vector<double> p1(n), p2(d - n);
    double acc = 0.0;
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rem = lin;
        for (int k = 0; k < d; ++k) {
            const int i = static_cast<int>(rem % static_cast<std::size_t>(M[k]));
            rem /= static_cast<std::size_t>(M[k]);
            const int wrapped = i <= M[k] / 2 ? i : i - M[k];
            const double p = 2.0 * std::numbers::pi * wrapped / (M[k] * grid.spacing(k));
            (k < n ? p1[k] : p2[k - n]) = p;
        }
        const double amp2 = (data[lin][0] * data[lin][0] + data[lin][1] * data[lin][1]) * cell * cell;
        acc += multiplier_value(spec, p1, p2) * amp2;
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(data);
    return acc * dp / std::pow(2.0 * std::numbers::pi, d);
}

NashReport nash_check(const DivergenceFormOperator& op, const MultiplierSpec& spec, const NashOptions& options)
{
    const Grid& grid = op.grid();
    const int d = grid.dimension();
    if (options.ensemble < 1) throw std::invalid_argument("nash.ensemble: must be positive");
    if (options.half_line != (op.boundary() == Boundary::half_line_positive))
        throw PreconditionError("nash_check: half-line mode needs a half_line_positive operator and vice versa");
    double hmax = 0.0;
    for (int k = 0; k < d; ++k) hmax = std::max(hmax, grid.spacing(k));
    if (options.min_width < options.min_width_cells * hmax)
        throw PreconditionError("nash_check: resolution too coarse for the narrowest bump (width " +
                                std::to_string(options.min_width) + " < " + std::to_string(options.min_width_cells) +
                                " cells)");
    if (!(options.max_width >= options.min_width)) throw std::invalid_argument("nash: max_width below min_width");

    NashReport r;
    r.volume_factor = options.half_line ? 4.0 : 1.0;
    r.radii = options.radii;
    if (r.radii.empty())
        for (int i = 0; i <= 50; ++i) r.radii.push_back(std::pow(10.0, -2.0 + 5.0 * i / 50.0));
    std::vector<double> vf(r.radii.size());
    for (std::size_t i = 0; i < r.radii.size(); ++i) vf[i] = vf_volume(spec, r.radii[i]);
    const double fourier_norm = std::pow(2.0 * std::numbers::pi, -d);

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Member {
        double form, fourier, l2sq, l1;
    };
    std::vector<Member> members;
    const double w = grid.node_weight();
    std::vector<double> values(grid.size());
    for (int e = 0; e < options.ensemble; ++e) {
        std::vector<double> center(d), width(d);
        const double amplitude = 0.5 + 1.5 * unit(rng);
        for (int k = 0; k < d; ++k) {
            width[k] = options.min_width + (options.max_width - options.min_width) * unit(rng);
            const double L = grid.extent(k);
            const double margin = width[k] + 2.0 * grid.spacing(k);
            double lo = -L + margin;
            if (k == 0 && options.half_line) lo = -width[k];
            const double hi = L - margin;
            if (hi <= lo) throw PreconditionError("nash_check: bump wider than the box");
            center[k] = lo + (hi - lo) * unit(rng);
        }
        for (std::size_t idx = 0; idx < grid.size(); ++idx) {
            double s2 = 0.0;
            for (int k = 0; k < d; ++k) {
                double x = grid.coordinate(idx, k);
                if (k == 0 && options.half_line) x = std::abs(x);
                const double z = (x - center[k]) / width[k];
                s2 += z * z;
            }
            values[idx] = s2 < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0;
        }
        Member mb{};
        mb.form = form_value(op, op.from_grid(values));
        mb.fourier = fourier_form(grid, spec, values);
        for (double v : values) {
            mb.l2sq += w * v * v;
            mb.l1 += w * std::abs(v);
        }
        if (options.half_line) {
            mb.fourier *= 0.5;
            mb.l2sq *= 0.5;
            mb.l1 *= 0.5;
        }
        if (!(mb.fourier > 0.0)) throw DataError("nash_check: Fourier form vanished for a bump");
        members.push_back(mb);
        r.ratios.push_back(mb.form / mb.fourier);
    }
    r.min_ratio = *std::min_element(r.ratios.begin(), r.ratios.end());
    r.max_ratio = *std::max_element(r.ratios.begin(), r.ratios.end());
    r.worst_margin.assign(r.radii.size(), std::numeric_limits<double>::infinity());
    for (const auto& mb : members)
        for (std::size_t i = 0; i < r.radii.size(); ++i) {
            const double rr = r.radii[i];
            const double rhs = mb.form / (r.min_ratio * rr * rr) + r.volume_factor * fourier_norm * vf[i] * mb.l1 * mb.l1;
            r.worst_margin[i] = std::min(r.worst_margin[i], (rhs - mb.l2sq) / mb.l2sq);
        }
    r.min_margin = *std::min_element(r.worst_margin.begin(), r.worst_margin.end());
    return r;
}

double hardy_optimal_constant(int n) { return (n - 2.0) * (n - 2.0) / 4.0; }

namespace {

struct HardyGrid {
    int n;
    int cells;
    double h;
    std::size_t size;
    Eigen::MatrixXd laplacian;
    Eigen::VectorXd radius;
};

HardyGrid hardy_grid(int n, int cells)
{
    if (n < 1 || n > 3) throw std::invalid_argument("hardy: dimension must be 1, 2 or 3");
    if (cells < 2 || cells % 2 != 0) throw std::invalid_argument("hardy: cell count must be even and >= 2");
    HardyGrid g{n, cells, 2.0 / cells, 1, {}, {}};
    for (int k = 0; k < n; ++k) g.size *= static_cast<std::size_t>(cells);
    const auto N = static_cast<Eigen::Index>(g.size);
    g.laplacian = Eigen::MatrixXd::Zero(N, N);
    g.radius.resize(N);
    std::vector<int> multi(n);
    for (Eigen::Index i = 0; i < N; ++i) {
        Eigen::Index rem = i, stride = 1;
        double r2 = 0.0;
        for (int k = 0; k < n; ++k) {
            multi[k] = static_cast<int>(rem % cells);
            rem /= cells;
            const double x = -1.0 + g.h * (multi[k] + 0.5);
            r2 += x * x;
        }
        g.radius[i] = std::sqrt(r2);
        g.laplacian(i, i) = 2.0 * n / (g.h * g.h);
        stride = 1;
        for (int k = 0; k < n; ++k) {
            if (multi[k] + 1 < cells) {
                g.laplacian(i, i + stride) = -1.0 / (g.h * g.h);
                g.laplacian(i + stride, i) = -1.0 / (g.h * g.h);
            }
            stride *= cells;
        }
    }
    return g;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& A, double gamma)
{
    if (gamma == 1.0) return A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).array().pow(gamma);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

void validate_hardy(int n, double gamma)
{
    if (!(gamma >= 0.0 && gamma <= 1.0 && gamma < 0.5 * n))
        throw std::invalid_argument("hardy.gamma: must satisfy 0 <= gamma <= 1 and gamma < n/2");
}

}  // namespace

double hardy_fitted_constant(int n, double gamma, int cells)
{
    validate_hardy(n, gamma);
    const HardyGrid g = hardy_grid(n, cells);
    const Eigen::MatrixXd P = matrix_power(g.laplacian, gamma);
    const Eigen::VectorXd s = g.radius.array().pow(gamma);
    const Eigen::MatrixXd S = s.asDiagonal() * P * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

HardyReport hardy_check(int n, double gamma, double fraction, int cells)
{
    validate_hardy(n, gamma);
    if (fraction < 0.0) throw std::invalid_argument("hardy.fraction: must be non-negative");
    HardyReport r;
    r.cells = cells;
    r.constant = gamma == 1.0 ? hardy_optimal_constant(n) : hardy_fitted_constant(n, gamma, std::max(2, cells / 2 + (cells / 2) % 2));
    const HardyGrid g = hardy_grid(n, cells);
    Eigen::MatrixXd M = matrix_power(g.laplacian, gamma);
    for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, i) -= fraction * r.constant * std::pow(g.radius[i], -2.0 * gamma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    r.lambda_min = es.eigenvalues()[0];
    return r;
}

namespace {

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int dim, int rank)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd G(dim, rank);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < rank; ++j) G(i, j) = normal(rng);
    return G * G.transpose() / static_cast<double>(rank);
}

template <class F>
Eigen::MatrixXd spectral(const Eigen::MatrixXd& A, F&& f)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    Eigen::VectorXd v = es.eigenvalues().cwiseMax(0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f(v[i]);
    return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& A)
{
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace

OperatorInequalityReport operator_inequality_checks(int trials, int dim, double gamma, int root_level,
                                                    std::uint64_t seed)
{
    if (dim < 1 || dim > 50) throw std::invalid_argument("operator_inequalities.dim: must lie in [1, 50]");
    if (trials < 1) throw std::invalid_argument("operator_inequalities.trials: must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("operator_inequalities.gamma: must lie in [0, 1]");
    if (root_level < 1) throw std::invalid_argument("operator_inequalities.root_level: must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> rank_dist(dim, 2 * dim);
    std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
    const double s = std::ldexp(1.0, -root_level);
    const double factor = std::pow(2.0, -1.0 + s);
    OperatorInequalityReport r;
    r.trials = trials;
    r.worst_power_ratio = kInfinity;
    r.worst_sum_root = kInfinity;
    auto ratio = [&](double x) { return x * std::pow(1.0 + x, -gamma); };
    auto root = [&](double x) { return std::pow(x, s); };
    for (int t = 0; t < trials; ++t) {
        const double sb = std::pow(10.0, log_scale(rng));
        const double sd = std::pow(10.0, log_scale(rng));
        const Eigen::MatrixXd B = sb * random_psd(rng, dim, rank_dist(rng));
        const Eigen::MatrixXd A = B + sd * random_psd(rng, dim, rank_dist(rng));
        r.worst_power_ratio = std::min(r.worst_power_ratio, min_eigenvalue(spectral(A, ratio) - spectral(B, ratio)));
        const Eigen::MatrixXd C = sd * random_psd(rng, dim, rank_dist(rng));
        const Eigen::MatrixXd lhs = spectral(B + C, root);
        const Eigen::MatrixXd rhs = factor * (spectral(B, root) + spectral(C, root));
        r.worst_sum_root = std::min(r.worst_sum_root, min_eigenvalue(lhs - rhs));
    }
    return r;
}

}  // namespace grusin
