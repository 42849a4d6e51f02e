#include "grusin/semigroup.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grusin/errors.hpp"
#include "grusin/quadrature.hpp"

namespace grusin {

std::string to_string(MethodKind kind)
{
    switch (kind) {
    case MethodKind::exact_eigendecomposition: return "exact_eigendecomposition";
    case MethodKind::krylov_exponential: return "krylov_exponential";
    case MethodKind::crank_nicolson: return "crank_nicolson";
    }
    return "unknown";
}

MethodKind method_from_string(const std::string& name)
{
    for (MethodKind k :
         {MethodKind::exact_eigendecomposition, MethodKind::krylov_exponential, MethodKind::crank_nicolson})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("method.kind: unknown method '" + name + "'");
}

EvolutionMethod EvolutionMethod::automatic(std::size_t unknowns)
{
    EvolutionMethod m;
    m.kind = unknowns <= m.max_dimension ? MethodKind::exact_eigendecomposition : MethodKind::krylov_exponential;
    return m;
}

Eigen::VectorXd krylov_expv(const SparseMatrix& A, const Eigen::VectorXd& v, double t, double tolerance,
                            int krylov_dimension)
{
    if (t < 0.0) throw std::invalid_argument("krylov_expv: time must be non-negative");
    if (!(tolerance > 0.0)) throw std::invalid_argument("krylov_expv: tolerance must be positive");
    Eigen::VectorXd w = v;
    const double vnorm = v.norm();
    if (t == 0.0 || vnorm == 0.0) return w;
    const Eigen::Index N = v.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(std::max(2, krylov_dimension), N));
    const GaussRule& rule = gauss_legendre(16);

    Eigen::MatrixXd V(N, m + 1);
    Eigen::VectorXd alpha(m), beta(m);
    double done = 0.0;
    double tau = t;
    int guard = 0;
    while (done < t) {
        if (++guard > 1000000) throw std::runtime_error("krylov_expv: step size collapsed");
        const double bnorm = w.norm();
        if (bnorm == 0.0) break;
        V.col(0) = w / bnorm;
        int k = m;
        bool breakdown = false;
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd z = A * V.col(j);
            alpha[j] = V.col(j).dot(z);
            // Full reorthogonalisation, applied twice.
            for (int pass = 0; pass < 2; ++pass) z.noalias() -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * z);
            beta[j] = z.norm();
            if (beta[j] <= 1e-13 * (std::abs(alpha[j]) + (j > 0 ? beta[j - 1] : 0.0)) || beta[j] == 0.0) {
                k = j + 1;
                breakdown = true;
                break;
            }
            V.col(j + 1) = z / beta[j];
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int j = 0; j < k; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < k) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        const Eigen::VectorXd q0 = es.eigenvectors().row(0).transpose();
        const Eigen::VectorXd qk = es.eigenvectors().row(k - 1).transpose();

        tau = std::min(tau, t - done);
        Eigen::VectorXd y;
        while (true) {
            y = es.eigenvectors() * (q0.array() * (-tau * lam.array()).exp()).matrix();
            if (breakdown) break;
            // |e^{-tau A}w - bnorm V y| <= bnorm beta_k * integral_0^tau |e_k^T e^{-sT} e_1| ds
            double integral = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double s = tau * rule.nodes[q];
                integral += rule.weights[q] * std::abs((qk.array() * q0.array() * (-s * lam.array()).exp()).sum());
            }
            const double err = bnorm * beta[k - 1] * tau * integral;
            if (err <= tolerance * vnorm * std::max(tau / t, 1e-3)) break;
            tau *= 0.5;
        }
        w = bnorm * (V.leftCols(k) * y);
        done += tau;
        if (done >= t * (1.0 - 1e-15)) break;
        tau *= 2.0;
    }
    return w;
}

ShiftInvertSolver::ShiftInvertSolver(const SparseMatrix& A, double gamma) : gamma_(gamma)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("ShiftInvertSolver: gamma must be positive");
    Eigen::SparseMatrix<double> I(A.rows(), A.cols());
    I.setIdentity();
    const Eigen::SparseMatrix<double> M = I + gamma * Eigen::SparseMatrix<double>(A);
    auto f = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(M);
    if (f->info() != Eigen::Success) throw std::runtime_error("ShiftInvertSolver: factorisation failed");
    factor_ = std::move(f);
}

Eigen::VectorXd ShiftInvertSolver::solve(const Eigen::VectorXd& v) const { return factor_->solve(v); }

namespace {

// Lanczos on S = (I + gamma A)^{-1}; A is represented as (T^{-1} - I) / gamma on the basis.
bool shift_invert_step(const ShiftInvertSolver& solver, const Eigen::VectorXd& v, double t, double tolerance,
                       int max_dimension, Eigen::VectorXd& out)
{
    const double vnorm = v.norm();
    const Eigen::Index N = v.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(std::max(2, max_dimension), N));
    const double gamma = solver.gamma();
    Eigen::MatrixXd V(N, m + 1);
    std::vector<double> alpha, beta;
    V.col(0) = v / vnorm;
    Eigen::VectorXd previous;
    int small = 0;
    auto project = [&](int k) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int j = 0; j < k; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < k) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        Eigen::VectorXd f(k);
        for (int i = 0; i < k; ++i) {
            const double theta = std::min(es.eigenvalues()[i], 1.0);
            f[i] = theta > 0.0 ? std::exp(-t * (1.0 / theta - 1.0) / gamma) : 0.0;
        }
        const Eigen::VectorXd q0 = es.eigenvectors().row(0).transpose();
        return Eigen::VectorXd(es.eigenvectors() * (q0.array() * f.array()).matrix());
    };
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd z = solver.solve(V.col(j));
        alpha.push_back(V.col(j).dot(z));
        for (int pass = 0; pass < 2; ++pass) z.noalias() -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * z);
        beta.push_back(z.norm());
        const int k = j + 1;
        const bool breakdown = beta[j] <= 1e-14 * std::abs(alpha[j]) || beta[j] == 0.0;
        Eigen::VectorXd y = project(k);
        if (breakdown) {
            out = vnorm * (V.leftCols(k) * y);
            return true;
        }
        if (k >= 2) {
            Eigen::VectorXd diff = y;
            diff.head(k - 1) -= previous;
            // Successive iterates agree twice in a row.
            small = diff.norm() <= tolerance ? small + 1 : 0;
            if (small >= 2) {
                out = vnorm * (V.leftCols(k) * y);
                return true;
            }
        }
        previous = y;
        V.col(j + 1) = z / beta[j];
    }
    return false;
}

}  // namespace

Eigen::VectorXd shift_invert_expv(const ShiftInvertSolver& solver, const Eigen::VectorXd& v, double t,
                                  double tolerance, int max_dimension)
{
    if (t < 0.0) throw std::invalid_argument("shift_invert_expv: time must be non-negative");
    if (!(tolerance > 0.0)) throw std::invalid_argument("shift_invert_expv: tolerance must be positive");
    if (t == 0.0 || v.norm() == 0.0) return v;
    Eigen::VectorXd out;
    if (shift_invert_step(solver, v, t, tolerance, max_dimension, out)) return out;
    if (t < 1e-6 * solver.gamma()) throw std::runtime_error("shift_invert_expv: step size collapsed");
    const Eigen::VectorXd half = shift_invert_expv(solver, v, 0.5 * t, 0.5 * tolerance, max_dimension);
    return shift_invert_expv(solver, half, 0.5 * t, 0.5 * tolerance, max_dimension);
}

Eigen::VectorXd crank_nicolson(const SparseMatrix& A, const Eigen::VectorXd& v, double t, double tolerance)
{
    if (t < 0.0) throw std::invalid_argument("crank_nicolson: time must be non-negative");
    if (t == 0.0) return v;
    const long steps = std::max(1L, static_cast<long>(std::ceil(t / std::sqrt(tolerance))));
    const double dt = t / static_cast<double>(steps);
    Eigen::SparseMatrix<double> I(A.rows(), A.cols());
    I.setIdentity();
    const Eigen::SparseMatrix<double> Ac = A;
    const Eigen::SparseMatrix<double> left = I + 0.5 * dt * Ac;
    const Eigen::SparseMatrix<double> right = I - 0.5 * dt * Ac;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(left);
    if (solver.info() != Eigen::Success) throw std::runtime_error("crank_nicolson: factorisation failed");
    Eigen::VectorXd u = v;
    for (long s = 0; s < steps; ++s) u = solver.solve(right * u);
    return u;
}

Semigroup::Semigroup(const DivergenceFormOperator& op, EvolutionMethod method) : op_(op), method_(method)
{
    if (method_.kind == MethodKind::exact_eigendecomposition) {
        if (op_.size() > method_.max_dimension)
            throw CapacityError("exact eigendecomposition limited to " + std::to_string(method_.max_dimension) +
                                " unknowns, operator has " + std::to_string(op_.size()));
        const Eigen::MatrixXd dense = Eigen::MatrixXd(op_.matrix());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success) throw std::runtime_error("Semigroup: eigendecomposition failed");
        eigenvalues_ = std::make_shared<const Eigen::VectorXd>(es.eigenvalues());
        eigenvectors_ = std::make_shared<const Eigen::MatrixXd>(es.eigenvectors());
    }
}

const Eigen::VectorXd& Semigroup::eigenvalues() const
{
    if (!eigenvalues_) throw std::logic_error("Semigroup: eigenvalues need the exact method");
    return *eigenvalues_;
}

const Eigen::MatrixXd& Semigroup::eigenvectors() const
{
    if (!eigenvectors_) throw std::logic_error("Semigroup: eigenvectors need the exact method");
    return *eigenvectors_;
}

Eigen::VectorXd Semigroup::step(const Eigen::VectorXd& v, double t) const
{
    switch (method_.kind) {
    case MethodKind::exact_eigendecomposition: {
        const auto& Q = *eigenvectors_;
        const Eigen::VectorXd c = Q.transpose() * v;
        const Eigen::VectorXd decay = (-t * eigenvalues_->array().cwiseMax(0.0)).exp();
        return Q * (c.array() * decay.array()).matrix();
    }
    case MethodKind::krylov_exponential: {
        if (!method_.shift_invert) return krylov_expv(op_.matrix(), v, t, method_.tolerance, method_.krylov_dimension);
        // gamma near t / 10, rounded to a power of two so factorisations are shared between steps.
        const int key = static_cast<int>(std::lround(std::log2(0.1 * t)));
        std::shared_ptr<const ShiftInvertSolver> solver;
        {
            std::lock_guard lock(cache_->mutex);
            auto& slot = cache_->solvers[key];
            if (!slot) slot = std::make_shared<const ShiftInvertSolver>(op_.matrix(), std::ldexp(1.0, key));
            solver = slot;
        }
        const int dim = method_.krylov_dimension + method_.krylov_dimension / 2;
        return shift_invert_expv(*solver, v, t, method_.tolerance, dim);
    }
    case MethodKind::crank_nicolson: return crank_nicolson(op_.matrix(), v, t, method_.tolerance);
    }
    return v;
}

Eigen::VectorXd Semigroup::apply(const Eigen::VectorXd& v, double t) const
{
    if (t < 0.0) throw std::invalid_argument("apply_semigroup: time must be non-negative");
    if (static_cast<std::size_t>(v.size()) != op_.size()) throw std::invalid_argument("apply_semigroup: size mismatch");
    if (t == 0.0) return v;
    return step(v, t);
}

std::vector<Eigen::VectorXd> Semigroup::apply_times(const Eigen::VectorXd& v, std::span<const double> times) const
{
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    if (method_.kind == MethodKind::exact_eigendecomposition) {
        for (double t : times) out.push_back(apply(v, t));
        return out;
    }
    Eigen::VectorXd u = v;
    double now = 0.0;
    for (double t : times) {
        if (t < now) throw std::invalid_argument("apply_times: times must be increasing");
        u = apply(u, t - now);
        now = t;
        out.push_back(u);
    }
    return out;
}

Eigen::VectorXd apply_semigroup(const DivergenceFormOperator& op, const Eigen::VectorXd& v, double t,
                                const EvolutionMethod& method)
{
    return Semigroup(op, method).apply(v, t);
}

KernelSlice heat_kernel(const Semigroup& semigroup, std::size_t source_unknown, double t)
{
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: time must be positive");
    const double times[] = {t};
    return heat_kernel_times(semigroup, source_unknown, times).front();
}

std::vector<KernelSlice> heat_kernel_times(const Semigroup& semigroup, std::size_t source_unknown,
                                           std::span<const double> times)
{
    const auto& op = semigroup.op();
    if (source_unknown >= op.size()) throw std::out_of_range("heat_kernel: source outside the operator");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
    e[static_cast<Eigen::Index>(source_unknown)] = 1.0;
    const double w = op.weight();
    const auto columns = semigroup.apply_times(e, times);
    std::vector<KernelSlice> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        out.push_back(KernelSlice{source_unknown, times[i], columns[i] / w, w});
    return out;
}

double estimate_lambda_max(const SparseMatrix& A, int iterations)
{
    const Eigen::Index N = A.rows();
    if (N == 0) return 0.0;
    // Alternating signs with a deterministic perturbation: close to the top mode of a discrete Laplacian.
    Eigen::VectorXd x(N);
    for (Eigen::Index i = 0; i < N; ++i) x[i] = ((i % 2) ? -1.0 : 1.0) * (1.0 + 0.1 * std::sin(0.7 * static_cast<double>(i)));
    x.normalize();
    double rq = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd y = A * x;
        rq = x.dot(y);
        const double ny = y.norm();
        if (ny == 0.0) return 0.0;
        x = y / ny;
    }
    return std::max(rq, x.dot(A * x));
}

}  // namespace grusin
