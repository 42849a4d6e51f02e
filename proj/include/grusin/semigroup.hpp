#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "grusin/operator.hpp"

namespace grusin {

enum class MethodKind { exact_eigendecomposition, krylov_exponential, crank_nicolson };

[[nodiscard]] std::string to_string(MethodKind kind);
[[nodiscard]] MethodKind method_from_string(const std::string& name);

struct EvolutionMethod {
    MethodKind kind = MethodKind::krylov_exponential;
    double tolerance = 1e-8;
    std::size_t max_dimension = 4500;  // guard for the dense method
    int krylov_dimension = 40;         // polynomial basis size; shift-and-invert uses up to 1.5x
    bool shift_invert = true;          // Krylov on (I + gamma A)^{-1} instead of A

    /// Exact below the dense guard, Krylov above it.
    [[nodiscard]] static EvolutionMethod automatic(std::size_t unknowns);
};

/// Sparse factorisation of I + gamma A.
class ShiftInvertSolver {
public:
    ShiftInvertSolver(const SparseMatrix& A, double gamma);

    [[nodiscard]] double gamma() const { return gamma_; }
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

private:
    double gamma_;
    std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// e^{-tA} for a fixed operator; the dense factorisation is computed once and shared.
class Semigroup {
public:
    Semigroup(const DivergenceFormOperator& op, EvolutionMethod method);

    [[nodiscard]] const DivergenceFormOperator& op() const { return op_; }
    [[nodiscard]] const EvolutionMethod& method() const { return method_; }

    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& v, double t) const;
    /// Values at increasing times, each obtained from the previous one.
    [[nodiscard]] std::vector<Eigen::VectorXd> apply_times(const Eigen::VectorXd& v, std::span<const double> times) const;

    /// Eigenvalues of A in increasing order (exact method only).
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const;
    [[nodiscard]] const Eigen::MatrixXd& eigenvectors() const;

private:
    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& v, double t) const;

    DivergenceFormOperator op_;
    EvolutionMethod method_;
    std::shared_ptr<const Eigen::VectorXd> eigenvalues_;
    std::shared_ptr<const Eigen::MatrixXd> eigenvectors_;
    struct SolverCache {
        std::mutex mutex;
        std::map<int, std::shared_ptr<const ShiftInvertSolver>> solvers;  // keyed by log2 gamma
    };
    std::shared_ptr<SolverCache> cache_ = std::make_shared<SolverCache>();
};

/// e^{-tA} v by the Lanczos method with adaptive substeps and a posteriori error control.
[[nodiscard]] Eigen::VectorXd krylov_expv(const SparseMatrix& A, const Eigen::VectorXd& v, double t, double tolerance,
                                          int krylov_dimension = 40);

/// e^{-tA} v by shift-and-invert Lanczos on (I + gamma A)^{-1}. The convergence rate does not
/// depend on the stiffness of A; the time interval is split when the basis limit is reached.
[[nodiscard]] Eigen::VectorXd shift_invert_expv(const ShiftInvertSolver& solver, const Eigen::VectorXd& v, double t,
                                                double tolerance, int max_dimension = 60);

/// Crank-Nicolson with a step count targeting the given tolerance (cross-check only).
[[nodiscard]] Eigen::VectorXd crank_nicolson(const SparseMatrix& A, const Eigen::VectorXd& v, double t, double tolerance);

[[nodiscard]] Eigen::VectorXd apply_semigroup(const DivergenceFormOperator& op, const Eigen::VectorXd& v, double t,
                                              const EvolutionMethod& method);

/// One column K_t(.; y) of the discrete heat kernel over the operator's unknowns.
struct KernelSlice {
    std::size_t source = 0;  // unknown index of y
    double t = 0.0;
    Eigen::VectorXd values;
    double weight = 0.0;     // uniform node measure

    /// Sum of weight * K, which is 1 for a conservative operator.
    [[nodiscard]] double mass() const { return weight * values.sum(); }
};

[[nodiscard]] KernelSlice heat_kernel(const Semigroup& semigroup, std::size_t source_unknown, double t);
/// Kernel columns at several increasing times from one source.
[[nodiscard]] std::vector<KernelSlice> heat_kernel_times(const Semigroup& semigroup, std::size_t source_unknown,
                                                         std::span<const double> times);

/// Largest eigenvalue of A by power iteration with a Rayleigh quotient.
[[nodiscard]] double estimate_lambda_max(const SparseMatrix& A, int iterations = 20);

}  // namespace grusin
