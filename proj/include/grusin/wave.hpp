#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "grusin/geometry.hpp"
#include "grusin/semigroup.hpp"

namespace grusin {

struct WaveOptions {
    double safety = 0.5;       // fraction of the CFL bound used for the step
    double dt = 0.0;           // explicit step; 0 selects safety * CFL
    double lambda_pad = 1.05;  // padding of the power-iteration estimate of lambda_max
};

/// Leapfrog state: the solution at the final time and the step statistics.
struct WaveState {
    Eigen::VectorXd current;
    Eigen::VectorXd previous;
    double time = 0.0;
    double dt = 0.0;
    double cfl = 0.0;           // 2 / sqrt(lambda_max)
    long steps = 0;
    double energy_drift = 0.0;  // max relative change of the discrete energy
};

/// Largest stable leapfrog step 2 / sqrt(lambda_max) with a padded lambda_max estimate.
[[nodiscard]] double cfl_bound(const SparseMatrix& A, double lambda_pad = 1.05);

/// cos(t sqrt(A)) v by the leapfrog scheme u_{k+1} = 2u_k - u_{k-1} - dt^2 A u_k with
/// u_1 = u_0 - (dt^2/2) A u_0. Throws PreconditionError when the step violates the CFL bound.
[[nodiscard]] WaveState cosine_propagator(const SparseMatrix& A, const Eigen::VectorXd& v, double t,
                                          const WaveOptions& options = {});
[[nodiscard]] WaveState cosine_propagator(const DivergenceFormOperator& op, const Eigen::VectorXd& v, double t,
                                          const WaveOptions& options = {});

struct LeakageReport {
    double leaked_fraction = 0.0;
    double cone_radius = 0.0;  // (1 + eps) t + slack
    double energy_drift = 0.0;
};

/// Weighted norm of cos(t sqrt(A)) v outside {d(., A) <= (1+eps) t + 2 h stencil_order},
/// relative to the norm of v. `field` holds distances to the support set A.
[[nodiscard]] LeakageReport finite_speed_check(const DivergenceFormOperator& op, const DistanceField& field,
                                               const Eigen::VectorXd& v, double t, double epsilon,
                                               const WaveOptions& options = {});

struct DaviesGaffneyReport {
    double worst_margin = -kInfinity;
    double worst_time = 0.0;
    double distance = 0.0;  // d(A; B)
    std::vector<double> margins;
};

/// max over times of log|(1_A, e^{-tA} 1_B)| + d(A;B)^2 / (4t(1+eps)) - log(|1_A| |1_B|).
/// `distances` holds per-node distances to A; the sets are node lists (unknown indices) that are
/// either identical or disjoint.
[[nodiscard]] DaviesGaffneyReport davies_gaffney_check(const Semigroup& semigroup, std::span<const double> distances,
                                                       std::span<const std::size_t> set_a,
                                                       std::span<const std::size_t> set_b,
                                                       std::span<const double> times, double epsilon);

}  // namespace grusin
