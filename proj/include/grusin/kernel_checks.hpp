#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grusin/geometry.hpp"
#include "grusin/semigroup.hpp"

namespace grusin {

struct ConservationReport {
    double max_deviation = 0.0;  // max |1 - sum w K_t(., y)|
    std::size_t worst_source = 0;
    double worst_time = 0.0;
};

[[nodiscard]] ConservationReport conservation_report(const Semigroup& semigroup, std::span<const std::size_t> sources,
                                                     std::span<const double> times);

/// Metric distance from the given grid nodes to the outer boundary of the grid.
[[nodiscard]] double distance_to_boundary(const CoefficientField& coeffs, const Grid& grid,
                                          std::span<const std::size_t> nodes, int stencil_order = 2);

/// exp(-d^2 / 4t): the Gaussian weight of mass that can reach a boundary at distance d.
[[nodiscard]] double boundary_tail(double distance, double t);

struct DecayReport {
    std::vector<double> times;     // accepted times
    std::vector<double> sup_diag;  // sup over candidates of K_t(x; x)
    std::vector<std::size_t> argmax;
    std::vector<double> refused;   // times rejected by the boundary guard
};

/// sup_x K_t(x;x) over candidate unknowns. Isolated unknowns (zero row in A) are skipped;
/// times whose boundary tail exceeds `guard` are refused.
[[nodiscard]] DecayReport ondiagonal_decay(const Semigroup& semigroup, std::span<const std::size_t> candidates,
                                           std::span<const double> times, double boundary_distance,
                                           double guard = 1e-6);

struct KernelSample {
    Point x;
    Point y;
    double t = 0.0;
    double kernel = 0.0;
    double distance = 0.0;
    double volume_x = 0.0;
    double volume_y = 0.0;
    bool resolved = true;  // kernel above the solver noise floor
};

struct GaussianBoundReport {
    double upper_constant = 0.0;  // max K sqrt(V_x V_y) exp(d^2 / 4(1+eps)t)
    KernelSample upper_argmax;
    double lower_constant = 0.0;  // min K_t(x;x) V_x
    KernelSample lower_argmin;
    std::vector<KernelSample> samples;
};

/// Fits the Gaussian upper and on-diagonal lower constants over all sample pairs and times.
/// Distances and ball volumes come from distance fields rooted at each sample point. Kernel values
/// below noise_floor times the column maximum are recorded but excluded from the upper fit.
[[nodiscard]] GaussianBoundReport gaussian_bounds(const Semigroup& semigroup, std::span<const Point> samples,
                                                  std::span<const double> times, double epsilon,
                                                  int stencil_order = 2, double noise_floor = 1e-6);

struct ComparisonReport {
    double rho = 0.0;  // d(A; U) under the frozen coefficients
    std::vector<double> times;
    std::vector<double> sup_difference;  // sup over A x sources of |K1 - K2|
    std::vector<double> reference;       // V(t^2/rho^2)^-1 (rho^2/t)^-1/2 exp(-rho^2/4t)
    double slope = 0.0;                  // of log sup_difference against rho^2 / 4t
};

/// Compares the true operator with the one whose coefficients are frozen inside {|x1| <= r_cut/2}.
/// `region` lists grid nodes of A (all with |x1| > r_cut); sources is a subset of region.
[[nodiscard]] ComparisonReport kernel_comparison(const Grid& grid, const GrusinParameters& params, double r_cut,
                                                 std::span<const std::size_t> region,
                                                 std::span<const std::size_t> sources, std::span<const double> times,
                                                 const EvolutionMethod& method, int stencil_order = 2);

struct SeparationLevel {
    double spacing = 0.0;
    double max_cross_kernel = 0.0;  // over x1 < 0 < y1 pairs
    double min_cross_kernel = 0.0;
    double dirichlet_gap = 0.0;     // sup |K_Neumann - K_Dirichlet| on the positive side
};

struct SeparationReport {
    bool strongly_degenerate = false;  // n = 1 and delta1 >= 1/2
    std::vector<SeparationLevel> levels;
    bool passed = false;
    std::string verdict;
};

/// Cross-kernel and Dirichlet/Neumann comparison over successive refinements of a grid.
/// Sample points have |x1| and |x2| components in (0, window]. Gaps at or below `tolerance` count as zero.
[[nodiscard]] SeparationReport separation_check(const GrusinParameters& params, const Grid& coarsest, int levels,
                                                double t, double window, double tolerance);

}  // namespace grusin
