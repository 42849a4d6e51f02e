#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grusin/coefficients.hpp"
#include "grusin/operator.hpp"

namespace grusin {

enum class MultiplierBranch { local_dominant, global_dominant };  // delta1 >= delta1p, delta1 <= delta1p

/// Separable symbol F(p) = a (F1(|p1|^2) + F2(|p2|^2)) with
/// F1(L) = L^(1-delta1p) (1+L)^-(delta1-delta1p) and F2(L) = L^alphap (1+L)^(alpha-alphap).
struct MultiplierSpec {
    GrusinParameters params;
    double scale = 1.0;

    [[nodiscard]] MultiplierBranch branch() const;
    [[nodiscard]] double block1(double L) const;
    [[nodiscard]] double block2(double L) const;
};

[[nodiscard]] double multiplier_value(const MultiplierSpec& spec, std::span<const double> p1, std::span<const double> p2);

/// Lebesgue measure of {p : F(p) < r^2}.
[[nodiscard]] double vf_volume(const MultiplierSpec& spec, double r);
/// Measure of {p_k : a F_k(|p_k|^2) < r^2} within one block (k = 1 or 2); 1 for an empty block.
[[nodiscard]] double vf_block_volume(const MultiplierSpec& spec, int block, double r);

/// Volume of the unit ball in R^d.
[[nodiscard]] double unit_ball_volume(int d);

struct NashOptions {
    int ensemble = 200;
    std::uint64_t seed = 1;
    double min_width_cells = 4.0;  // narrowest bump radius in grid cells
    double min_width = 0.3;        // bump radius range in physical units
    double max_width = 1.5;
    bool half_line = false;        // even extension across x1 = 0
    std::vector<double> radii;     // r values for the Nash display (log grid if empty)
};

struct NashReport {
    double min_ratio = 0.0;     // fitted domination constant: min h(phi) / f(phi)
    double max_ratio = 0.0;
    std::vector<double> ratios; // per ensemble member
    std::vector<double> radii;
    std::vector<double> worst_margin;  // per r: min over phi of rhs - lhs (relative to lhs)
    double min_margin = 0.0;
    double volume_factor = 1.0;  // 1 on the full space, 4 on the half line
};

/// Random smooth bumps on the grid of `op`; compares the discrete form with the Fourier form of
/// `spec` and verifies the Nash display with the fitted constant.
[[nodiscard]] NashReport nash_check(const DivergenceFormOperator& op, const MultiplierSpec& spec,
                                    const NashOptions& options);

/// Fourier form sum F(p) |phi^(p)|^2 (2 pi)^-d dp^d of grid values over the periodic box.
[[nodiscard]] double fourier_form(const Grid& grid, const MultiplierSpec& spec, std::span<const double> values);

struct HardyReport {
    double lambda_min = 0.0;
    double constant = 0.0;  // a used in the potential
    int cells = 0;
};

/// Optimal Hardy constant (n-2)^2/4 for gamma = 1.
[[nodiscard]] double hardy_optimal_constant(int n);

/// lambda_min(L^gamma - fraction a |x|^(-2 gamma)) for the Dirichlet Laplacian on a cell-centred
/// grid of `cells` per axis over [-1, 1]^n. a is the optimal constant for gamma = 1 and the value
/// fitted on a coarse grid (half the cells) otherwise.
[[nodiscard]] HardyReport hardy_check(int n, double gamma, double fraction, int cells = 12);
/// Largest a with L^gamma >= a |x|^(-2 gamma) on the given cell-centred grid.
[[nodiscard]] double hardy_fitted_constant(int n, double gamma, int cells);

struct OperatorInequalityReport {
    double worst_power_ratio = 0.0;  // min eigenvalue of A(I+A)^-g - B(I+B)^-g
    double worst_sum_root = 0.0;     // min eigenvalue of (A+B)^s - 2^(-1+s)(A^s + B^s), s = 2^-k
    int trials = 0;
};

[[nodiscard]] OperatorInequalityReport operator_inequality_checks(int trials, int dim, double gamma, int root_level,
                                                                  std::uint64_t seed);

}  // namespace grusin
