#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "grusin/coefficients.hpp"
#include "grusin/grid.hpp"

namespace grusin {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Block-2 part of the closed-form quasi-distance.
///
/// |x2-y2| / (|x1|+|y1|)^(delta2,delta2p) below the switching surface
/// |x2-y2| = (|x1|+|y1|)^(rho,rhop), and |x2-y2|^(1-gamma,1-gammap) above it.
[[nodiscard]] double delta_distance(const GrusinParameters& params, const Point& x, const Point& y);

/// Closed-form quasi-distance |x1-y1| / (|x1|+|y1|)^(delta1,delta1p) + delta_distance.
[[nodiscard]] double closed_form_distance(const GrusinParameters& params, const Point& x, const Point& y);

/// Length of the straight segment a -> b under the metric ds^2 = sum_k dx_k^2 / c_k(|x1|).
///
/// Returns +infinity when the integrand is not integrable (a segment with an x2
/// component ending on the degeneracy set with delta2 >= 1, or delta1 >= 1).
[[nodiscard]] double segment_length(const CoefficientField& coeffs, std::span<const double> a,
                                    std::span<const double> b);

/// Integer offsets with max-norm <= order whose components are coprime.
[[nodiscard]] std::vector<std::vector<int>> coprime_stencil(int dimension, int order);

/// Shortest-path distances from a source node (or node set) over the grid graph.
class DistanceField {
public:
    DistanceField(Grid grid, std::vector<std::size_t> sources, std::vector<double> distances, int stencil_order,
                  double snap_error);

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::size_t source() const { return sources_.front(); }
    [[nodiscard]] const std::vector<std::size_t>& sources() const { return sources_; }
    [[nodiscard]] const std::vector<double>& distances() const { return distances_; }
    [[nodiscard]] double operator[](std::size_t idx) const { return distances_[idx]; }
    [[nodiscard]] int stencil_order() const { return stencil_order_; }
    [[nodiscard]] double snap_error() const { return snap_error_; }
    /// Number of nodes at infinite distance (edges dropped because of divergent weights).
    [[nodiscard]] std::size_t unreachable() const;

    /// Distances in increasing order (computed on first use).
    [[nodiscard]] const std::vector<double>& sorted() const;

private:
    Grid grid_;
    std::vector<std::size_t> sources_;
    std::vector<double> distances_;
    int stencil_order_;
    double snap_error_;
    mutable std::vector<double> sorted_;
};

/// Nodes farther than `cutoff` keep a provisional value above the cutoff (the search stops there).
[[nodiscard]] DistanceField numerical_distance(const CoefficientField& coeffs, const Grid& grid, const Point& source,
                                               int stencil_order = 2, double cutoff = kInfinity);
/// Distance to the nearest node of a set (multi-source search).
[[nodiscard]] DistanceField numerical_distance(const CoefficientField& coeffs, const Grid& grid,
                                               std::span<const std::size_t> sources, int stencil_order = 2,
                                               double cutoff = kInfinity);

enum class VolumeMethod { closed_form, distance_field };

struct BallVolume {
    double volume = 0.0;
    bool below_cell_size = false;
};

/// Measure of {d < r}: sum of cell measures of nodes inside the ball.
[[nodiscard]] BallVolume ball_volume(const DistanceField& field, double r);
/// Closed-form two-regime volume with unit constant.
[[nodiscard]] BallVolume ball_volume(const GrusinParameters& params, const Point& center, double r);

struct BallVolumeTable {
    Point center;
    std::vector<double> radii;
    std::vector<double> volumes;
    VolumeMethod method = VolumeMethod::distance_field;
};

[[nodiscard]] BallVolumeTable volume_table(const DistanceField& field, std::vector<double> radii);
[[nodiscard]] BallVolumeTable volume_table(const GrusinParameters& params, const Point& center,
                                           std::vector<double> radii);

/// Largest local volume-growth exponent log(V_{i+1}/V_i)/log(r_{i+1}/r_i) over consecutive radii,
/// which equals log2(|B(2r)|/|B(r)|) for a doubling radius sequence.
/// Throws DataError for non-monotone volumes and std::invalid_argument for too few radii.
[[nodiscard]] double doubling_exponent(const BallVolumeTable& table);

struct DoublingEstimate {
    Point center;
    std::vector<double> radii;
    std::vector<double> volumes;    // |B(center; r_i)|, each on a grid resolving that radius
    std::vector<double> exponents;  // log(V_{i+1}/V_i) / log(r_{i+1}/r_i), both volumes on one grid
    double max_exponent = 0.0;
};

/// Doubling exponents with one grid per consecutive radius pair. Each grid resolves the smaller
/// ball with about `cells` nodes per axis and contains the larger one.
/// Throws CapacityError when a grid would exceed `max_nodes`.
[[nodiscard]] DoublingEstimate multiscale_doubling(const CoefficientField& coeffs, const Point& center,
                                                   std::vector<double> radii, int cells = 48, int stencil_order = 2,
                                                   std::size_t max_nodes = 8'000'000);

/// Geometric sequence r0, r0*q, ..., count values.
[[nodiscard]] std::vector<double> geometric_radii(double r0, double ratio, int count);

}  // namespace grusin
