#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grusin/coefficients.hpp"

namespace grusin {

/// A point of R^n x R^m split into its two blocks.
struct Point {
    std::vector<double> x1;
    std::vector<double> x2;

    [[nodiscard]] std::vector<double> flat() const;
    [[nodiscard]] static Point from_flat(std::span<const double> coords, int n);
};

/// Uniform tensor grid on prod_k [-L_k, L_k] with an odd node count per axis,
/// so that the origin is always a node.
class Grid {
public:
    Grid(int n, std::vector<int> nodes, std::vector<double> extent);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int dimension() const { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] int nodes(int axis) const { return nodes_[axis]; }
    [[nodiscard]] double extent(int axis) const { return extent_[axis]; }
    [[nodiscard]] double spacing(int axis) const { return spacing_[axis]; }
    [[nodiscard]] const std::vector<int>& node_counts() const { return nodes_; }
    [[nodiscard]] const std::vector<double>& extents() const { return extent_; }
    [[nodiscard]] std::size_t stride(int axis) const { return strides_[axis]; }

    /// Lebesgue measure of one cell.
    [[nodiscard]] double node_weight() const { return weight_; }
    /// Euclidean diameter of one cell.
    [[nodiscard]] double cell_diameter() const;

    /// Axis index (0-based) of node `idx` along `axis`.
    [[nodiscard]] int axis_index(std::size_t idx, int axis) const
    {
        return static_cast<int>((idx / strides_[axis]) % static_cast<std::size_t>(nodes_[axis]));
    }
    [[nodiscard]] double coordinate(std::size_t idx, int axis) const
    {
        return position(axis, axis_index(idx, axis));
    }
    /// Position along `axis` of axis index i.
    [[nodiscard]] double position(int axis, int i) const { return spacing_[axis] * (i - center_index(axis)); }
    /// Axis index of the node at the origin.
    [[nodiscard]] int center_index(int axis) const { return (nodes_[axis] - 1) / 2; }

    [[nodiscard]] std::size_t linear_index(std::span<const int> multi) const;
    [[nodiscard]] std::vector<int> multi_index(std::size_t idx) const;
    [[nodiscard]] std::vector<double> coordinates(std::size_t idx) const;
    [[nodiscard]] Point point(std::size_t idx) const;

    /// Euclidean norm of the x1 block of node `idx`.
    [[nodiscard]] double x1_norm(std::size_t idx) const;
    /// True iff every x1 coordinate of node `idx` is exactly zero.
    [[nodiscard]] bool on_degeneracy_set(std::size_t idx) const;

    struct Snap {
        std::size_t index;
        double error;  // Euclidean distance between the point and the node
    };
    /// Nearest node; throws std::out_of_range if the point lies outside the grid.
    [[nodiscard]] Snap snap(const Point& p) const;

    /// Grid with spacing halved on every axis (node count 2k+1 -> 4k+1).
    [[nodiscard]] Grid refined() const;

private:
    int n_;
    std::vector<int> nodes_;
    std::vector<double> extent_;
    std::vector<double> spacing_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
    double weight_ = 1.0;
};

/// Grid helper for a uniform node count and extent on every axis.
[[nodiscard]] Grid build_grid(const GrusinParameters& params, double extent, int nodes_per_axis);
[[nodiscard]] Grid build_grid(const GrusinParameters& params, std::vector<double> extent, std::vector<int> nodes);

}  // namespace grusin
