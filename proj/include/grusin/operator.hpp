#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grusin/coefficients.hpp"
#include "grusin/grid.hpp"

namespace grusin {

enum class Boundary {
    neumann_truncation,  // no flux through the outer boundary
    dirichlet_origin,    // nodes on {x1 = 0} removed, their faces act as absorbing
    half_line_positive,  // nodes with first x1 coordinate >= 0, no flux across 0
    half_line_negative,  // nodes with first x1 coordinate <= 0
};

[[nodiscard]] std::string to_string(Boundary b);
[[nodiscard]] Boundary boundary_from_string(const std::string& name);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Conductance of the face between the node at `a` and its neighbour a + h e_axis.
///
/// Equals h^-2 [ (1/h) integral of c_axis^-1 over the segment ]^-1, and exactly 0
/// when that integral diverges.
[[nodiscard]] double face_conductance(const CoefficientField& coeffs, int axis, std::span<const double> a, double h);

/// Discrete Dirichlet form h(u) = w u^T A u with uniform node weight w.
///
/// A is the generator of the discrete semigroup (symmetric, off-diagonal <= 0). Only
/// the nodes kept by the boundary mode are unknowns; unknown(k) maps them back to
/// grid nodes.
class DivergenceFormOperator {
public:
    DivergenceFormOperator(Grid grid, CoefficientField coeffs, Boundary boundary, SparseMatrix matrix,
                           std::vector<std::size_t> nodes);

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] const CoefficientField& coefficients() const { return coeffs_; }
    [[nodiscard]] Boundary boundary() const { return boundary_; }
    [[nodiscard]] const SparseMatrix& matrix() const { return matrix_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] double weight() const { return grid_.node_weight(); }

    /// Grid node of unknown k.
    [[nodiscard]] std::size_t node(std::size_t k) const { return nodes_[k]; }
    [[nodiscard]] const std::vector<std::size_t>& nodes() const { return nodes_; }
    /// Unknown of grid node idx, or npos if the node was eliminated.
    [[nodiscard]] std::size_t unknown(std::size_t idx) const { return unknown_[idx]; }
    [[nodiscard]] bool contains(std::size_t idx) const { return unknown_[idx] != npos; }

    /// Scatter an unknown vector onto the full grid (eliminated nodes set to `fill`).
    [[nodiscard]] std::vector<double> to_grid(const Eigen::VectorXd& u, double fill = 0.0) const;
    /// Gather grid values into an unknown vector.
    [[nodiscard]] Eigen::VectorXd from_grid(std::span<const double> values) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Grid grid_;
    CoefficientField coeffs_;
    Boundary boundary_;
    SparseMatrix matrix_;
    std::vector<std::size_t> nodes_;
    std::vector<std::size_t> unknown_;
};

[[nodiscard]] DivergenceFormOperator assemble(const Grid& grid, const CoefficientField& coeffs,
                                              Boundary boundary = Boundary::neumann_truncation);

/// w u^T A u, the discrete counterpart of the integral of c |grad u|^2.
[[nodiscard]] double form_value(const DivergenceFormOperator& op, const Eigen::VectorXd& u);

/// True iff some nonzero entry of A couples a node with x1 < 0 to one with x1 > 0 (n = 1 block sign).
[[nodiscard]] bool couples_across_origin(const DivergenceFormOperator& op);

/// Writes "row col value" lines in row-major order, 17 significant digits.
void write_triplets(const DivergenceFormOperator& op, std::ostream& out);

}  // namespace grusin
