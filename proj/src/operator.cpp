#include "grusin/operator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "grusin/parallel.hpp"
#include "grusin/quadrature.hpp"

namespace grusin {

std::string to_string(Boundary b)
{
    switch (b) {
    case Boundary::neumann_truncation: return "neumann_truncation";
    case Boundary::dirichlet_origin: return "dirichlet_origin";
    case Boundary::half_line_positive: return "half_line_positive";
    case Boundary::half_line_negative: return "half_line_negative";
    }
    return "unknown";
}

Boundary boundary_from_string(const std::string& name)
{
    for (Boundary b : {Boundary::neumann_truncation, Boundary::dirichlet_origin, Boundary::half_line_positive,
                       Boundary::half_line_negative})
        if (to_string(b) == name) return b;
    throw std::invalid_argument("boundary: unknown mode '" + name + "'");
}

namespace {

constexpr int kFaceOrder = 8;

}  // namespace

double face_conductance(const CoefficientField& coeffs, int axis, std::span<const double> a, double h)
{
    const int n = coeffs.params().n;
    if (!(h > 0.0)) throw std::invalid_argument("face_conductance: spacing must be positive");
    if (axis < 0 || axis >= static_cast<int>(a.size())) throw std::invalid_argument("face_conductance: axis out of range");
    double other = 0.0;
    for (int k = 0; k < n; ++k)
        if (k != axis) other += a[k] * a[k];

    if (axis >= n) return coeffs.c2(std::sqrt(other)) / (h * h);

    const double a0 = a[axis];
    auto inverse_c = [&](double s) { return 1.0 / coeffs.c1(s); };
    const GaussRule& rule = gauss_legendre(kFaceOrder);
    auto regular = [&](double t0, double t1) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double x = a0 + t0 + (t1 - t0) * rule.nodes[q];
            acc += rule.weights[q] * inverse_c(std::sqrt(other + x * x));
        }
        return (t1 - t0) * acc;
    };

    double integral = 0.0;
    const bool touches_zero = other == 0.0 && a0 <= 0.0 && a0 + h >= 0.0;
    if (!touches_zero || coeffs.local_exponent1() == 0.0) {
        const double z = -a0;
        integral = (z > 0.0 && z < h) ? regular(0.0, z) + regular(z, h) : regular(0.0, h);
    } else {
        const double p = 2.0 * coeffs.local_exponent1();
        if (p >= 1.0) return 0.0;
        for (double len : {-a0, a0 + h}) {
            if (len <= 0.0) continue;
            integral += len * integrate_power_singular(
                                  p, [&](double u) { return inverse_c(u * len) * std::pow(u, p); }, kFaceOrder);
        }
    }
    if (!std::isfinite(integral) || integral <= 0.0) return 0.0;
    return 1.0 / (h * integral);
}

DivergenceFormOperator::DivergenceFormOperator(Grid grid, CoefficientField coeffs, Boundary boundary, SparseMatrix matrix,
                                               std::vector<std::size_t> nodes)
    : grid_(std::move(grid)),
      coeffs_(std::move(coeffs)),
      boundary_(boundary),
      matrix_(std::move(matrix)),
      nodes_(std::move(nodes)),
      unknown_(grid_.size(), npos)
{
    for (std::size_t k = 0; k < nodes_.size(); ++k) unknown_[nodes_[k]] = k;
}

std::vector<double> DivergenceFormOperator::to_grid(const Eigen::VectorXd& u, double fill) const
{
    if (static_cast<std::size_t>(u.size()) != size()) throw std::invalid_argument("to_grid: vector size mismatch");
    std::vector<double> out(grid_.size(), fill);
    for (std::size_t k = 0; k < nodes_.size(); ++k) out[nodes_[k]] = u[static_cast<Eigen::Index>(k)];
    return out;
}

Eigen::VectorXd DivergenceFormOperator::from_grid(std::span<const double> values) const
{
    if (values.size() != grid_.size()) throw std::invalid_argument("from_grid: vector size mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < nodes_.size(); ++k) out[static_cast<Eigen::Index>(k)] = values[nodes_[k]];
    return out;
}

DivergenceFormOperator assemble(const Grid& grid, const CoefficientField& coeffs, Boundary boundary)
{
    const GrusinParameters& p = coeffs.params();
    if (p.n != grid.n() || p.dimension() != grid.dimension())
        throw std::invalid_argument("assemble: grid and coefficient dimensions differ");
    const int d = grid.dimension();
    const int n = grid.n();

    // Conductances depend on the x1 position and the axis only.
    std::size_t x1_count = 1;
    for (int k = 0; k < n; ++k) x1_count *= static_cast<std::size_t>(grid.nodes(k));
    std::vector<double> table(x1_count * static_cast<std::size_t>(d), 0.0);
    parallel_for(x1_count, [&](std::size_t lin) {
        std::vector<double> a(d, 0.0);
        std::size_t rem = lin;
        for (int k = 0; k < n; ++k) {
            a[k] = grid.position(k, static_cast<int>(rem % grid.nodes(k)));
            rem /= grid.nodes(k);
        }
        for (int axis = 0; axis < d; ++axis) table[lin * d + axis] = face_conductance(coeffs, axis, a, grid.spacing(axis));
    });
    auto x1_linear = [&](std::size_t idx) {
        std::size_t lin = 0;
        std::size_t stride = 1;
        for (int k = 0; k < n; ++k) {
            lin += stride * static_cast<std::size_t>(grid.axis_index(idx, k));
            stride *= static_cast<std::size_t>(grid.nodes(k));
        }
        return lin;
    };

    auto keep = [&](std::size_t idx) {
        switch (boundary) {
        case Boundary::neumann_truncation: return true;
        case Boundary::dirichlet_origin: return !grid.on_degeneracy_set(idx);
        case Boundary::half_line_positive: return grid.coordinate(idx, 0) >= 0.0;
        case Boundary::half_line_negative: return grid.coordinate(idx, 0) <= 0.0;
        }
        return true;
    };
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> unknown(grid.size(), DivergenceFormOperator::npos);
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        if (keep(idx)) {
            unknown[idx] = nodes.size();
            nodes.push_back(idx);
        }
    const bool absorbing = boundary == Boundary::dirichlet_origin;

    // One block of rows per chunk, merged in chunk order so the result is independent of the worker count.
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(64, nodes.size() / 4096 + 1));
    std::vector<std::vector<Eigen::Triplet<double>>> parts(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = nodes.size() * c / chunks;
        const std::size_t end = nodes.size() * (c + 1) / chunks;
        auto& out = parts[c];
        out.reserve((end - begin) * static_cast<std::size_t>(2 * d + 1));
        for (std::size_t row = begin; row < end; ++row) {
            const std::size_t idx = nodes[row];
            const std::size_t lin = x1_linear(idx);
            double diag = 0.0;
            for (int axis = 0; axis < d; ++axis) {
                const int i = grid.axis_index(idx, axis);
                for (int dir : {-1, 1}) {
                    const int j = i + dir;
                    if (j < 0 || j >= grid.nodes(axis)) continue;
                    const std::size_t nb = dir > 0 ? idx + grid.stride(axis) : idx - grid.stride(axis);
                    // Face conductance is stored at the lower endpoint of the face.
                    const double g = dir > 0 ? table[lin * d + axis] : table[x1_linear(nb) * d + axis];
                    if (g == 0.0) continue;
                    const std::size_t col = unknown[nb];
                    if (col == DivergenceFormOperator::npos) {
                        if (absorbing) diag += g;
                        continue;
                    }
                    diag += g;
                    out.emplace_back(static_cast<int>(row), static_cast<int>(col), -g);
                }
            }
            out.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
        }
    });
    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& part : parts) triplets.insert(triplets.end(), part.begin(), part.end());
    SparseMatrix A(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(nodes.size()));
    A.setFromTriplets(triplets.begin(), triplets.end());
    A.makeCompressed();
    return DivergenceFormOperator(grid, coeffs, boundary, std::move(A), std::move(nodes));
}

double form_value(const DivergenceFormOperator& op, const Eigen::VectorXd& u)
{
    if (static_cast<std::size_t>(u.size()) != op.size()) throw std::invalid_argument("form_value: vector size mismatch");
    return op.weight() * u.dot(op.matrix() * u);
}

bool couples_across_origin(const DivergenceFormOperator& op)
{
    const SparseMatrix& A = op.matrix();
    const Grid& grid = op.grid();
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        const double xr = grid.coordinate(op.node(static_cast<std::size_t>(r)), 0);
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
            if (it.value() == 0.0) continue;
            const double xc = grid.coordinate(op.node(static_cast<std::size_t>(it.col())), 0);
            if (xr * xc < 0.0) return true;
        }
    }
    return false;
}

void write_triplets(const DivergenceFormOperator& op, std::ostream& out)
{
    const SparseMatrix& A = op.matrix();
    const auto old_precision = out.precision(17);
    for (Eigen::Index r = 0; r < A.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(A, r); it; ++it) out << r << ' ' << it.col() << ' ' << it.value() << '\n';
    out.precision(old_precision);
}

}  // namespace grusin
