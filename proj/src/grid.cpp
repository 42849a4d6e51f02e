#include "grusin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace grusin {

std::vector<double> Point::flat() const
{
    std::vector<double> out(x1);
    out.insert(out.end(), x2.begin(), x2.end());
    return out;
}

Point Point::from_flat(std::span<const double> coords, int n)
{
    Point p;
    p.x1.assign(coords.begin(), coords.begin() + n);
    p.x2.assign(coords.begin() + n, coords.end());
    return p;
}

Grid::Grid(int n, std::vector<int> nodes, std::vector<double> extent)
    : n_(n), nodes_(std::move(nodes)), extent_(std::move(extent))
{
    if (nodes_.empty() || nodes_.size() != extent_.size())
        throw std::invalid_argument("grid: node counts and extents must be non-empty and of equal length");
    if (n_ < 1 || n_ > dimension()) throw std::invalid_argument("grid: x1 block dimension out of range");
    spacing_.resize(nodes_.size());
    strides_.resize(nodes_.size());
    size_ = 1;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k] < 3 || nodes_[k] % 2 == 0)
            throw std::invalid_argument("grid.nodes[" + std::to_string(k) + "]: node count must be odd and >= 3, got " +
                                        std::to_string(nodes_[k]));
        if (!(extent_[k] > 0.0))
            throw std::invalid_argument("grid.extent[" + std::to_string(k) + "]: extent must be positive");
        spacing_[k] = 2.0 * extent_[k] / (nodes_[k] - 1);
        strides_[k] = size_;
        size_ *= static_cast<std::size_t>(nodes_[k]);
        weight_ *= spacing_[k];
    }
}

double Grid::cell_diameter() const
{
    double s = 0.0;
    for (double h : spacing_) s += h * h;
    return std::sqrt(s);
}

std::size_t Grid::linear_index(std::span<const int> multi) const
{
    std::size_t idx = 0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) idx += strides_[k] * static_cast<std::size_t>(multi[k]);
    return idx;
}

std::vector<int> Grid::multi_index(std::size_t idx) const
{
    std::vector<int> out(nodes_.size());
    for (int k = 0; k < dimension(); ++k) out[k] = axis_index(idx, k);
    return out;
}

std::vector<double> Grid::coordinates(std::size_t idx) const
{
    std::vector<double> out(nodes_.size());
    for (int k = 0; k < dimension(); ++k) out[k] = coordinate(idx, k);
    return out;
}

Point Grid::point(std::size_t idx) const { return Point::from_flat(coordinates(idx), n_); }

double Grid::x1_norm(std::size_t idx) const
{
    double s = 0.0;
    for (int k = 0; k < n_; ++k) {
        const double c = coordinate(idx, k);
        s += c * c;
    }
    return std::sqrt(s);
}

bool Grid::on_degeneracy_set(std::size_t idx) const
{
    for (int k = 0; k < n_; ++k)
        if (axis_index(idx, k) != center_index(k)) return false;
    return true;
}

Grid::Snap Grid::snap(const Point& p) const
{
    const auto coords = p.flat();
    if (static_cast<int>(coords.size()) != dimension() || static_cast<int>(p.x1.size()) != n_)
        throw std::invalid_argument("grid: point dimension does not match grid");
    std::vector<int> multi(nodes_.size());
    double err2 = 0.0;
    for (int k = 0; k < dimension(); ++k) {
        if (std::abs(coords[k]) > extent_[k] * (1.0 + 1e-12))
            throw std::out_of_range("grid: point lies outside the grid on axis " + std::to_string(k));
        const long i = std::lround(coords[k] / spacing_[k]) + center_index(k);
        multi[k] = static_cast<int>(std::clamp(i, 0L, static_cast<long>(nodes_[k] - 1)));
        const double d = position(k, multi[k]) - coords[k];
        err2 += d * d;
    }
    return {linear_index(multi), std::sqrt(err2)};
}

Grid Grid::refined() const
{
    std::vector<int> finer(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) finer[k] = 2 * (nodes_[k] - 1) + 1;
    return Grid(n_, finer, extent_);
}

Grid build_grid(const GrusinParameters& params, double extent, int nodes_per_axis)
{
    const int d = params.dimension();
    return build_grid(params, std::vector<double>(d, extent), std::vector<int>(d, nodes_per_axis));
}

Grid build_grid(const GrusinParameters& params, std::vector<double> extent, std::vector<int> nodes)
{
    params.validate();
    if (static_cast<int>(nodes.size()) != params.dimension())
        throw std::invalid_argument("grid: expected one node count per axis (n+m)");
    return Grid(params.n, std::move(nodes), std::move(extent));
}

}  // namespace grusin
