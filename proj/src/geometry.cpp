#include "grusin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "grusin/errors.hpp"
#include "grusin/quadrature.hpp"

namespace grusin {

namespace {

double norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double block_difference(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("distance: point blocks have mismatched dimensions");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

double delta_distance(const GrusinParameters& params, const Point& x, const Point& y)
{
    const double sep = block_difference(x.x2, y.x2);
    if (sep == 0.0) return 0.0;
    const DerivedExponents e = derive_exponents(params);
    const double s = norm(x.x1) + norm(y.x1);
    if (sep <= piecewise_power(s, e.rho, e.rhop)) return sep / piecewise_power(s, params.delta2, params.delta2p);
    return piecewise_power(sep, 1.0 - e.gamma, 1.0 - e.gammap);
}

double closed_form_distance(const GrusinParameters& params, const Point& x, const Point& y)
{
    const double diff1 = block_difference(x.x1, y.x1);
    double first = 0.0;
    if (diff1 > 0.0) {
        const double s = norm(x.x1) + norm(y.x1);
        first = diff1 / piecewise_power(s, params.delta1, params.delta1p);
    }
    return first + delta_distance(params, x, y);
}

double segment_length(const CoefficientField& coeffs, std::span<const double> a, std::span<const double> b)
{
    const int n = coeffs.params().n;
    const std::size_t d = a.size();
    if (b.size() != d) throw std::invalid_argument("segment_length: endpoint dimensions differ");

    double P = 0.0;  // |delta x1|^2
    double Q = 0.0;  // |delta x2|^2
    double a_dot = 0.0;
    double a1sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double dk = b[k] - a[k];
        if (static_cast<int>(k) < n) {
            P += dk * dk;
            a_dot += a[k] * dk;
            a1sq += a[k] * a[k];
        } else {
            Q += dk * dk;
        }
    }
    if (P == 0.0 && Q == 0.0) return 0.0;

    auto integrand = [&](double s) {
        double v = 0.0;
        if (P > 0.0) {
            const double c = coeffs.c1(s);
            if (!(c > 0.0)) return kInfinity;
            v += P / c;
        }
        if (Q > 0.0) {
            const double c = coeffs.c2(s);
            if (!(c > 0.0)) return kInfinity;
            v += Q / c;
        }
        return std::sqrt(v);
    };
    // |x1(tau)| along the segment
    auto radius = [&](double tau) { return std::sqrt(std::max(0.0, a1sq + 2.0 * tau * a_dot + tau * tau * P)); };

    if (P == 0.0) return integrand(std::sqrt(a1sq));

    const GaussRule& rule = gauss_legendre(3);
    auto regular_piece = [&](double t0, double t1) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) acc += rule.weights[q] * integrand(radius(t0 + (t1 - t0) * rule.nodes[q]));
        return (t1 - t0) * acc;
    };

    const double tstar = std::clamp(-a_dot / P, 0.0, 1.0);
    const double smin = radius(tstar);
    const double scale = std::max(std::sqrt(a1sq), radius(1.0));
    if (smin > 1e-12 * scale) {
        if (tstar > 0.0 && tstar < 1.0) return regular_piece(0.0, tstar) + regular_piece(tstar, 1.0);
        return regular_piece(0.0, 1.0);
    }

    // The segment meets {x1 = 0}: the integrand behaves like s^-p there.
    double p = coeffs.local_exponent1();
    if (Q > 0.0) p = std::max(p, coeffs.local_exponent2());
    if (p >= 1.0) return kInfinity;
    const double speed = std::sqrt(P);
    double total = 0.0;
    for (double len : {tstar, 1.0 - tstar}) {
        if (len <= 0.0) continue;
        // On this piece |x1| = u * len * speed for u in (0,1].
        total += len * integrate_power_singular(
                           p, [&](double u) { return integrand(u * len * speed) * std::pow(u, p); }, 3);
    }
    return total;
}

std::vector<std::vector<int>> coprime_stencil(int dimension, int order)
{
    if (dimension < 1 || order < 1) throw std::invalid_argument("coprime_stencil: dimension and order must be positive");
    std::vector<std::vector<int>> out;
    std::vector<int> off(dimension, -order);
    while (true) {
        int g = 0;
        for (int v : off) g = std::gcd(g, std::abs(v));
        if (g == 1) out.push_back(off);
        int k = 0;
        while (k < dimension && off[k] == order) off[k++] = -order;
        if (k == dimension) break;
        ++off[k];
    }
    return out;
}

DistanceField::DistanceField(Grid grid, std::vector<std::size_t> sources, std::vector<double> distances,
                             int stencil_order, double snap_error)
    : grid_(std::move(grid)),
      sources_(std::move(sources)),
      distances_(std::move(distances)),
      stencil_order_(stencil_order),
      snap_error_(snap_error)
{
    if (sources_.empty()) throw std::invalid_argument("DistanceField: at least one source is required");
}

std::size_t DistanceField::unreachable() const
{
    return static_cast<std::size_t>(std::count_if(distances_.begin(), distances_.end(), [](double v) { return std::isinf(v); }));
}

const std::vector<double>& DistanceField::sorted() const
{
    if (sorted_.empty()) {
        sorted_ = distances_;
        std::sort(sorted_.begin(), sorted_.end());
    }
    return sorted_;
}

namespace {

// Edge weights depend on the x1 position of the tail and the offset only.
class EdgeWeightTable {
public:
    EdgeWeightTable(const CoefficientField& coeffs, const Grid& grid, const std::vector<std::vector<int>>& offsets)
        : offsets_(offsets.size())
    {
        const int n = grid.n();
        const int d = grid.dimension();
        std::vector<int> counts(n);
        std::size_t x1_count = 1;
        for (int k = 0; k < n; ++k) {
            counts[k] = grid.nodes(k);
            x1_count *= static_cast<std::size_t>(counts[k]);
        }
        weights_.assign(x1_count * offsets_, kInfinity);
        std::vector<double> a(d, 0.0), b(d, 0.0);
        std::vector<int> multi(n, 0);
        for (std::size_t lin = 0; lin < x1_count; ++lin) {
            std::size_t rem = lin;
            for (int k = 0; k < n; ++k) {
                multi[k] = static_cast<int>(rem % counts[k]);
                rem /= counts[k];
            }
            for (std::size_t o = 0; o < offsets.size(); ++o) {
                bool inside = true;
                for (int k = 0; k < n; ++k) {
                    const int j = multi[k] + offsets[o][k];
                    if (j < 0 || j >= counts[k]) inside = false;
                }
                if (!inside) continue;
                for (int k = 0; k < d; ++k) {
                    const int i0 = k < n ? multi[k] : 0;
                    a[k] = k < n ? grid.position(k, i0) : 0.0;
                    b[k] = k < n ? grid.position(k, i0 + offsets[o][k]) : offsets[o][k] * grid.spacing(k);
                }
                weights_[lin * offsets_ + o] = segment_length(coeffs, a, b);
            }
        }
    }

    [[nodiscard]] double operator()(std::size_t x1_linear, std::size_t offset) const
    {
        return weights_[x1_linear * offsets_ + offset];
    }

private:
    std::size_t offsets_;
    std::vector<double> weights_;
};

DistanceField run_dijkstra(const CoefficientField& coeffs, const Grid& grid, std::vector<std::size_t> sources,
                           int stencil_order, double snap_error, double cutoff)
{
    if (coeffs.params().dimension() != grid.dimension() || coeffs.params().n != grid.n())
        throw std::invalid_argument("numerical_distance: coefficient and grid dimensions differ");
    if (stencil_order < 1) throw std::invalid_argument("numerical_distance: stencil order must be positive");
    const int d = grid.dimension();
    const int n = grid.n();
    const auto offsets = coprime_stencil(d, stencil_order);
    const EdgeWeightTable table(coeffs, grid, offsets);

    std::vector<long> linear_offsets(offsets.size());
    for (std::size_t o = 0; o < offsets.size(); ++o) {
        long s = 0;
        for (int k = 0; k < d; ++k) s += static_cast<long>(grid.stride(k)) * offsets[o][k];
        linear_offsets[o] = s;
    }

    std::vector<double> dist(grid.size(), kInfinity);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (std::size_t s : sources) {
        if (s >= grid.size()) throw std::out_of_range("numerical_distance: source index outside grid");
        dist[s] = 0.0;
        heap.emplace(0.0, s);
    }
    std::vector<int> multi(d);
    while (!heap.empty()) {
        const auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[u]) continue;
        if (du > cutoff) break;
        std::size_t x1_lin = 0;
        std::size_t x1_stride = 1;
        for (int k = 0; k < d; ++k) {
            multi[k] = grid.axis_index(u, k);
            if (k < n) {
                x1_lin += x1_stride * static_cast<std::size_t>(multi[k]);
                x1_stride *= static_cast<std::size_t>(grid.nodes(k));
            }
        }
        for (std::size_t o = 0; o < offsets.size(); ++o) {
            bool inside = true;
            for (int k = 0; k < d && inside; ++k) {
                const int j = multi[k] + offsets[o][k];
                inside = j >= 0 && j < grid.nodes(k);
            }
            if (!inside) continue;
            const double w = table(x1_lin, o);
            if (std::isinf(w)) continue;
            const std::size_t v = static_cast<std::size_t>(static_cast<long>(u) + linear_offsets[o]);
            const double cand = du + w;
            if (cand < dist[v]) {
                dist[v] = cand;
                heap.emplace(cand, v);
            }
        }
    }
    return DistanceField(grid, std::move(sources), std::move(dist), stencil_order, snap_error);
}

}  // namespace

DistanceField numerical_distance(const CoefficientField& coeffs, const Grid& grid, const Point& source, int stencil_order,
                                 double cutoff)
{
    const auto snap = grid.snap(source);
    return run_dijkstra(coeffs, grid, {snap.index}, stencil_order, snap.error, cutoff);
}

DistanceField numerical_distance(const CoefficientField& coeffs, const Grid& grid, std::span<const std::size_t> sources,
                                 int stencil_order, double cutoff)
{
    return run_dijkstra(coeffs, grid, std::vector<std::size_t>(sources.begin(), sources.end()), stencil_order, 0.0,
                        cutoff);
}

BallVolume ball_volume(const DistanceField& field, double r)
{
    if (!(r > 0.0)) throw std::invalid_argument("ball_volume: radius must be positive");
    const auto& s = field.sorted();
    const auto count = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), r) - s.begin());
    const double w = field.grid().node_weight();
    if (r < field.grid().cell_diameter() || count <= 1) return {w, true};
    return {static_cast<double>(count) * w, false};
}

BallVolume ball_volume(const GrusinParameters& params, const Point& center, double r)
{
    if (!(r > 0.0)) throw std::invalid_argument("ball_volume: radius must be positive");
    const DerivedExponents e = derive_exponents(params);
    const double s = norm(center.x1);
    const double threshold = piecewise_power(s, 1.0 - params.delta1, 1.0 - params.delta1p);
    if (r >= threshold) return {piecewise_power(r, e.D, e.Dp), false};
    return {std::pow(r, params.dimension()) * piecewise_power(s, e.beta, e.betap), false};
}

BallVolumeTable volume_table(const DistanceField& field, std::vector<double> radii)
{
    BallVolumeTable t;
    t.center = field.grid().point(field.source());
    t.method = VolumeMethod::distance_field;
    for (double r : radii) t.volumes.push_back(ball_volume(field, r).volume);
    t.radii = std::move(radii);
    return t;
}

BallVolumeTable volume_table(const GrusinParameters& params, const Point& center, std::vector<double> radii)
{
    BallVolumeTable t;
    t.center = center;
    t.method = VolumeMethod::closed_form;
    for (double r : radii) t.volumes.push_back(ball_volume(params, center, r).volume);
    t.radii = std::move(radii);
    return t;
}

double doubling_exponent(const BallVolumeTable& table)
{
    const auto& r = table.radii;
    const auto& v = table.volumes;
    if (r.size() != v.size()) throw std::invalid_argument("doubling_exponent: radii and volumes differ in length");
    if (r.size() < 8) throw std::invalid_argument("doubling_exponent: at least 8 radii are required");
    if (!(r.front() > 0.0) || r.back() / r.front() < 100.0 * (1.0 - 1e-12))
        throw std::invalid_argument("doubling_exponent: radii must span at least two decades");
    double worst = -kInfinity;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if (!(r[i + 1] > r[i])) throw std::invalid_argument("doubling_exponent: radii must be increasing");
        if (v[i + 1] < v[i]) throw DataError("doubling_exponent: volumes are not monotone in the radius");
        if (!(v[i] > 0.0)) throw DataError("doubling_exponent: volumes must be positive");
        worst = std::max(worst, std::log(v[i + 1] / v[i]) / std::log(r[i + 1] / r[i]));
    }
    return worst;
}

namespace {

struct PairVolumes {
    double small = 0.0;
    double large = 0.0;
};

// Volumes of B(center; r) and B(center; R) on one grid adapted to both radii.
PairVolumes adaptive_pair(const CoefficientField& coeffs, const Point& center, double r, double R, int cells,
                          int stencil_order, std::size_t max_nodes)
{
    const int n = coeffs.params().n;
    const int d = coeffs.params().dimension();
    const double c1norm = norm(center.x1);
    // Euclidean reach of a metric ball: fixed point of e = radius * sqrt(c1(|x1| + e)).
    auto reach1 = [&](double radius) {
        double e = radius;
        for (int it = 0; it < 60; ++it) e = radius * std::sqrt(coeffs.c1(c1norm + e));
        return e;
    };
    std::vector<double> ext(d), h(d);
    for (int k = 0; k < d; ++k) {
        const double e_big = reach1(R);
        const double e_small = reach1(r);
        if (k < n) {
            ext[k] = 1.25 * e_big;
            h[k] = 2.0 * e_small / cells;
        } else {
            ext[k] = 1.25 * R * std::sqrt(coeffs.c2(c1norm + e_big));
            h[k] = 2.0 * r * std::sqrt(coeffs.c2(c1norm + e_small)) / cells;
        }
    }
    for (int attempt = 0; attempt < 12; ++attempt) {
        std::vector<int> nodes(d);
        std::vector<double> extent(d);
        std::vector<double> coords(d, 0.0);
        std::size_t total = 1;
        for (int k = 0; k < d; ++k) {
            const double c = k < n ? std::abs(center.x1[k]) : 0.0;
            double hk = h[k];
            if (c > 0.0) hk = c / std::ceil(c / hk);
            const long half = static_cast<long>(std::ceil((c + ext[k]) / hk));
            nodes[k] = static_cast<int>(2 * half + 1);
            extent[k] = hk * static_cast<double>(half);
            coords[k] = k < n ? center.x1[k] : 0.0;
            total *= static_cast<std::size_t>(nodes[k]);
            if (total > max_nodes)
                throw CapacityError("multiscale_doubling: grid for radius " + std::to_string(R) + " exceeds " +
                                    std::to_string(max_nodes) + " nodes");
        }
        const Grid grid(n, nodes, extent);
        const DistanceField field = numerical_distance(coeffs, grid, Point::from_flat(coords, n), stencil_order, R);
        const std::vector<double> c = grid.coordinates(field.source());
        std::vector<double> reach_small(d, 0.0);
        std::vector<bool> touches(d, false);
        std::size_t count_small = 0, count_large = 0;
        for (std::size_t idx = 0; idx < grid.size(); ++idx) {
            const double v = field[idx];
            if (!(v < R)) continue;
            ++count_large;
            for (int k = 0; k < d; ++k) {
                const int i = grid.axis_index(idx, k);
                if (i == 0 || i == grid.nodes(k) - 1) touches[k] = true;
            }
            if (v < r) {
                ++count_small;
                for (int k = 0; k < d; ++k)
                    reach_small[k] = std::max(reach_small[k], std::abs(grid.coordinate(idx, k) - c[k]));
            }
        }
        bool redo = false;
        for (int k = 0; k < d; ++k) {
            if (touches[k]) {
                ext[k] *= 1.5;
                redo = true;
            }
            const double wanted = reach_small[k] > 0.0 ? 2.0 * reach_small[k] / cells : 0.25 * grid.spacing(k);
            if (wanted < 0.7 * grid.spacing(k)) {
                h[k] = wanted;
                redo = true;
            }
        }
        if (!redo) return {static_cast<double>(count_small) * grid.node_weight(),
                           static_cast<double>(count_large) * grid.node_weight()};
    }
    throw DataError("multiscale_doubling: grid adaptation did not settle for radius " + std::to_string(R));
}

}  // namespace

DoublingEstimate multiscale_doubling(const CoefficientField& coeffs, const Point& center, std::vector<double> radii,
                                     int cells, int stencil_order, std::size_t max_nodes)
{
    if (radii.size() < 2) throw std::invalid_argument("multiscale_doubling: at least two radii are required");
    if (cells < 4) throw std::invalid_argument("multiscale_doubling: cells must be at least 4");
    DoublingEstimate est;
    est.center = center;
    est.max_exponent = -kInfinity;
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || !(radii[i + 1] > radii[i]))
            throw std::invalid_argument("multiscale_doubling: radii must be positive and increasing");
        const PairVolumes v = adaptive_pair(coeffs, center, radii[i], radii[i + 1], cells, stencil_order, max_nodes);
        if (!(v.small > 0.0) || v.large < v.small) throw DataError("multiscale_doubling: volumes are not monotone");
        est.volumes.push_back(v.small);
        const double e = std::log(v.large / v.small) / std::log(radii[i + 1] / radii[i]);
        est.exponents.push_back(e);
        est.max_exponent = std::max(est.max_exponent, e);
        if (i + 2 == radii.size()) est.volumes.push_back(v.large);
    }
    est.radii = std::move(radii);
    return est;
}

std::vector<double> geometric_radii(double r0, double ratio, int count)
{
    std::vector<double> out(count);
    double r = r0;
    for (int i = 0; i < count; ++i, r *= ratio) out[i] = r;
    return out;
}

}  // namespace grusin
