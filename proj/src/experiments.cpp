#include "grusin/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "grusin/errors.hpp"
#include "grusin/fitting.hpp"
#include "grusin/geometry.hpp"
#include "grusin/kernel_checks.hpp"
#include "grusin/multipliers.hpp"
#include "grusin/parallel.hpp"
#include "grusin/wave.hpp"

namespace grusin {

Json Overrides::apply(Json document) const
{
    if (!document.is_object()) return document;
    if (seed) document["seed"] = *seed;
    if (output) document["output"] = output->string();
    if (workers) document["workers"] = *workers;
    return document;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string level_name(const std::string& base, int level) { return base + ".level" + std::to_string(level); }

std::vector<double> log_times(double lo, double hi, int count)
{
    std::vector<double> out;
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return out;
}

// "times": [t...] or {"min": a, "max": b, "count": k} (log spaced).
std::vector<double> parse_times(const ConfigNode& node, const std::string& key)
{
    std::vector<double> times;
    if (node.json().contains(key) && node.json()[key].is_object()) {
        const ConfigNode t = node.child(key);
        t.restrict_keys({"min", "max", "count"});
        const double lo = t.number("min");
        const double hi = t.number("max");
        const int count = t.integer("count");
        if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ConfigError(t.path(), "need 0 < min <= max and count >= 1");
        times = log_times(lo, hi, count);
    } else {
        times = node.numbers(key);
    }
    if (times.empty()) throw ConfigError(node.path() + "." + key, "at least one time is required");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw ConfigError(node.path() + "." + key, "times must be positive");
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError(node.path() + "." + key, "times must increase");
    }
    return times;
}

const GridSpec& required_grid(const ExperimentConfig& c)
{
    if (c.grid.nodes.empty()) throw ConfigError("grid", "required field is missing");
    return c.grid;
}

Grid refine(Grid g, int levels)
{
    for (int i = 0; i < levels; ++i) g = g.refined();
    return g;
}

std::vector<double> flat(const Point& p) { return p.flat(); }

void append(std::vector<double>& row, const std::vector<double>& values)
{
    row.insert(row.end(), values.begin(), values.end());
}

std::vector<std::string> coordinate_columns(const std::string& prefix, const GrusinParameters& p)
{
    std::vector<std::string> out;
    for (int i = 0; i < p.n; ++i) out.push_back(prefix + "1_" + std::to_string(i));
    for (int i = 0; i < p.m; ++i) out.push_back(prefix + "2_" + std::to_string(i));
    return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

FittedConstant stability(const std::string& name, double coarse, double fine, double factor)
{
    FittedConstant f{name, coarse, fine, factor, false};
    f.stable = coarse > 0.0 && fine > 0.0 && std::isfinite(coarse) && std::isfinite(fine) &&
               std::max(coarse / fine, fine / coarse) <= factor;
    return f;
}

// Unknowns whose coordinates all lie within `window` of the origin, nearest first.
std::vector<std::size_t> candidates_near_origin(const DivergenceFormOperator& op, double window, int max_count)
{
    const Grid& g = op.grid();
    std::vector<std::pair<double, std::size_t>> found;
    for (std::size_t k = 0; k < op.size(); ++k) {
        const std::size_t idx = op.node(k);
        double r2 = 0.0;
        bool inside = true;
        for (int a = 0; a < g.dimension() && inside; ++a) {
            const double x = g.coordinate(idx, a);
            inside = std::abs(x) <= window;
            r2 += x * x;
        }
        if (inside) found.emplace_back(r2, k);
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out;
    for (const auto& [r2, k] : found) {
        if (static_cast<int>(out.size()) >= max_count) break;
        out.push_back(k);
    }
    return out;
}

// Distinct random unknowns (sorted) from a seeded generator.
std::vector<std::size_t> random_unknowns(std::size_t size, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::set<std::size_t> chosen;
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(count), size);
    std::uniform_int_distribution<std::size_t> pick(0, size - 1);
    while (chosen.size() < want) chosen.insert(pick(rng));
    return {chosen.begin(), chosen.end()};
}

// ---------------------------------------------------------------- distance

void run_distance(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"sources", "targets", "box", "stencil_order", "refinements", "stability"});
    const int sources = k.integer("sources", 10);
    const int targets = k.integer("targets", 10);
    const double box = k.number("box", 2.0);
    const int order = k.integer("stencil_order", 2);
    const int refinements = k.integer("refinements", 1);
    const double factor = k.number("stability", 1.25);
    if (sources < 1 || targets < 1) throw ConfigError("experiment.sources", "need at least one source and target");
    if (refinements < 0) throw ConfigError("experiment.refinements", "must be non-negative");

    const Grid coarse = required_grid(c).build(c.params.n);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> coord(-box, box);
    auto draw = [&] {
        std::vector<double> x(c.params.dimension());
        for (double& v : x) v = coord(rng);
        return coarse.point(coarse.snap(Point::from_flat(x, c.params.n)).index);
    };
    std::vector<Point> xs, ys;
    for (int i = 0; i < sources; ++i) xs.push_back(draw());
    for (int j = 0; j < targets; ++j) ys.push_back(draw());

    const CoefficientField coeffs(c.params);
    std::vector<double> bands;
    for (int level = 0; level <= refinements; ++level) {
        const Grid g = refine(coarse, level);
        auto& table = report.table(level_name("pairs", level),
                                   concat(concat(coordinate_columns("x", c.params), coordinate_columns("y", c.params)),
                                          {"d_closed", "d_numeric", "ratio"}));
        std::vector<std::vector<std::vector<double>>> rows(xs.size());
        parallel_for(xs.size(), [&](std::size_t i) {
            const DistanceField field = numerical_distance(coeffs, g, xs[i], order);
            for (const Point& y : ys) {
                const double closed = closed_form_distance(c.params, xs[i], y);
                if (closed == 0.0) continue;
                const double numeric = field[g.snap(y).index];
                std::vector<double> row = flat(xs[i]);
                append(row, flat(y));
                append(row, {closed, numeric, numeric / closed});
                rows[i].push_back(std::move(row));
            }
        });
        double lo = kInfinity, hi = 0.0;
        for (const auto& block : rows)
            for (const auto& row : block) {
                table.rows.push_back(row);
                lo = std::min(lo, row.back());
                hi = std::max(hi, row.back());
            }
        if (table.rows.empty()) throw DataError("distance: all sampled pairs coincide");
        const double band = std::max(hi, 1.0 / lo);
        bands.push_back(band);
        report.add(make_check(level_name("band", level), band, Relation::below, kInfinity));
    }
    for (std::size_t l = 1; l < bands.size(); ++l) {
        report.constants.push_back(stability("band", bands[l - 1], bands[l], factor));
        report.add(make_check("band.stability" + std::to_string(l), bands[l], Relation::factor_within, bands[l - 1], factor));
    }
}

// ---------------------------------------------------------------- volume

std::vector<double> radii_from(const ConfigNode& node)
{
    const double lo = node.number("r_min");
    const double hi = node.number("r_max");
    const int count = node.integer("count", 8);
    if (!(lo > 0.0 && hi > lo) || count < 2) throw ConfigError(node.path(), "need 0 < r_min < r_max and count >= 2");
    return log_times(lo, hi, count);
}

void volume_regime(const ExperimentConfig& c, Report& report, const ConfigNode& node, const std::string& name,
                   const Point& center, double expected, double tolerance, int order)
{
    const GridSpec spec = parse_grid(node.child("grid"), c.params.dimension());
    const Grid g = spec.build(c.params.n);
    const std::vector<double> radii = radii_from(node);
    const CoefficientField coeffs(c.params);
    const DistanceField field = numerical_distance(coeffs, g, center, order);
    double edge = kInfinity;
    for (std::size_t idx = 0; idx < g.size(); ++idx)
        for (int a = 0; a < g.dimension(); ++a) {
            const int i = g.axis_index(idx, a);
            if (i == 0 || i == g.nodes(a) - 1) edge = std::min(edge, field[idx]);
        }
    if (!(edge > radii.back()))
        throw PreconditionError(name + ": the largest ball reaches the grid boundary (distance " + format_number(edge) +
                                ")");
    const BallVolumeTable numeric = volume_table(field, radii);
    const BallVolumeTable closed = volume_table(c.params, center, radii);
    auto& t = report.table(name, {"r", "volume_numeric", "volume_closed"});
    for (std::size_t i = 0; i < radii.size(); ++i) t.rows.push_back({radii[i], numeric.volumes[i], closed.volumes[i]});
    const double slope = fit_loglog(radii, numeric.volumes).slope;
    report.add(make_check(name + ".slope", slope, Relation::within, expected, tolerance * expected));
}

void run_volume(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    const std::string mode = k.text("mode", "regimes");
    const DerivedExponents e = derive_exponents(c.params);
    const int order = k.integer("stencil_order", 2);
    if (mode == "regimes") {
        k.restrict_keys({"mode", "origin", "off_origin", "slope_tolerance", "stencil_order"});
        const double tol = k.number("slope_tolerance", 0.10);
        const Point origin{std::vector<double>(c.params.n, 0.0), std::vector<double>(c.params.m, 0.0)};
        if (k.has("origin")) {
            const ConfigNode o = k.child("origin");
            o.restrict_keys({"grid", "r_min", "r_max", "count"});
            volume_regime(c, report, o, "origin", origin, e.D, tol, order);
        }
        if (k.has("off_origin")) {
            const ConfigNode o = k.child("off_origin");
            o.restrict_keys({"grid", "center", "r_min", "r_max", "count"});
            const Point center = parse_point(o, "center", c.params);
            double x1 = 0.0;
            for (double v : center.x1) x1 += v * v;
            x1 = std::sqrt(x1);
            const double limit = std::pow(x1, 1.0 - c.params.delta1);
            if (!(o.number("r_max") <= limit))
                throw ConfigError(o.path() + ".r_max", "must not exceed |x1|^(1-delta1) = " + format_number(limit));
            volume_regime(c, report, o, "off_origin", center, c.params.dimension(), tol, order);
        }
    } else if (mode == "doubling") {
        k.restrict_keys({"mode", "centers", "r0", "ratio", "count", "cells", "margin", "stencil_order", "max_nodes"});
        const std::vector<Point> centers = parse_points(k, "centers", c.params);
        const double r0 = k.number("r0", 0.03);
        const double ratio = k.number("ratio", 2.0);
        const int count = k.integer("count", 8);
        const int cells = k.integer("cells", 48);
        const double margin = k.number("margin", 0.3);
        const double max_nodes = k.number("max_nodes", 8e6);
        if (count < 8) throw ConfigError("experiment.count", "at least 8 radii are required");
        if (!(std::log10(r0 * std::pow(ratio, count - 1) / r0) >= 2.0))
            throw ConfigError("experiment.ratio", "radii must span at least two decades");
        const CoefficientField coeffs(c.params);
        const double bound = e.doubling_dim() + margin;
        auto& t = report.table("doubling", concat(coordinate_columns("x", c.params), {"r", "volume", "exponent"}));
        std::vector<DoublingEstimate> estimates(centers.size());
        parallel_for(centers.size(), [&](std::size_t i) {
            estimates[i] = multiscale_doubling(coeffs, centers[i], geometric_radii(r0, ratio, count), cells, order,
                                               static_cast<std::size_t>(max_nodes));
        });
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const auto& est = estimates[i];
            for (std::size_t j = 0; j < est.radii.size(); ++j) {
                std::vector<double> row = flat(centers[i]);
                append(row, {est.radii[j], est.volumes[j],
                             j < est.exponents.size() ? est.exponents[j] : std::numeric_limits<double>::quiet_NaN()});
                t.rows.push_back(std::move(row));
            }
            report.add(make_check("doubling.center" + std::to_string(i), est.max_exponent, Relation::at_most, bound));
        }
    } else {
        throw ConfigError("experiment.mode", "expected 'regimes' or 'doubling'");
    }
}

// ---------------------------------------------------------------- heat kernel

Semigroup make_semigroup(const DivergenceFormOperator& op, const EvolutionMethod& method)
{
    return Semigroup(op, method);
}

void run_gaussian_bounds(const ExperimentConfig& c, Report& report, const ConfigNode& k)
{
    k.restrict_keys({"mode", "samples", "times", "epsilon", "refinements", "stability", "stencil_order", "noise_floor"});
    const std::vector<Point> samples = parse_points(k, "samples", c.params);
    const std::vector<double> times = parse_times(k, "times");
    const double eps = k.number("epsilon", 0.1);
    const int refinements = k.integer("refinements", 1);
    const double factor = k.number("stability", 2.0);
    const int order = k.integer("stencil_order", 2);
    const double floor = k.number("noise_floor", 1e-6);
    if (samples.empty()) throw ConfigError("experiment.samples", "at least one sample point is required");
    const CoefficientField coeffs(c.params);
    const Grid coarse = required_grid(c).build(c.params.n);
    std::vector<double> upper, lower;
    for (int level = 0; level <= refinements; ++level) {
        const Grid g = refine(coarse, level);
        const Semigroup sg = make_semigroup(assemble(g, coeffs), c.method);
        const GaussianBoundReport r = gaussian_bounds(sg, samples, times, eps, order, floor);
        auto& t = report.table(level_name("samples", level),
                               concat(concat(coordinate_columns("x", c.params), coordinate_columns("y", c.params)),
                                      {"t", "kernel", "distance", "volume_x", "volume_y", "resolved"}));
        for (const auto& s : r.samples) {
            std::vector<double> row = flat(s.x);
            append(row, flat(s.y));
            append(row, {s.t, s.kernel, s.distance, s.volume_x, s.volume_y, s.resolved ? 1.0 : 0.0});
            t.rows.push_back(std::move(row));
        }
        upper.push_back(r.upper_constant);
        lower.push_back(r.lower_constant);
        report.add(make_check(level_name("upper_constant", level), r.upper_constant, Relation::below, kInfinity));
        report.add(make_check(level_name("upper_constant_positive", level), r.upper_constant, Relation::above, 0.0));
        report.add(make_check(level_name("lower_constant", level), r.lower_constant, Relation::above, 0.0));
    }
    for (std::size_t l = 1; l < upper.size(); ++l) {
        report.constants.push_back(stability("upper_constant", upper[l - 1], upper[l], factor));
        report.constants.push_back(stability("lower_constant", lower[l - 1], lower[l], factor));
        report.add(make_check("upper_constant.stability" + std::to_string(l), upper[l], Relation::factor_within,
                              upper[l - 1], factor));
        report.add(make_check("lower_constant.stability" + std::to_string(l), lower[l], Relation::factor_within,
                              lower[l - 1], factor));
    }
}

void run_free_space(const ExperimentConfig& c, Report& report, const ConfigNode& k)
{
    k.restrict_keys({"mode", "t", "source", "tolerance", "guard"});
    const GrusinParameters& p = c.params;
    if (p.delta1 != 0.0 || p.delta1p != 0.0 || p.delta2 != 0.0 || p.delta2p != 0.0)
        throw ConfigError("params", "the free-space oracle needs constant coefficients (all deltas 0)");
    const double t = k.number("t", 0.1);
    const double tol = k.number("tolerance", 1e-3);
    const double guard = k.number("guard", 1e-8);
    const Point source = k.has("source") ? parse_point(k, "source", p)
                                         : Point{std::vector<double>(p.n, 0.0), std::vector<double>(p.m, 0.0)};
    const Grid g = required_grid(c).build(p.n);
    const std::size_t y = g.snap(source).index;
    double edge = kInfinity;
    for (int a = 0; a < g.dimension(); ++a) edge = std::min(edge, g.extent(a) - std::abs(g.coordinate(y, a)));
    const double tail = boundary_tail(edge, t);
    report.add(make_check("boundary_tail", tail, Relation::at_most, guard));
    const Semigroup sg = make_semigroup(assemble(g, CoefficientField(p)), c.method);
    const KernelSlice slice = heat_kernel(sg, sg.op().unknown(y), t);
    const int d = g.dimension();
    const double norm = std::pow(4.0 * std::numbers::pi * t, -0.5 * d);
    double sup = 0.0;
    auto& table = report.table("profile", concat(coordinate_columns("x", p), {"kernel", "gauss"}));
    for (std::size_t kk = 0; kk < sg.op().size(); ++kk) {
        const std::size_t idx = sg.op().node(kk);
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dx = g.coordinate(idx, a) - g.coordinate(y, a);
            r2 += dx * dx;
        }
        const double gauss = norm * std::exp(-r2 / (4.0 * t));
        const double value = slice.values[static_cast<Eigen::Index>(kk)];
        sup = std::max(sup, std::abs(value - gauss));
        std::vector<double> row = g.coordinates(idx);
        append(row, {value, gauss});
        table.rows.push_back(std::move(row));
    }
    report.add(make_check("sup_error", sup, Relation::below, tol));
}

void run_heat_kernel(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    const std::string mode = k.text("mode", "gaussian_bounds");
    if (mode == "gaussian_bounds")
        run_gaussian_bounds(c, report, k);
    else if (mode == "free_space")
        run_free_space(c, report, k);
    else
        throw ConfigError("experiment.mode", "expected 'gaussian_bounds' or 'free_space'");
}

// ---------------------------------------------------------------- conservation

void run_conservation(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"times", "sources", "tolerance", "dirichlet_control"});
    const std::vector<double> times = parse_times(k, "times");
    const int count = k.integer("sources", 10);
    const double tol = k.number("tolerance", 1e-8);
    if (count < 1) throw ConfigError("experiment.sources", "must be positive");
    const Grid g = required_grid(c).build(c.params.n);
    const CoefficientField coeffs(c.params);
    const Semigroup sg = make_semigroup(assemble(g, coeffs), c.method);
    const auto sources = random_unknowns(sg.op().size(), count, c.seed);
    auto& t = report.table("deviation", concat(coordinate_columns("y", c.params), {"t", "deviation"}));
    std::vector<std::vector<KernelSlice>> slices(sources.size());
    parallel_for(sources.size(), [&](std::size_t i) { slices[i] = heat_kernel_times(sg, sources[i], times); });
    double worst = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i)
        for (const auto& s : slices[i]) {
            const double dev = std::abs(1.0 - s.mass());
            worst = std::max(worst, dev);
            std::vector<double> row = g.coordinates(sg.op().node(sources[i]));
            append(row, {s.t, dev});
            t.rows.push_back(std::move(row));
        }
    report.add(make_check("max_deviation", worst, Relation::at_most, tol));
    if (k.boolean("dirichlet_control", false) && c.params.delta1 < 0.5) {
        const Semigroup dir = make_semigroup(assemble(g, coeffs, Boundary::dirichlet_origin), c.method);
        const auto ds = random_unknowns(dir.op().size(), count, c.seed);
        const ConservationReport r = conservation_report(dir, ds, times);
        report.add(make_check("dirichlet_loses_mass", r.max_deviation, Relation::above, 0.0));
    }
}

// ---------------------------------------------------------------- decay

void run_decay(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"regimes"});
    for (const ConfigNode& reg : k.items("regimes")) {
        reg.restrict_keys({"name", "params", "grid", "boundary", "times", "candidates", "expected_slope", "tolerance",
                           "guard", "stencil_order", "method"});
        const std::string name = reg.text("name");
        const GrusinParameters p = reg.has("params") ? override_params(c.params, reg.child("params")) : c.params;
        const GridSpec spec = reg.has("grid") ? parse_grid(reg.child("grid"), p.dimension()) : required_grid(c);
        if (spec.nodes.empty()) throw ConfigError(reg.path() + ".grid", "required field is missing");
        Boundary boundary = Boundary::neumann_truncation;
        if (reg.has("boundary")) {
            try {
                boundary = boundary_from_string(reg.text("boundary"));
            } catch (const std::invalid_argument&) {
                throw ConfigError(reg.path() + ".boundary", "unknown boundary mode");
            }
        }
        const EvolutionMethod method = reg.has("method") ? parse_method(reg.child("method")) : c.method;
        const std::vector<double> times = parse_times(reg, "times");
        const ConfigNode cand = reg.child("candidates");
        cand.restrict_keys({"window", "max"});
        const double expected = reg.number("expected_slope");
        const double tol = reg.number("tolerance");
        const double guard = reg.number("guard", 1e-6);
        const int order = reg.integer("stencil_order", 2);

        const Grid g = spec.build(p.n);
        const CoefficientField coeffs(p);
        const Semigroup sg = make_semigroup(assemble(g, coeffs, boundary), method);
        const auto candidates = candidates_near_origin(sg.op(), cand.number("window"), cand.integer("max", 8));
        if (candidates.empty()) throw ConfigError(cand.path() + ".window", "no unknowns inside the candidate window");
        std::vector<std::size_t> nodes;
        for (std::size_t u : candidates) nodes.push_back(sg.op().node(u));
        const double bd = distance_to_boundary(coeffs, g, nodes, order);
        const DecayReport r = ondiagonal_decay(sg, candidates, times, bd, guard);

        auto& t = report.table(name, concat({"t", "sup_diag"}, coordinate_columns("x", p)));
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            std::vector<double> row{r.times[i], r.sup_diag[i]};
            append(row, g.coordinates(sg.op().node(r.argmax[i])));
            t.rows.push_back(std::move(row));
        }
        const double span = r.times.size() >= 2 ? std::log10(r.times.back() / r.times.front()) : 0.0;
        report.add(make_check(name + ".decades", span, Relation::at_least, 1.0 - 1e-9));
        report.add(make_check(name + ".refused_times", static_cast<double>(r.refused.size()), Relation::at_most,
                              static_cast<double>(times.size()) - 2.0));
        const double slope = r.times.size() >= 2 ? fit_loglog(r.times, r.sup_diag).slope
                                                 : std::numeric_limits<double>::quiet_NaN();
        report.add(make_check(name + ".slope", slope, Relation::within, expected, tol));
    }
}

// ---------------------------------------------------------------- separation

void run_separation(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"cases", "levels", "t", "window", "tolerance"});
    const int levels = k.integer("levels", 4);
    const double t = k.number("t", 1.0);
    const double window = k.number("window", 1.0);
    const double tol = k.number("tolerance", 1e-8);
    struct Case {
        std::string name;
        GrusinParameters params;
        GridSpec grid;
    };
    std::vector<Case> cases;
    if (k.has("cases")) {
        for (const ConfigNode& cs : k.items("cases")) {
            cs.restrict_keys({"name", "params", "grid"});
            const GrusinParameters p = cs.has("params") ? override_params(c.params, cs.child("params")) : c.params;
            GridSpec spec = cs.has("grid") ? parse_grid(cs.child("grid"), p.dimension()) : required_grid(c);
            if (static_cast<int>(spec.nodes.size()) != p.dimension())
                throw ConfigError(cs.path() + ".grid", "grid dimension differs from n + m");
            cases.push_back({cs.text("name"), p, std::move(spec)});
        }
    } else {
        cases.push_back({"case", c.params, required_grid(c)});
    }
    for (const auto& [name, p, spec] : cases) {
        const Grid g = spec.build(p.n);
        const SeparationReport r = separation_check(p, g, levels, t, window, tol);
        auto& table = report.table(name, {"h", "max_cross_kernel", "min_cross_kernel", "dirichlet_gap"});
        for (const auto& lv : r.levels)
            table.rows.push_back({lv.spacing, lv.max_cross_kernel, lv.min_cross_kernel, lv.dirichlet_gap});
        if (r.strongly_degenerate) {
            double cross = 0.0;
            for (const auto& lv : r.levels) cross = std::max(cross, lv.max_cross_kernel);
            report.add(make_check(name + ".max_cross_kernel", cross, Relation::at_most, 0.0));
            report.add(make_check(name + ".final_gap", r.levels.back().dirichlet_gap, Relation::at_most, tol));
        } else {
            double cross = kInfinity;
            for (const auto& lv : r.levels) cross = std::min(cross, lv.min_cross_kernel);
            report.add(make_check(name + ".min_cross_kernel", cross, Relation::above, 0.0));
            report.add(make_check(name + ".final_gap", r.levels.back().dirichlet_gap, Relation::above, tol));
        }
        report.add(make_check(name + ".verdict", r.passed ? 1.0 : 0.0, Relation::at_least, 1.0));
    }
}

// ---------------------------------------------------------------- compare

void run_compare(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"r_cut", "region", "sources", "times", "max_slope", "control", "control_tolerance",
                     "stencil_order"});
    const double r_cut = k.number("r_cut");
    const ConfigNode reg = k.child("region");
    reg.restrict_keys({"x1_min", "x1_max", "x2_max"});
    const double x1_min = reg.number("x1_min");
    const double x1_max = reg.number("x1_max");
    const double x2_max = reg.number("x2_max", kInfinity);
    const std::vector<Point> source_points = parse_points(k, "sources", c.params);
    const std::vector<double> times = parse_times(k, "times");
    const double max_slope = k.number("max_slope", -0.8);
    const int order = k.integer("stencil_order", 2);
    const Grid g = required_grid(c).build(c.params.n);

    std::vector<std::size_t> region;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const double x1 = g.x1_norm(idx);
        bool inside = x1 >= x1_min && x1 <= x1_max;
        for (int a = c.params.n; a < g.dimension() && inside; ++a) inside = std::abs(g.coordinate(idx, a)) <= x2_max;
        if (inside) region.push_back(idx);
    }
    if (region.empty()) throw ConfigError("experiment.region", "no grid nodes inside the region");
    std::vector<std::size_t> sources;
    for (const Point& p : source_points) sources.push_back(g.snap(p).index);

    const ComparisonReport r = kernel_comparison(g, c.params, r_cut, region, sources, times, c.method, order);
    auto& t = report.table("difference", {"t", "rho2_over_4t", "sup_difference", "reference"});
    for (std::size_t i = 0; i < r.times.size(); ++i)
        t.rows.push_back({r.times[i], r.rho * r.rho / (4.0 * r.times[i]), r.sup_difference[i], r.reference[i]});
    report.add(make_check("time_decades", std::log10(times.back() / times.front()), Relation::at_least, 1.0 - 1e-9));
    report.add(make_check("slope", r.slope, Relation::at_most, max_slope));

    if (k.boolean("control", true)) {
        GrusinParameters flat_params;
        flat_params.n = c.params.n;
        flat_params.m = c.params.m;
        const double tol = k.number("control_tolerance", c.method.tolerance);
        const ComparisonReport ctl = kernel_comparison(g, flat_params, r_cut, region, sources, times, c.method, order);
        auto& ct = report.table("control", {"t", "sup_difference"});
        double worst = 0.0;
        for (std::size_t i = 0; i < ctl.times.size(); ++i) {
            ct.rows.push_back({ctl.times[i], ctl.sup_difference[i]});
            worst = std::max(worst, ctl.sup_difference[i]);
        }
        report.add(make_check("control.sup_difference", worst, Relation::at_most, tol));
    }
}

// ---------------------------------------------------------------- wave

void run_finite_speed(const ExperimentConfig& c, Report& report, const ConfigNode& k)
{
    k.restrict_keys({"mode", "regimes", "refinements", "bump", "times", "epsilon", "tolerance", "safety",
                     "stencil_order", "energy_tolerance"});
    const int refinements = k.integer("refinements", 1);
    const ConfigNode bump = k.child("bump");
    bump.restrict_keys({"center", "radius"});
    const double radius = bump.number("radius");
    const std::vector<double> times = parse_times(k, "times");
    const double eps = k.number("epsilon", 0.1);
    const double tol = k.number("tolerance", 1e-6);
    const double energy_tol = k.number("energy_tolerance", 1e-6);
    WaveOptions options;
    options.safety = k.number("safety", options.safety);
    const int order = k.integer("stencil_order", 2);

    std::vector<std::pair<std::string, GrusinParameters>> regimes;
    for (const ConfigNode& r : k.items("regimes")) {
        r.restrict_keys({"name", "params"});
        regimes.emplace_back(r.text("name"), r.has("params") ? override_params(c.params, r.child("params")) : c.params);
    }
    for (const auto& [name, p] : regimes) {
        const Point center = parse_point(bump, "center", p);
        const std::vector<double> cflat = center.flat();
        const CoefficientField coeffs(p);
        auto& table = report.table(name, {"level", "h", "t", "leaked_fraction", "energy_drift", "cone_radius"});
        std::vector<std::vector<double>> leaks;
        for (int level = 0; level <= refinements; ++level) {
            const Grid g = refine(required_grid(c).build(p.n), level);
            const DivergenceFormOperator op = assemble(g, coeffs);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.size()));
            std::vector<std::size_t> support;
            for (std::size_t u = 0; u < op.size(); ++u) {
                const std::size_t idx = op.node(u);
                double s2 = 0.0;
                for (int a = 0; a < g.dimension(); ++a) {
                    const double z = (g.coordinate(idx, a) - cflat[a]) / radius;
                    s2 += z * z;
                }
                if (s2 < 1.0) {
                    v[static_cast<Eigen::Index>(u)] = std::exp(1.0 - 1.0 / (1.0 - s2));
                    support.push_back(idx);
                }
            }
            if (support.empty()) throw ConfigError(bump.path(), "the bump contains no grid node");
            const DistanceField field = numerical_distance(coeffs, g, support, order);
            std::vector<LeakageReport> results(times.size());
            parallel_for(times.size(), [&](std::size_t i) { results[i] = finite_speed_check(op, field, v, times[i], eps, options); });
            double h = 0.0;
            for (int a = 0; a < g.dimension(); ++a) h = std::max(h, g.spacing(a));
            std::vector<double> lv;
            for (std::size_t i = 0; i < times.size(); ++i) {
                const auto& r = results[i];
                table.rows.push_back({static_cast<double>(level), h, times[i], r.leaked_fraction, r.energy_drift, r.cone_radius});
                lv.push_back(r.leaked_fraction);
                const std::string tag = name + "." + level_name("t" + format_number(times[i]), level);
                report.add(make_check(tag + ".leak", r.leaked_fraction, Relation::below, tol));
                report.add(make_check(tag + ".energy_drift", r.energy_drift, Relation::at_most,
                                      energy_tol * std::max(1.0, times[i])));
            }
            leaks.push_back(std::move(lv));
        }
        for (std::size_t l = 1; l < leaks.size(); ++l)
            for (std::size_t i = 0; i < times.size(); ++i)
                report.add(make_check(name + ".t" + format_number(times[i]) + ".refinement" + std::to_string(l),
                                      leaks[l][i], Relation::at_most, leaks[l - 1][i]));
    }
}

void run_davies_gaffney(const ExperimentConfig& c, Report& report, const ConfigNode& k)
{
    k.restrict_keys({"mode", "samples", "half_width", "region", "ratio_min", "ratio_max", "epsilon", "min_distance",
                     "stencil_order"});
    const int samples = k.integer("samples", 20);
    const double half = k.number("half_width", 0.2);
    const double region = k.number("region", 2.5);
    const double rmin = k.number("ratio_min", 4.0);
    const double rmax = k.number("ratio_max", 36.0);
    const double eps = k.number("epsilon", 0.2);
    const double min_distance = k.number("min_distance", 0.5);
    const int order = k.integer("stencil_order", 2);
    if (samples < 1) throw ConfigError("experiment.samples", "must be positive");
    if (!(rmin > 0.0 && rmax >= rmin)) throw ConfigError("experiment.ratio_min", "need 0 < ratio_min <= ratio_max");

    const Grid g = required_grid(c).build(c.params.n);
    const CoefficientField coeffs(c.params);
    const Semigroup sg = make_semigroup(assemble(g, coeffs), c.method);
    const auto& op = sg.op();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> pos(-region, region), ratio(rmin, rmax);
    const int d = g.dimension();
    auto& table = report.table("samples", concat(concat(coordinate_columns("a", c.params), coordinate_columns("b", c.params)),
                                                 {"distance", "t", "ratio", "margin"}));
    double worst = -kInfinity;
    int drawn = 0;
    for (int attempt = 0; drawn < samples; ++attempt) {
        if (attempt > 100 * samples) throw DataError("davies_gaffney: could not draw separated box pairs");
        std::vector<double> ca(d), cb(d);
        for (int a = 0; a < d; ++a) {
            ca[a] = pos(rng);
            cb[a] = pos(rng);
        }
        std::vector<std::size_t> A, B, A_nodes;
        for (std::size_t u = 0; u < op.size(); ++u) {
            const std::size_t idx = op.node(u);
            bool in_a = true, in_b = true;
            for (int a = 0; a < d; ++a) {
                in_a = in_a && std::abs(g.coordinate(idx, a) - ca[a]) <= half;
                in_b = in_b && std::abs(g.coordinate(idx, a) - cb[a]) <= half;
            }
            if (in_a) {
                A.push_back(u);
                A_nodes.push_back(idx);
            } else if (in_b) {
                B.push_back(u);
            }
        }
        const double q = ratio(rng);
        if (A.empty() || B.empty()) continue;
        const DistanceField field = numerical_distance(coeffs, g, A_nodes, order);
        std::vector<double> dist(op.size());
        for (std::size_t u = 0; u < op.size(); ++u) dist[u] = field[op.node(u)];
        double dab = kInfinity;
        for (std::size_t u : B) dab = std::min(dab, dist[u]);
        if (!(dab >= min_distance) || !std::isfinite(dab)) continue;
        const double times[] = {dab * dab / (4.0 * q)};
        const DaviesGaffneyReport r = davies_gaffney_check(sg, dist, A, B, times, eps);
        worst = std::max(worst, r.worst_margin);
        std::vector<double> row = ca;
        append(row, cb);
        append(row, {dab, times[0], q, r.worst_margin});
        table.rows.push_back(std::move(row));
        ++drawn;
    }
    report.add(make_check("worst_margin", worst, Relation::below, 0.0));
}

void run_wave(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    const std::string mode = k.text("mode", "finite_speed");
    if (mode == "finite_speed")
        run_finite_speed(c, report, k);
    else if (mode == "davies_gaffney")
        run_davies_gaffney(c, report, k);
    else
        throw ConfigError("experiment.mode", "expected 'finite_speed' or 'davies_gaffney'");
}

// ---------------------------------------------------------------- nash

NashOptions nash_options(const ConfigNode& k, std::uint64_t seed)
{
    NashOptions o;
    o.ensemble = k.integer("ensemble", o.ensemble);
    o.seed = seed;
    o.min_width = k.number("min_width", o.min_width);
    o.max_width = k.number("max_width", o.max_width);
    o.min_width_cells = k.number("min_width_cells", o.min_width_cells);
    return o;
}

void nash_tables(Report& report, const std::string& name, const NashReport& r)
{
    auto& m = report.table(name + ".margin", {"r", "worst_margin"});
    for (std::size_t i = 0; i < r.radii.size(); ++i) m.rows.push_back({r.radii[i], r.worst_margin[i]});
    auto& t = report.table(name + ".ratios", {"trial", "ratio"});
    for (std::size_t i = 0; i < r.ratios.size(); ++i) t.rows.push_back({static_cast<double>(i), r.ratios[i]});
}

void run_nash(const ExperimentConfig& c, Report& report)
{
    const ConfigNode k = c.experiment();
    k.restrict_keys({"parts", "ensemble", "min_width", "max_width", "min_width_cells", "refinements", "stability",
                     "scale", "vf", "hardy", "operator"});
    std::vector<std::string> parts{"nash", "vf", "half_line"};
    if (k.has("parts")) {
        parts.clear();
        for (const auto& v : k.json()["parts"]) {
            if (!v.is_string()) throw ConfigError("experiment.parts", "expected strings");
            parts.push_back(v.get<std::string>());
        }
    }
    const std::set<std::string> known{"nash", "vf", "half_line", "hardy", "operator"};
    for (const auto& p : parts)
        if (!known.count(p)) throw ConfigError("experiment.parts", "unknown part '" + p + "'");
    auto wants = [&](const std::string& p) { return std::find(parts.begin(), parts.end(), p) != parts.end(); };

    MultiplierSpec spec{c.params, k.number("scale", 1.0)};
    const double factor = k.number("stability", 1.25);
    const NashOptions base = nash_options(k, c.seed);
    const CoefficientField coeffs(c.params);

    if (wants("nash")) {
        const int refinements = k.integer("refinements", 1);
        std::vector<double> ratios;
        for (int level = 0; level <= refinements; ++level) {
            const Grid g = refine(required_grid(c).build(c.params.n), level);
            const NashReport r = nash_check(assemble(g, coeffs), spec, base);
            nash_tables(report, level_name("nash", level), r);
            ratios.push_back(r.min_ratio);
            report.add(make_check(level_name("nash.min_ratio", level), r.min_ratio, Relation::above, 0.0));
            report.add(make_check(level_name("nash.min_margin", level), r.min_margin, Relation::at_least, 0.0));
            if (level == 0) {
                NashOptions doubled = base;
                doubled.ensemble *= 2;
                const NashReport r2 = nash_check(assemble(g, coeffs), spec, doubled);
                report.add(make_check("nash.ensemble_doubling", r2.min_ratio, Relation::factor_within, r.min_ratio, factor));
            }
        }
        for (std::size_t l = 1; l < ratios.size(); ++l) {
            report.constants.push_back(stability("domination", ratios[l - 1], ratios[l], factor));
            report.add(make_check("nash.stability" + std::to_string(l), ratios[l], Relation::factor_within,
                                  ratios[l - 1], factor));
        }
    }
    if (wants("half_line")) {
        const Grid g = required_grid(c).build(c.params.n);
        NashOptions o = base;
        o.half_line = true;
        const NashReport r = nash_check(assemble(g, coeffs, Boundary::half_line_positive), spec, o);
        nash_tables(report, "half_line", r);
        report.add(make_check("half_line.min_ratio", r.min_ratio, Relation::above, 0.0));
        report.add(make_check("half_line.min_margin", r.min_margin, Relation::at_least, 0.0));
    }
    if (wants("vf")) {
        static const Json empty = Json::object();
        const ConfigNode vf = k.has("vf") ? k.child("vf") : ConfigNode(empty, "experiment.vf");
        vf.restrict_keys({"small", "large", "count", "tolerance"});
        const auto small = vf.numbers("small", {1e-3, 1e-2});
        const auto large = vf.numbers("large", {1e2, 1e3});
        const int count = vf.integer("count", 11);
        const double tol = vf.number("tolerance", 0.05);
        if (small.size() != 2 || large.size() != 2) throw ConfigError(vf.path(), "small and large are [r_min, r_max]");
        const DerivedExponents e = derive_exponents(c.params);
        auto& t = report.table("vf", {"r", "volume"});
        auto slope = [&](const std::vector<double>& range) {
            const auto radii = log_times(range[0], range[1], count);
            std::vector<double> vols;
            for (double r : radii) {
                vols.push_back(vf_volume(spec, r));
                t.rows.push_back({r, vols.back()});
            }
            return fit_loglog(radii, vols).slope;
        };
        report.add(make_check("vf.small_r_slope", slope(small), Relation::within, e.Dp, tol * e.Dp));
        report.add(make_check("vf.large_r_slope", slope(large), Relation::within, e.D, tol * e.D));
    }
    if (wants("hardy")) {
        static const Json empty = Json::object();
        const ConfigNode h = k.has("hardy") ? k.child("hardy") : ConfigNode(empty, "experiment.hardy");
        h.restrict_keys({"n", "gamma", "cells", "pass_fraction", "fail_fraction", "tolerance"});
        const int n = h.integer("n", 3);
        const double gamma = h.number("gamma", 1.0);
        const int cells = h.integer("cells", 12);
        const double tol = h.number("tolerance", 1e-8);
        const HardyReport pass = hardy_check(n, gamma, h.number("pass_fraction", 0.5), cells);
        const HardyReport fail = hardy_check(n, gamma, h.number("fail_fraction", 4.0), cells);
        auto& t = report.table("hardy", {"fraction", "constant", "lambda_min"});
        t.rows.push_back({h.number("pass_fraction", 0.5), pass.constant, pass.lambda_min});
        t.rows.push_back({h.number("fail_fraction", 4.0), fail.constant, fail.lambda_min});
        report.add(make_check("hardy.pass_fraction.lambda_min", pass.lambda_min, Relation::at_least, -tol));
        report.add(make_check("hardy.fail_fraction.lambda_min", fail.lambda_min, Relation::below, 0.0));
    }
    if (wants("operator")) {
        static const Json empty = Json::object();
        const ConfigNode o = k.has("operator") ? k.child("operator") : ConfigNode(empty, "experiment.operator");
        o.restrict_keys({"trials", "dim", "gamma", "root_level", "tolerance"});
        const int trials = o.integer("trials", 1000);
        const int dim = o.integer("dim", 20);
        if (dim < 1 || dim > 50) throw ConfigError(o.path() + ".dim", "must lie in [1, 50]");
        if (trials < 100) throw ConfigError(o.path() + ".trials", "at least 100 trials are required");
        const double tol = o.number("tolerance", 1e-10);
        const OperatorInequalityReport r =
            operator_inequality_checks(trials, dim, o.number("gamma", 0.3), o.integer("root_level", 1), c.seed);
        report.add(make_check("operator.power_ratio", r.worst_power_ratio, Relation::at_least, -tol));
        report.add(make_check("operator.sum_root", r.worst_sum_root, Relation::at_least, -tol));
    }
}

std::string categorise(const std::exception& e)
{
    if (dynamic_cast<const CapacityError*>(&e)) return std::string("capacity error: ") + e.what();
    if (dynamic_cast<const PreconditionError*>(&e)) return std::string("precondition error: ") + e.what();
    if (dynamic_cast<const DataError*>(&e)) return std::string("data error: ") + e.what();
    return std::string("error: ") + e.what();
}

}  // namespace

Report run_experiment(const ExperimentConfig& config)
{
    if (config.workers > 0) set_worker_budget(config.workers);
    Report report;
    report.name = config.name;
    report.kind = config.kind;
    report.config = config.source;
    report.config_hash = config_hash(config.source);
    report.exponents = derive_exponents(config.params);
    const auto start = Clock::now();
    try {
        if (config.kind == "distance") run_distance(config, report);
        else if (config.kind == "volume") run_volume(config, report);
        else if (config.kind == "heat-kernel") run_heat_kernel(config, report);
        else if (config.kind == "conservation") run_conservation(config, report);
        else if (config.kind == "decay") run_decay(config, report);
        else if (config.kind == "separation") run_separation(config, report);
        else if (config.kind == "compare") run_compare(config, report);
        else if (config.kind == "wave") run_wave(config, report);
        else if (config.kind == "nash") run_nash(config, report);
        else throw ConfigError("kind", "unknown experiment kind '" + config.kind + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        report.error = categorise(e);
    }
    report.timings.emplace_back("total", seconds_since(start));
    return report;
}

std::vector<SuiteEntry> read_manifest(const std::filesystem::path& manifest)
{
    const Json doc = read_json(manifest);
    const ConfigNode root(doc, "");
    root.restrict_keys({"name", "experiments"});
    std::vector<SuiteEntry> out;
    if (!root.has("experiments")) return out;
    for (const ConfigNode& e : root.items("experiments")) {
        e.restrict_keys({"config", "label", "criterion", "budget_seconds"});
        SuiteEntry s;
        s.config = manifest.parent_path() / e.text("config");
        s.label = e.text("label", std::filesystem::path(e.text("config")).stem().string());
        s.criterion = e.integer("criterion", 0);
        s.budget_seconds = e.number("budget_seconds", 0.0);
        out.push_back(std::move(s));
    }
    return out;
}

SuiteResult run_suite(const std::filesystem::path& manifest, const Overrides& overrides,
                      const std::filesystem::path& output)
{
    const auto entries = read_manifest(manifest);
    SuiteResult result;
    result.items.resize(entries.size());
    // Configurations are validated up front so a bad entry fails before any work starts.
    std::vector<ExperimentConfig> configs;
    for (const auto& e : entries) {
        try {
            configs.push_back(parse_config(overrides.apply(read_json(e.config))));
        } catch (const ConfigError& err) {
            throw ConfigError(e.config.string() + ": " + err.path(), err.what());
        }
    }
    parallel_for(entries.size(), [&](std::size_t i) {
        auto& item = result.items[i];
        item.entry = entries[i];
        const auto start = Clock::now();
        try {
            item.report = run_experiment(configs[i]);
        } catch (const std::exception& e) {
            item.report.name = configs[i].name;
            item.report.kind = configs[i].kind;
            item.report.config = configs[i].source;
            item.report.config_hash = config_hash(configs[i].source);
            item.report.error = categorise(e);
        }
        item.seconds = seconds_since(start);
    });

    Report& s = result.summary;
    s.name = "suite";
    s.kind = "suite";
    s.config = Json{{"manifest", manifest.string()}, {"experiments", Json::array()}};
    for (const auto& e : entries) s.config["experiments"].push_back(e.config.filename().string());
    s.config_hash = config_hash(s.config);
    auto& table = s.table("summary", {"index", "criterion", "passed", "checks"});
    for (std::size_t i = 0; i < result.items.size(); ++i) {
        const auto& item = result.items[i];
        s.add(make_check(item.entry.label, item.report.passed() ? 1.0 : 0.0, Relation::at_least, 1.0));
        if (item.entry.budget_seconds > 0.0)
            s.add(make_check(item.entry.label + ".seconds", item.seconds, Relation::at_most, item.entry.budget_seconds));
        table.rows.push_back({static_cast<double>(i), static_cast<double>(item.entry.criterion),
                              item.report.passed() ? 1.0 : 0.0, static_cast<double>(item.report.checks.size())});
        s.timings.emplace_back(item.entry.label, item.seconds);
    }
    if (!output.empty()) {
        for (const auto& item : result.items) write_report(item.report, output);
        write_report(s, output);
    }
    return result;
}

}  // namespace grusin
