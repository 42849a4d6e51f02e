#include "grusin/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace grusin {

ConfigError::ConfigError(const std::string& path, const std::string& message)
    : std::invalid_argument(path + ": " + message), path_(path)
{
}

ConfigNode::ConfigNode(const Json& value, std::string path) : value_(&value), path_(std::move(path))
{
    if (!value.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

std::string ConfigNode::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool ConfigNode::has(const std::string& key) const { return value_->contains(key) && !(*value_)[key].is_null(); }

const Json& ConfigNode::at(const std::string& key) const
{
    if (!has(key)) throw ConfigError(field(key), "required field is missing");
    return (*value_)[key];
}

ConfigNode ConfigNode::child(const std::string& key) const { return ConfigNode(at(key), field(key)); }

std::optional<ConfigNode> ConfigNode::optional_child(const std::string& key) const
{
    if (!has(key)) return std::nullopt;
    return child(key);
}

std::vector<ConfigNode> ConfigNode::items(const std::string& key) const
{
    const Json& a = at(key);
    if (!a.is_array()) throw ConfigError(field(key), "expected an array of objects");
    std::vector<ConfigNode> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a[i], field(key) + "[" + std::to_string(i) + "]");
    return out;
}

double ConfigNode::number(const std::string& key) const
{
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "expected a finite number");
    return x;
}

double ConfigNode::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

int ConfigNode::integer(const std::string& key) const
{
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw ConfigError(field(key), "integer out of range");
    return static_cast<int>(x);
}

int ConfigNode::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

bool ConfigNode::boolean(const std::string& key, bool fallback) const
{
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
}

std::string ConfigNode::text(const std::string& key) const
{
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
}

std::string ConfigNode::text(const std::string& key, const std::string& fallback) const
{
    return has(key) ? text(key) : fallback;
}

std::vector<double> ConfigNode::numbers(const std::string& key) const
{
    const Json& v = at(key);
    if (v.is_number()) return {number(key)};
    if (!v.is_array()) throw ConfigError(field(key), "expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<double> ConfigNode::numbers(const std::string& key, std::vector<double> fallback) const
{
    return has(key) ? numbers(key) : fallback;
}

std::vector<int> ConfigNode::integers(const std::string& key) const
{
    const Json& v = at(key);
    if (v.is_number_integer()) return {integer(key)};
    if (!v.is_array()) throw ConfigError(field(key), "expected an integer or an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer())
            throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected an integer");
        out.push_back(v[i].get<int>());
    }
    return out;
}

void ConfigNode::restrict_keys(const std::vector<std::string>& allowed) const
{
    for (const auto& item : value_->items())
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError(field(item.key()), "unknown field");
}

Grid GridSpec::build(int n) const { return Grid(n, nodes, extent); }

GridSpec parse_grid(const ConfigNode& node, int dimension)
{
    node.restrict_keys({"extent", "nodes"});
    GridSpec g;
    g.extent = node.numbers("extent");
    g.nodes = node.integers("nodes");
    if (g.extent.size() == 1) g.extent.assign(dimension, g.extent.front());
    if (g.nodes.size() == 1) g.nodes.assign(dimension, g.nodes.front());
    if (static_cast<int>(g.extent.size()) != dimension)
        throw ConfigError(node.path() + ".extent", "expected " + std::to_string(dimension) + " values");
    if (static_cast<int>(g.nodes.size()) != dimension)
        throw ConfigError(node.path() + ".nodes", "expected " + std::to_string(dimension) + " values");
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        if (g.nodes[k] < 3 || g.nodes[k] % 2 == 0)
            throw ConfigError(node.path() + ".nodes[" + std::to_string(k) + "]", "node count must be odd and >= 3");
        if (!(g.extent[k] > 0.0))
            throw ConfigError(node.path() + ".extent[" + std::to_string(k) + "]", "extent must be positive");
    }
    return g;
}

namespace {

void validate_at(const GrusinParameters& p, const std::string& path)
{
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        // Messages read "params.<field>: <reason>".
        const std::string msg = e.what();
        const auto colon = msg.find(": ");
        std::string fieldname = msg.substr(0, colon);
        if (fieldname.rfind("params.", 0) == 0) fieldname = fieldname.substr(7);
        throw ConfigError(path + "." + fieldname, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

}  // namespace

GrusinParameters override_params(const GrusinParameters& base, const ConfigNode& node)
{
    node.restrict_keys({"n", "m", "delta1", "delta1p", "delta2", "delta2p"});
    GrusinParameters p = base;
    p.n = node.integer("n", p.n);
    p.m = node.integer("m", p.m);
    p.delta1 = node.number("delta1", p.delta1);
    p.delta1p = node.number("delta1p", p.delta1p);
    p.delta2 = node.number("delta2", p.delta2);
    p.delta2p = node.number("delta2p", p.delta2p);
    validate_at(p, node.path());
    return p;
}

GrusinParameters parse_params(const ConfigNode& node) { return override_params(GrusinParameters{}, node); }

EvolutionMethod parse_method(const ConfigNode& node)
{
    node.restrict_keys({"kind", "tolerance", "max_dimension", "krylov_dimension", "shift_invert"});
    EvolutionMethod m;
    if (node.has("kind")) {
        try {
            m.kind = method_from_string(node.text("kind"));
        } catch (const std::invalid_argument&) {
            throw ConfigError(node.path() + ".kind",
                              "expected exact_eigendecomposition, krylov_exponential or crank_nicolson");
        }
    }
    m.tolerance = node.number("tolerance", m.tolerance);
    if (!(m.tolerance > 0.0 && m.tolerance < 1.0)) throw ConfigError(node.path() + ".tolerance", "must lie in (0,1)");
    const int guard = node.integer("max_dimension", static_cast<int>(m.max_dimension));
    if (guard < 1) throw ConfigError(node.path() + ".max_dimension", "must be positive");
    m.max_dimension = static_cast<std::size_t>(guard);
    m.krylov_dimension = node.integer("krylov_dimension", m.krylov_dimension);
    if (m.krylov_dimension < 2) throw ConfigError(node.path() + ".krylov_dimension", "must be >= 2");
    m.shift_invert = node.boolean("shift_invert", m.shift_invert);
    return m;
}

Point parse_point(const ConfigNode& node, const std::string& key, const GrusinParameters& params)
{
    const auto c = node.numbers(key);
    if (static_cast<int>(c.size()) != params.dimension())
        throw ConfigError(node.path() + "." + key, "expected " + std::to_string(params.dimension()) + " coordinates");
    return Point::from_flat(c, params.n);
}

std::vector<Point> parse_points(const ConfigNode& node, const std::string& key, const GrusinParameters& params)
{
    const Json& a = node.json().contains(key) ? node.json()[key] : Json();
    const std::string path = node.path() + "." + key;
    if (!a.is_array()) throw ConfigError(path, "expected an array of coordinate arrays");
    std::vector<Point> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!a[i].is_array() || static_cast<int>(a[i].size()) != params.dimension())
            throw ConfigError(p, "expected " + std::to_string(params.dimension()) + " coordinates");
        std::vector<double> c;
        for (const auto& v : a[i]) {
            if (!v.is_number()) throw ConfigError(p, "expected numbers");
            c.push_back(v.get<double>());
        }
        out.push_back(Point::from_flat(c, params.n));
    }
    return out;
}

Json to_json(const GrusinParameters& p)
{
    return Json{{"n", p.n},           {"m", p.m},           {"delta1", p.delta1},
                {"delta1p", p.delta1p}, {"delta2", p.delta2}, {"delta2p", p.delta2p}};
}

Json to_json(const DerivedExponents& e)
{
    return Json{{"D", e.D},         {"Dp", e.Dp},         {"beta", e.beta},     {"betap", e.betap},
                {"rho", e.rho},     {"rhop", e.rhop},     {"gamma", e.gamma},   {"gammap", e.gammap},
                {"sigma", e.sigma}, {"sigmap", e.sigmap}, {"alpha", e.alpha},   {"alphap", e.alphap},
                {"doubling_dim", e.doubling_dim()}};
}

Json to_json(const EvolutionMethod& m)
{
    return Json{{"kind", to_string(m.kind)},
                {"tolerance", m.tolerance},
                {"max_dimension", m.max_dimension},
                {"krylov_dimension", m.krylov_dimension},
                {"shift_invert", m.shift_invert}};
}

const std::vector<std::string>& experiment_kinds()
{
    static const std::vector<std::string> kinds{"distance",   "volume",  "heat-kernel", "conservation", "decay",
                                                "separation", "compare", "wave",        "nash"};
    return kinds;
}

ExperimentConfig parse_config(const Json& document)
{
    const ConfigNode root(document, "");
    root.restrict_keys({"kind", "name", "params", "grid", "method", "seed", "output", "workers", "experiment"});
    ExperimentConfig c;
    c.kind = root.text("kind");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
        throw ConfigError("kind", "unknown experiment kind '" + c.kind + "'");
    c.name = root.text("name", c.kind);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
        throw ConfigError("name", "must be a non-empty file-name-safe string");
    c.params = root.has("params") ? parse_params(root.child("params")) : GrusinParameters{};
    if (root.has("grid")) c.grid = parse_grid(root.child("grid"), c.params.dimension());
    if (root.has("method")) c.method = parse_method(root.child("method"));
    if (root.has("seed")) {
        const Json& s = document["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative 64-bit integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.output = root.text("output", "out");
    c.workers = root.integer("workers", 0);
    if (c.workers < 0) throw ConfigError("workers", "must be non-negative");
    if (root.has("experiment")) {
        c.knobs = document["experiment"];
        if (!c.knobs.is_object()) throw ConfigError("experiment", "expected an object");
    }
    c.source = document;
    return c;
}

Json read_json(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), "cannot open file");
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(file.string(), std::string("malformed JSON: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& file) { return parse_config(read_json(file)); }

std::string config_hash(const Json& document)
{
    const std::string text = document.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace grusin
