#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grusin/coefficients.hpp"
#include "grusin/grid.hpp"
#include "grusin/semigroup.hpp"

namespace grusin {

using Json = nlohmann::json;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& path, const std::string& message);
    [[nodiscard]] const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Typed, path-aware view of one JSON object in a configuration.
class ConfigNode {
public:
    ConfigNode(const Json& value, std::string path);

    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] const Json& json() const { return *value_; }
    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] ConfigNode child(const std::string& key) const;
    [[nodiscard]] std::optional<ConfigNode> optional_child(const std::string& key) const;
    [[nodiscard]] std::vector<ConfigNode> items(const std::string& key) const;

    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key, double fallback) const;
    [[nodiscard]] int integer(const std::string& key) const;
    [[nodiscard]] int integer(const std::string& key, int fallback) const;
    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const;
    [[nodiscard]] std::string text(const std::string& key) const;
    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& key) const;
    [[nodiscard]] std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
    [[nodiscard]] std::vector<int> integers(const std::string& key) const;

    /// Fails on keys outside `allowed`, so typos do not pass silently.
    void restrict_keys(const std::vector<std::string>& allowed) const;

private:
    [[nodiscard]] const Json& at(const std::string& key) const;
    [[nodiscard]] std::string field(const std::string& key) const;

    const Json* value_;
    std::string path_;
};

struct GridSpec {
    std::vector<double> extent;  // half-width L per axis
    std::vector<int> nodes;      // odd node count per axis

    [[nodiscard]] Grid build(int n) const;
};

/// Parses {"extent": L or [L...], "nodes": N or [N...]} for a grid of the given dimension.
[[nodiscard]] GridSpec parse_grid(const ConfigNode& node, int dimension);
[[nodiscard]] GrusinParameters parse_params(const ConfigNode& node);
/// Copy of `base` with the fields present in `node` replaced.
[[nodiscard]] GrusinParameters override_params(const GrusinParameters& base, const ConfigNode& node);
[[nodiscard]] EvolutionMethod parse_method(const ConfigNode& node);
[[nodiscard]] Point parse_point(const ConfigNode& node, const std::string& key, const GrusinParameters& params);
[[nodiscard]] std::vector<Point> parse_points(const ConfigNode& node, const std::string& key,
                                              const GrusinParameters& params);

[[nodiscard]] Json to_json(const GrusinParameters& params);
[[nodiscard]] Json to_json(const DerivedExponents& exponents);
[[nodiscard]] Json to_json(const EvolutionMethod& method);

/// One experiment: shared fields plus kind-specific knobs under "experiment".
struct ExperimentConfig {
    std::string kind;
    std::string name;
    GrusinParameters params;
    GridSpec grid;
    EvolutionMethod method;
    std::uint64_t seed = 1;
    std::filesystem::path output = "out";
    int workers = 0;  // 0 keeps the current budget
    Json knobs = Json::object();
    Json source;      // the configuration as read, after overrides

    [[nodiscard]] ConfigNode experiment() const { return ConfigNode(knobs, "experiment"); }
};

[[nodiscard]] const std::vector<std::string>& experiment_kinds();

/// Validates and converts a parsed document. Throws ConfigError naming the field path.
[[nodiscard]] ExperimentConfig parse_config(const Json& document);
/// Reads a JSON file; parse errors are reported as ConfigError.
[[nodiscard]] Json read_json(const std::filesystem::path& file);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& file);

/// FNV-1a hash (16 hex digits) of the canonical serialisation of a document.
[[nodiscard]] std::string config_hash(const Json& document);

}  // namespace grusin
