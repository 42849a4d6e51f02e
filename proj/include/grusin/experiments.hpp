#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grusin/config.hpp"
#include "grusin/report.hpp"

namespace grusin {

/// Command-line or environment values that replace configuration fields.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output;
    std::optional<int> workers;

    /// Returns a copy of `document` with the overridden fields set.
    [[nodiscard]] Json apply(Json document) const;
};

/// Runs one experiment. Configuration errors in experiment knobs throw ConfigError; failures
/// inside the numerics are recorded in Report::error with a category prefix.
[[nodiscard]] Report run_experiment(const ExperimentConfig& config);

struct SuiteEntry {
    std::string label;
    int criterion = 0;               // 0 when the entry is not tied to a numbered criterion
    double budget_seconds = 0.0;     // 0 disables the wall-clock check
    std::filesystem::path config;
};

struct SuiteItem {
    SuiteEntry entry;
    Report report;
    double seconds = 0.0;
};

struct SuiteResult {
    std::vector<SuiteItem> items;
    Report summary;  // one check per entry

    [[nodiscard]] bool passed() const { return summary.passed(); }
};

/// Manifest: {"name": ..., "experiments": [{"config": path, "label": ..., "criterion": k,
/// "budget_seconds": s}, ...]} with paths relative to the manifest file.
[[nodiscard]] std::vector<SuiteEntry> read_manifest(const std::filesystem::path& manifest);

/// Runs all entries concurrently under the global worker budget; writes each report and the
/// summary into `output` when it is non-empty.
[[nodiscard]] SuiteResult run_suite(const std::filesystem::path& manifest, const Overrides& overrides,
                                    const std::filesystem::path& output);

}  // namespace grusin
