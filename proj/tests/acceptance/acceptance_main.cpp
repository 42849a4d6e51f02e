// Runs the acceptance manifest one experiment at a time and prints one line per criterion.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "grusin/experiments.hpp"

namespace {

const std::map<int, const char*> kTitles = {
    {1, "mass conservation"},
    {2, "on-diagonal decay, Grushin and Euclidean"},
    {3, "one-dimensional half-line decay"},
    {4, "distance equivalence band"},
    {5, "ball-volume regimes"},
    {6, "volume doubling exponent"},
    {7, "separation dichotomy"},
    {8, "Gaussian upper and on-diagonal lower bounds"},
    {9, "Davies-Gaffney estimate"},
    {10, "finite speed of propagation"},
    {11, "kernel comparison"},
    {12, "Nash and multiplier domination"},
    {13, "Hardy and operator inequalities"},
    {14, "free-space Gauss kernel"},
};

constexpr double kSuiteBudgetSeconds = 1800.0;

struct Outcome {
    bool passed = true;
    double seconds = 0.0;
    double budget = 0.0;
    std::vector<std::string> failures;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::filesystem::path source = GRUSIN_SOURCE_DIR;
    const std::filesystem::path manifest = argc > 1 ? argv[1] : source / "configs/acceptance/manifest.json";
    const std::filesystem::path output = argc > 2 ? argv[2] : std::filesystem::path("acceptance_out");

    std::vector<grusin::SuiteEntry> entries;
    try {
        entries = grusin::read_manifest(manifest);
    } catch (const std::exception& e) {
        std::printf("cannot read manifest: %s\n", e.what());
        return 2;
    }

    grusin::Overrides overrides;
    overrides.output = output;
    std::map<int, Outcome> outcomes;
    double total = 0.0;
    for (const auto& entry : entries) {
        Outcome& o = outcomes[entry.criterion];
        o.budget += entry.budget_seconds;
        const auto start = std::chrono::steady_clock::now();
        try {
            const grusin::ExperimentConfig config = grusin::parse_config(overrides.apply(grusin::read_json(entry.config)));
            const grusin::Report report = grusin::run_experiment(config);
            grusin::write_report(report, output);
            if (!report.error.empty()) o.failures.push_back(entry.label + ": " + report.error);
            for (const auto& c : report.checks)
                if (!c.passed)
                    o.failures.push_back(entry.label + "/" + c.name + " = " + grusin::format_number(c.value) + " " +
                                         grusin::to_string(c.relation) + " " + grusin::format_number(c.target));
            o.passed = o.passed && report.passed();
        } catch (const std::exception& e) {
            o.passed = false;
            o.failures.push_back(entry.label + ": " + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.seconds += seconds;
        total += seconds;
        std::printf("  ran %-24s %8.2f s\n", entry.label.c_str(), seconds);
        std::fflush(stdout);
    }

    bool all = true;
    for (const auto& [criterion, title] : kTitles) {
        auto it = outcomes.find(criterion);
        if (it == outcomes.end()) {
            std::printf("criterion %2d %-45s FAIL (no experiment in manifest)\n", criterion, title);
            all = false;
            continue;
        }
        Outcome& o = it->second;
        if (o.budget > 0.0 && o.seconds > o.budget) {
            o.passed = false;
            o.failures.push_back("wall clock " + grusin::format_number(o.seconds) + " s exceeds " +
                                 grusin::format_number(o.budget) + " s");
        }
        std::printf("criterion %2d %-45s %s (%.1f s of %.0f s)\n", criterion, title, o.passed ? "PASS" : "FAIL",
                    o.seconds, o.budget);
        for (const auto& f : o.failures) std::printf("    %s\n", f.c_str());
        all = all && o.passed;
    }
    const bool in_budget = total <= kSuiteBudgetSeconds;
    std::printf("suite wall clock %.1f s (budget %.0f s) %s\n", total, kSuiteBudgetSeconds, in_budget ? "PASS" : "FAIL");
    all = all && in_budget;
    std::printf("acceptance %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 1;
}
