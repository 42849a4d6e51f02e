#pragma once

#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "grusin/config.hpp"

namespace grusin {

enum class Relation { within, at_most, at_least, below, above, factor_within };

[[nodiscard]] std::string to_string(Relation relation);

/// One pass/fail comparison together with the tolerance it was judged against.
///
/// within: |value - target| <= tolerance; at_most/at_least/below/above compare value with
/// target; factor_within: max(value/target, target/value) <= tolerance.
struct Check {
    std::string name;
    double value = 0.0;
    Relation relation = Relation::within;
    double target = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

[[nodiscard]] Check make_check(std::string name, double value, Relation relation, double target,
                               double tolerance = 0.0);

/// A fitted constant with its value after one refinement.
struct FittedConstant {
    std::string name;
    double value = 0.0;
    double refined = 0.0;
    double factor = 0.0;  // allowed ratio between the two fits
    bool stable = false;
};

/// Plot-ready numeric table written as CSV.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Report {
    std::string name;
    std::string kind;
    Json config;
    std::string config_hash;
    DerivedExponents exponents;
    std::vector<Check> checks;
    std::vector<FittedConstant> constants;
    std::deque<Table> tables;  // deque keeps references returned by table() valid
    std::vector<std::pair<std::string, double>> timings;  // seconds
    std::string error;                                    // set when the experiment could not run

    [[nodiscard]] bool passed() const;
    [[nodiscard]] Json to_json() const;
    Check& add(Check check);
    Table& table(std::string name, std::vector<std::string> columns);
};

/// Decimal text with 17 significant digits ("nan", "inf", "-inf" for non-finite values).
[[nodiscard]] std::string format_number(double x);

/// CSV with a "# config_hash: <hash>" header line, '.' decimals and '\n' line endings.
[[nodiscard]] std::string to_csv(const Table& table, const std::string& hash);

/// Writes <dir>/<name>.json and one <dir>/<name>.<table>.csv per table; returns the files written.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir);

/// Reads a report written by write_report (tables are not restored).
[[nodiscard]] Report read_report(const std::filesystem::path& file);

}  // namespace grusin
