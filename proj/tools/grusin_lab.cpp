#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "grusin/experiments.hpp"
#include "grusin/parallel.hpp"

namespace {

constexpr int exit_pass = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_usage = 2;
constexpr int exit_runtime = 3;

struct Flags {
    std::string config;
    std::string out;
    int workers = 0;
    std::uint64_t seed = 0;
    bool quiet = false;
    CLI::Option* out_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

std::optional<std::string> env(const char* name)
{
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

// Precedence: configuration file < environment < command-line flag.
grusin::Overrides overrides(const Flags& f)
{
    grusin::Overrides o;
    try {
        if (auto v = env("GRUSIN_LAB_OUT")) o.output = *v;
        if (auto v = env("GRUSIN_LAB_WORKERS")) o.workers = std::stoi(*v);
        if (auto v = env("GRUSIN_LAB_SEED")) o.seed = std::stoull(*v);
    } catch (const std::exception&) {
        throw grusin::ConfigError("environment", "GRUSIN_LAB_WORKERS and GRUSIN_LAB_SEED must be integers");
    }
    if (*f.out_opt) o.output = f.out;
    if (*f.workers_opt) o.workers = f.workers;
    if (*f.seed_opt) o.seed = f.seed;
    if (o.workers && *o.workers < 0) throw grusin::ConfigError("workers", "must be non-negative");
    return o;
}

std::string config_path(const Flags& f)
{
    if (!f.config.empty()) return f.config;
    if (auto v = env("GRUSIN_LAB_CONFIG")) return *v;
    throw grusin::ConfigError("config", "no configuration given (use --config or GRUSIN_LAB_CONFIG)");
}

void print_report(const grusin::Report& r)
{
    for (const auto& c : r.checks) {
        std::printf("%s %s: %s %s %s", c.passed ? "PASS" : "FAIL", c.name.c_str(), grusin::format_number(c.value).c_str(),
                    grusin::to_string(c.relation).c_str(), grusin::format_number(c.target).c_str());
        if (c.relation == grusin::Relation::within || c.relation == grusin::Relation::factor_within)
            std::printf(" (tolerance %s)", grusin::format_number(c.tolerance).c_str());
        std::printf("\n");
    }
    for (const auto& f : r.constants)
        std::printf("constant %s: %s -> %s (%s)\n", f.name.c_str(), grusin::format_number(f.value).c_str(),
                    grusin::format_number(f.refined).c_str(), f.stable ? "stable" : "unstable");
    if (!r.error.empty()) std::printf("ERROR %s\n", r.error.c_str());
    std::printf("%s %s [%s]\n", r.passed() ? "passed" : "failed", r.name.c_str(), r.config_hash.c_str());
}

int run_one(const std::string& kind, const Flags& f)
{
    const grusin::Json doc = overrides(f).apply(grusin::read_json(config_path(f)));
    const grusin::ExperimentConfig c = grusin::parse_config(doc);
    if (c.kind != kind)
        throw grusin::ConfigError("kind", "configuration is for '" + c.kind + "' but the subcommand is '" + kind + "'");
    const grusin::Report r = grusin::run_experiment(c);
    grusin::write_report(r, c.output);
    if (!f.quiet) print_report(r);
    if (!r.error.empty()) return exit_runtime;
    return r.passed() ? exit_pass : exit_check_failed;
}

int run_suite(const Flags& f)
{
    const grusin::Overrides o = overrides(f);
    if (o.workers && *o.workers > 0) grusin::set_worker_budget(*o.workers);
    const std::filesystem::path out = o.output ? *o.output : std::filesystem::path("out");
    const grusin::SuiteResult result = grusin::run_suite(config_path(f), o, out);
    bool runtime_error = false;
    for (const auto& item : result.items) {
        std::printf("%s %s (%.2f s)%s%s\n", item.report.passed() ? "PASS" : "FAIL", item.entry.label.c_str(),
                    item.seconds, item.report.error.empty() ? "" : ": ", item.report.error.c_str());
        runtime_error = runtime_error || !item.report.error.empty();
    }
    if (!f.quiet) print_report(result.summary);
    if (result.passed()) return exit_pass;
    return runtime_error ? exit_runtime : exit_check_failed;
}

int show_report(const std::string& file)
{
    const grusin::Report r = grusin::read_report(file);
    print_report(r);
    return r.passed() ? exit_pass : exit_check_failed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical laboratory for degenerate elliptic operators of Grushin type"};
    app.require_subcommand(1);
    Flags flags;
    std::string report_file;

    auto add_common = [&](CLI::App* sub, const char* config_help) {
        sub->add_option("-c,--config", flags.config, config_help);
        flags.out_opt = sub->add_option("-o,--out", flags.out, "Output directory (env GRUSIN_LAB_OUT)");
        flags.workers_opt = sub->add_option("-w,--workers", flags.workers, "Worker threads (env GRUSIN_LAB_WORKERS)");
        flags.seed_opt = sub->add_option("-s,--seed", flags.seed, "Random seed (env GRUSIN_LAB_SEED)");
        sub->add_flag("-q,--quiet", flags.quiet, "Do not print checks");
    };

    std::vector<std::pair<std::string, CLI::App*>> experiments;
    const std::pair<const char*, const char*> kinds[] = {
        {"distance", "Closed-form versus numerical control distance"},
        {"volume", "Ball volume growth and doubling exponents"},
        {"heat-kernel", "Gaussian bounds or the free-space kernel"},
        {"conservation", "Mass conservation of the heat semigroup"},
        {"decay", "On-diagonal decay of the heat kernel"},
        {"separation", "Separation across the degeneracy set"},
        {"compare", "Kernel comparison with frozen coefficients"},
        {"wave", "Finite speed of propagation and Davies-Gaffney estimates"},
        {"nash", "Multiplier domination, Nash and Hardy inequalities"},
    };
    CLI::App* current = nullptr;
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, "Experiment configuration (env GRUSIN_LAB_CONFIG)");
        experiments.emplace_back(name, sub);
    }
    CLI::App* suite = app.add_subcommand("suite", "Run every experiment listed in a manifest");
    add_common(suite, "Suite manifest (env GRUSIN_LAB_CONFIG)");
    CLI::App* report = app.add_subcommand("report", "Print the checks of a written report");
    report->add_option("file", report_file, "Report JSON file")->required()->check(CLI::ExistingFile);

    // Options bind to the parsed subcommand only; rebind the shared pointers after parsing.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : exit_usage;
    }
    for (const auto& [name, sub] : experiments)
        if (sub->parsed()) current = sub;
    if (suite->parsed()) current = suite;
    if (current != nullptr) {
        flags.out_opt = current->get_option("--out");
        flags.workers_opt = current->get_option("--workers");
        flags.seed_opt = current->get_option("--seed");
    }

    try {
        if (report->parsed()) return show_report(report_file);
        if (suite->parsed()) return run_suite(flags);
        for (const auto& [name, sub] : experiments)
            if (sub->parsed()) return run_one(name, flags);
    } catch (const grusin::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << std::endl;
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return exit_runtime;
    }
    return exit_usage;
}
