#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grusin/experiments.hpp"

using namespace grusin;

namespace {

const char* kConservation = R"({
  "kind": "conservation",
  "name": "cons",
  "params": {"n": 1, "m": 0, "delta1": 0.5, "delta1p": 0.5},
  "grid": {"extent": 8, "nodes": 257},
  "method": {"kind": "exact_eigendecomposition"},
  "seed": 3,
  "experiment": {"times": [0.1, 1, 10], "sources": 5, "tolerance": 1e-8}
})";

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("grusin_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string error_path(const Json& doc)
{
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "";
}

}  // namespace

TEST_CASE("configuration parsing")
{
    const ExperimentConfig c = parse_config(Json::parse(kConservation));
    CHECK(c.kind == "conservation");
    CHECK(c.params.delta1 == 0.5);
    CHECK(c.grid.nodes == std::vector<int>{257});
    CHECK(c.grid.build(1).spacing(0) == 1.0 / 16);
    CHECK(c.method.kind == MethodKind::exact_eigendecomposition);
    CHECK(c.seed == 3);
    CHECK(c.output == "out");
}

TEST_CASE("invalid configurations name the offending field")
{
    Json doc = Json::parse(kConservation);
    doc["params"]["delta1"] = 1.2;
    try {
        (void)parse_config(doc);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "params.delta1");
        CHECK(std::string(e.what()).find("[0,1)") != std::string::npos);
    }
    doc = Json::parse(kConservation);
    doc["grid"]["nodes"] = 256;
    CHECK(error_path(doc).rfind("grid", 0) == 0);
    doc = Json::parse(kConservation);
    doc["colour"] = "blue";
    CHECK(error_path(doc) == "colour");
    doc = Json::parse(kConservation);
    doc["kind"] = "spectrum";
    CHECK(error_path(doc) == "kind");
    doc = Json::parse(kConservation);
    doc["seed"] = -4;
    CHECK(error_path(doc) == "seed");
    doc = Json::parse(kConservation);
    doc["method"]["kind"] = "magic";
    CHECK(error_path(doc) == "method.kind");
}

TEST_CASE("unknown experiment knobs are rejected when the experiment runs")
{
    Json doc = Json::parse(kConservation);
    doc["experiment"]["sourcez"] = 3;
    CHECK_THROWS_AS((void)run_experiment(parse_config(doc)), ConfigError);
}

TEST_CASE("overrides replace configuration fields")
{
    Overrides o;
    o.seed = 99;
    o.workers = 2;
    o.output = "elsewhere";
    const ExperimentConfig c = parse_config(o.apply(Json::parse(kConservation)));
    CHECK(c.seed == 99);
    CHECK(c.workers == 2);
    CHECK(c.output == "elsewhere");
}

TEST_CASE("configuration hash")
{
    const Json a = Json::parse(kConservation);
    Json b = a;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b["seed"] = 4;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("checks cite their tolerance")
{
    CHECK(make_check("x", 1.05, Relation::within, 1.0, 0.1).passed);
    CHECK(!make_check("x", 1.2, Relation::within, 1.0, 0.1).passed);
    CHECK(make_check("x", 1.2, Relation::factor_within, 1.0, 1.25).passed);
    CHECK(!make_check("x", 0.7, Relation::factor_within, 1.0, 1.25).passed);
    CHECK(!make_check("x", std::nan(""), Relation::below, 1.0).passed);
    CHECK(make_check("x", 1.0, Relation::at_most, 1.0).passed);
    CHECK(!make_check("x", 1.0, Relation::below, 1.0).passed);
}

TEST_CASE("CSV formatting")
{
    Table t{"t", {"a", "b"}, {{0.1, 1.0 / 3.0}, {std::nan(""), -2.5}}};
    CHECK(to_csv(t, "0123456789abcdef") ==
          "# config_hash: 0123456789abcdef\na,b\n0.10000000000000001,0.33333333333333331\nnan,-2.5\n");
}

TEST_CASE("conservation experiment on a one-dimensional configuration")
{
    const Report r = run_experiment(parse_config(Json::parse(kConservation)));
    CHECK(r.error.empty());
    CHECK(r.passed());
    CHECK(r.config_hash == config_hash(Json::parse(kConservation)));
    CHECK(r.to_json()["exponents"]["D"].get<double>() == doctest::Approx(2));
}

TEST_CASE("reports are byte reproducible")
{
    const auto dir = scratch("determinism");
    const ExperimentConfig c = parse_config(Json::parse(kConservation));
    write_report(run_experiment(c), dir / "a");
    write_report(run_experiment(c), dir / "b");
    const std::string first = slurp(dir / "a" / "cons.deviation.csv");
    CHECK(!first.empty());
    CHECK(first == slurp(dir / "b" / "cons.deviation.csv"));
    CHECK(first.rfind("# config_hash: " + config_hash(c.source), 0) == 0);
    const Report back = read_report(dir / "a" / "cons.json");
    CHECK(back.passed());
    CHECK(back.checks.size() == 1);
}

TEST_CASE("numerical failures are reported, not thrown")
{
    Json doc = Json::parse(kConservation);
    doc["method"]["max_dimension"] = 10;
    const Report r = run_experiment(parse_config(doc));
    CHECK(!r.passed());
    CHECK(r.error.rfind("capacity error:", 0) == 0);
}

TEST_CASE("empty suite passes")
{
    const auto dir = scratch("empty_suite");
    write(dir / "manifest.json", R"({"name": "empty", "experiments": []})");
    const SuiteResult r = run_suite(dir / "manifest.json", {}, dir / "out");
    CHECK(r.items.empty());
    CHECK(r.passed());
}

TEST_CASE("suite lists the failing check")
{
    const auto dir = scratch("failing_suite");
    Json good = Json::parse(kConservation);
    Json bad = good;
    bad["name"] = "strict";
    bad["method"] = Json{{"kind", "crank_nicolson"}, {"tolerance", 1e-3}};
    bad["experiment"]["tolerance"] = 1e-16;
    write(dir / "good.json", good.dump());
    write(dir / "bad.json", bad.dump());
    write(dir / "manifest.json", R"({"experiments": [{"config": "good.json", "criterion": 1},
                                                     {"config": "bad.json", "label": "strict"}]})");
    const SuiteResult r = run_suite(dir / "manifest.json", {}, dir / "out");
    REQUIRE(r.items.size() == 2);
    CHECK(!r.passed());
    CHECK(r.items[0].report.passed());
    CHECK(!r.items[1].report.passed());
    int failing = 0;
    for (const auto& c : r.summary.checks)
        if (!c.passed) {
            ++failing;
            CHECK(c.name == "strict");
        }
    CHECK(failing == 1);
    CHECK(std::filesystem::exists(dir / "out" / "suite.json"));
}
