#include "grusin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace grusin {

std::string to_string(Relation relation)
{
    switch (relation) {
    case Relation::within: return "within";
    case Relation::at_most: return "<=";
    case Relation::at_least: return ">=";
    case Relation::below: return "<";
    case Relation::above: return ">";
    case Relation::factor_within: return "factor_within";
    }
    return "unknown";
}

namespace {

Relation relation_from_string(const std::string& s)
{
    for (Relation r : {Relation::within, Relation::at_most, Relation::at_least, Relation::below, Relation::above,
                       Relation::factor_within})
        if (to_string(r) == s) return r;
    throw std::invalid_argument("report: unknown relation '" + s + "'");
}

Json number_json(double x)
{
    if (std::isfinite(x)) return x;
    return format_number(x);
}

double json_number(const Json& j)
{
    if (j.is_number()) return j.get<double>();
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

Check make_check(std::string name, double value, Relation relation, double target, double tolerance)
{
    Check c{std::move(name), value, relation, target, tolerance, false};
    switch (relation) {
    case Relation::within: c.passed = std::abs(value - target) <= tolerance; break;
    case Relation::at_most: c.passed = value <= target; break;
    case Relation::at_least: c.passed = value >= target; break;
    case Relation::below: c.passed = value < target; break;
    case Relation::above: c.passed = value > target; break;
    case Relation::factor_within:
        c.passed = value > 0.0 && target > 0.0 && std::max(value / target, target / value) <= tolerance;
        break;
    }
    return c;
}

bool Report::passed() const
{
    if (!error.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Check& Report::add(Check check)
{
    checks.push_back(std::move(check));
    return checks.back();
}

Table& Report::table(std::string table_name, std::vector<std::string> columns)
{
    tables.push_back(Table{std::move(table_name), std::move(columns), {}});
    return tables.back();
}

Json Report::to_json() const
{
    Json j;
    j["name"] = name;
    j["kind"] = kind;
    j["config"] = config;
    j["config_hash"] = config_hash;
    j["exponents"] = grusin::to_json(exponents);
    j["passed"] = passed();
    if (!error.empty()) j["error"] = error;
    j["checks"] = Json::array();
    for (const auto& c : checks)
        j["checks"].push_back(Json{{"name", c.name},
                                   {"value", number_json(c.value)},
                                   {"relation", to_string(c.relation)},
                                   {"target", number_json(c.target)},
                                   {"tolerance", number_json(c.tolerance)},
                                   {"passed", c.passed}});
    j["fitted_constants"] = Json::array();
    for (const auto& f : constants)
        j["fitted_constants"].push_back(Json{{"name", f.name},
                                             {"value", number_json(f.value)},
                                             {"refined", number_json(f.refined)},
                                             {"factor", f.factor},
                                             {"stable", f.stable}});
    j["tables"] = Json::array();
    for (const auto& t : tables) j["tables"].push_back(Json{{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
    j["timings"] = Json::object();
    for (const auto& [k, v] : timings) j["timings"][k] = v;
    return j;
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string to_csv(const Table& table, const std::string& hash)
{
    std::string out = "# config_hash: " + hash + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += format_number(row[i]);
        }
        out += "\n";
    }
    return out;
}

std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto json_path = dir / (report.name + ".json");
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + json_path.string());
        out << report.to_json().dump(2) << '\n';
    }
    written.push_back(json_path);
    for (const auto& t : report.tables) {
        const auto path = dir / (report.name + "." + t.name + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << to_csv(t, report.config_hash);
        written.push_back(path);
    }
    return written;
}

Report read_report(const std::filesystem::path& file)
{
    const Json j = read_json(file);
    Report r;
    try {
        r.name = j.at("name").get<std::string>();
        r.kind = j.at("kind").get<std::string>();
        r.config = j.at("config");
        r.config_hash = j.at("config_hash").get<std::string>();
        if (j.contains("error")) r.error = j["error"].get<std::string>();
        for (const auto& c : j.at("checks"))
            r.checks.push_back(Check{c.at("name").get<std::string>(), json_number(c.at("value")),
                                     relation_from_string(c.at("relation").get<std::string>()),
                                     json_number(c.at("target")), json_number(c.at("tolerance")),
                                     c.at("passed").get<bool>()});
        for (const auto& f : j.at("fitted_constants"))
            r.constants.push_back(FittedConstant{f.at("name").get<std::string>(), json_number(f.at("value")),
                                                 json_number(f.at("refined")), f.at("factor").get<double>(),
                                                 f.at("stable").get<bool>()});
        for (const auto& [k, v] : j.at("timings").items()) r.timings.emplace_back(k, v.get<double>());
    } catch (const Json::exception& e) {
        throw ConfigError(file.string(), std::string("not a report: ") + e.what());
    }
    return r;
}

}  // namespace grusin
