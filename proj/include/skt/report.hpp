#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace skt {

using ordered_json = nlohmann::ordered_json;

/// One named inequality `lhs <= rhs * (1 + tol)` together with the constants
/// that were fitted to make it hold. `passes` is always derived from the
/// numbers, never set independently.
struct ReportEntry
{
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double tol = 0.0;
    std::vector<std::pair<std::string, double>> constants;
    bool passes = false;
    double margin = 0.0;

    static ReportEntry make(std::string name, double lhs, double rhs, double tol = 0.0,
                            std::vector<std::pair<std::string, double>> constants = {})
    {
        ReportEntry e;
        e.name = std::move(name);
        e.lhs = lhs;
        e.rhs = rhs;
        e.tol = tol;
        e.constants = std::move(constants);
        const double bound = rhs * (1.0 + tol);
        e.margin = bound - lhs;
        e.passes = std::isfinite(lhs) && !std::isnan(bound) && lhs <= bound;
        return e;
    }

    /// An entry for a boolean property; encoded as `lhs = 0 <= rhs = 0` or
    /// `lhs = 1 > rhs = 0`.
    static ReportEntry flag(std::string name, bool ok,
                            std::vector<std::pair<std::string, double>> constants = {})
    {
        return make(std::move(name), ok ? 0.0 : 1.0, 0.0, 0.0, std::move(constants));
    }

    double constant(const std::string& key) const
    {
        for (const auto& [k, v] : constants)
            if (k == key) return v;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

inline bool all_pass(const std::vector<ReportEntry>& entries)
{
    for (const auto& e : entries)
        if (!e.passes) return false;
    return true;
}

struct ReportMetadata
{
    std::string grid;
    double dt = 0.0;
    std::string model_hash;
    std::vector<int> levels;
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct VerificationReport
{
    std::vector<ReportEntry> entries;
    ReportMetadata metadata;

    void add(ReportEntry e) { entries.push_back(std::move(e)); }
    void add(const std::vector<ReportEntry>& es)
    {
        entries.insert(entries.end(), es.begin(), es.end());
    }
    bool passes() const { return all_pass(entries); }
};

inline ordered_json finite_or_null(double v)
{
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

inline ordered_json to_json(const ReportEntry& e)
{
    ordered_json j;
    j["check_name"] = e.name;
    j["lhs"] = finite_or_null(e.lhs);
    j["rhs"] = finite_or_null(e.rhs);
    j["tol"] = e.tol;
    ordered_json c = ordered_json::object();
    for (const auto& [k, v] : e.constants) c[k] = finite_or_null(v);
    j["constant"] = c;
    j["passes"] = e.passes;
    j["margin"] = finite_or_null(e.margin);
    return j;
}

inline ordered_json to_json(const VerificationReport& r)
{
    ordered_json j;
    ordered_json meta;
    meta["grid"] = r.metadata.grid;
    meta["dt"] = r.metadata.dt;
    meta["model_hash"] = r.metadata.model_hash;
    meta["levels"] = r.metadata.levels;
    meta["seed"] = r.metadata.seed;
    meta["config_hash"] = r.metadata.config_hash;
    j["metadata"] = meta;
    ordered_json entries = ordered_json::array();
    for (const auto& e : r.entries) entries.push_back(to_json(e));
    j["entries"] = entries;
    j["passes"] = r.passes();
    return j;
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// Short form for labels: 0.1 rather than 0.10000000000000001.
inline std::string format_label(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

/// CSV with columns check_name,lhs,rhs,tol,passes,margin,constants where
/// constants is a `;`-separated list of key=value pairs.
inline std::string to_csv(const VerificationReport& r)
{
    std::ostringstream os;
    os << "# config_hash=" << r.metadata.config_hash << "\n";
    os << "check_name,lhs,rhs,tol,passes,margin,constants\n";
    for (const auto& e : r.entries) {
        os << e.name << ',' << format_double(e.lhs) << ',' << format_double(e.rhs) << ','
           << format_double(e.tol) << ',' << (e.passes ? 1 : 0) << ','
           << format_double(e.margin) << ',';
        for (std::size_t i = 0; i < e.constants.size(); ++i) {
            if (i) os << ';';
            os << e.constants[i].first << '=' << format_double(e.constants[i].second);
        }
        os << '\n';
    }
    return os.str();
}

} // namespace skt
