#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bblab {

/// One measured quantity, optionally with a Monte Carlo standard error.
struct Measurement {
    double value = 0.0;
    std::optional<double> stderr_est;
};

/// One pass/fail gate: `lhs op rhs` with the comparison recorded, so the
/// verdict can be re-derived from the report alone.
struct Gate {
    std::string name;
    double lhs = 0.0;
    std::string op;  // "<=", ">=", "<", ">", "=="
    double rhs = 0.0;
    bool ok = false;
};

/// Machine-readable record of one invariant check. The verdict is the
/// conjunction of the gates; nothing outside the recorded measurements and
/// thresholds feeds into it.
struct CheckReport {
    std::string name;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, Measurement> measured;
    std::vector<Gate> gates;
    std::uint64_t seed = 0;
    double wall_time_ms = 0.0;

    bool pass() const;

    void measure(const std::string& key, double value,
                 std::optional<double> stderr_est = std::nullopt);
    /// Adds a gate and returns its outcome.
    bool gate(const std::string& name, double lhs, const std::string& op, double rhs);

    /// Canonical JSON. Wall time is volatile and excluded by default so
    /// that repeated runs serialize byte-identically.
    nlohmann::json to_json(bool include_wall_time = false) const;
};

/// Renders an aligned human-readable summary table, one line per report.
std::string summary_table(const std::vector<CheckReport>& reports);

}  // namespace bblab
