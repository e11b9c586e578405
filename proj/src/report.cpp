#include "bblab/report.hpp"

#include <sstream>
#include <stdexcept>

namespace bblab {

bool CheckReport::pass() const {
    for (const auto& g : gates)
        if (!g.ok) return false;
    return true;
}

void CheckReport::measure(const std::string& key, double value,
                          std::optional<double> stderr_est) {
    measured[key] = Measurement{value, stderr_est};
}

bool CheckReport::gate(const std::string& gname, double lhs, const std::string& op, double rhs) {
    bool ok = false;
    if (op == "<=")
        ok = lhs <= rhs;
    else if (op == ">=")
        ok = lhs >= rhs;
    else if (op == "<")
        ok = lhs < rhs;
    else if (op == ">")
        ok = lhs > rhs;
    else if (op == "==")
        ok = lhs == rhs;
    else
        throw std::invalid_argument("unknown gate operator: " + op);
    gates.push_back(Gate{gname, lhs, op, rhs, ok});
    return ok;
}

nlohmann::json CheckReport::to_json(bool include_wall_time) const {
    nlohmann::json j;
    j["check"] = name;
    j["config"] = config;
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : measured) {
        nlohmann::json e;
        e["value"] = v.value;
        if (v.stderr_est) e["stderr"] = *v.stderr_est;
        m[k] = e;
    }
    j["measured"] = m;
    nlohmann::json gs = nlohmann::json::array();
    nlohmann::json thresholds = nlohmann::json::object();
    for (const auto& g : gates) {
        gs.push_back({{"name", g.name}, {"lhs", g.lhs}, {"op", g.op}, {"rhs", g.rhs}, {"ok", g.ok}});
        thresholds[g.name] = g.rhs;
    }
    j["gates"] = gs;
    j["thresholds"] = thresholds;
    j["verdict"] = pass() ? "pass" : "fail";
    j["seed"] = seed;
    if (include_wall_time) j["wall_time_ms"] = wall_time_ms;
    return j;
}

std::string summary_table(const std::vector<CheckReport>& reports) {
    std::size_t w = 4;
    for (const auto& r : reports) w = std::max(w, r.name.size());
    std::ostringstream os;
    for (const auto& r : reports) {
        os << r.name;
        os << std::string(w - r.name.size() + 2, ' ');
        os << (r.pass() ? "PASS" : "FAIL");
        for (const auto& g : r.gates)
            if (!g.ok) os << "  [" << g.name << ": " << g.lhs << " " << g.op << " " << g.rhs << "]";
        os << "  (" << static_cast<long>(r.wall_time_ms) << " ms)\n";
    }
    return os.str();
}

}  // namespace bblab
