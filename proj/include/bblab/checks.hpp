#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bblab/report.hpp"

namespace bblab {

/// Catalog of named invariant checks. Each entry carries per-suite default
/// configurations; run-time configs are shallow-merged over them.
class CheckRegistry {
public:
    struct Entry {
        std::string name;
        nlohmann::json fast_config;
        nlohmann::json full_config;
    };

    static const CheckRegistry& instance();
    const std::vector<Entry>& entries() const { return entries_; }
    bool has(const std::string& name) const;
    const Entry& at(const std::string& name) const;

private:
    CheckRegistry();
    std::vector<Entry> entries_;
};

/// Executes one registered check. `config` is merged over the check's
/// fast-suite defaults; unknown names are an error.
CheckReport run_check(const std::string& name, const nlohmann::json& config,
                      std::uint64_t seed, int threads = 1);

/// Runs every registered check with the suite's configuration. Exceptions
/// are recorded as failed reports and the suite continues.
std::vector<CheckReport> run_suite(const std::string& suite, std::uint64_t seed,
                                   int threads = 1);

/// One canonical JSON line per report (wall time excluded, so identical
/// seeds give identical bytes).
std::string reports_to_jsonl(const std::vector<CheckReport>& reports);

}  // namespace bblab
