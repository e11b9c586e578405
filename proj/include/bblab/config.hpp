#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bblab/bsde.hpp"
#include "bblab/closedform.hpp"
#include "bblab/coefficients.hpp"
#include "bblab/geometry.hpp"

namespace bblab {

/// Configuration/usage problems; the CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverParams {
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    double t_max = 10.0;
    std::vector<int> grid_cells;           // pde
    int bins = 64;
    std::vector<double> truncation_levels; // ladder when nonempty
    double truncation_n = kInf;
    double unexited_threshold = 1e-3;
    double ladder_tol = 1e-3;
    double interior_margin = 0.0;          // 0 -> default 4h
    Point start;
    bool pure_ode = false;
    double horizon = 0.0;
    double xi = kInf;
    bool estimate_z = false;
    double z_weight_epsilon = 2.0;
    int bootstrap_resamples = 64;
    double alpha_lower_bound = 0.0;        // > 0 enables the residual identity
};

/// Declarative experiment: one JSON file drives one workflow. Unknown keys
/// warn rather than fail.
struct ExperimentConfig {
    std::optional<Domain> domain;
    std::optional<CoefficientField> coefficients;
    GeneratorSpec generator = GeneratorSpec::power(1.0, 1.0);
    std::optional<BoundaryData> boundary;
    SolverParams solver;
    std::string output_prefix = "run";
    nlohmann::json raw;  // canonical echo for hashing/manifests
};

nlohmann::json load_json_file(const std::string& path);

/// Parses and validates; unknown keys are appended to `warnings`.
ExperimentConfig parse_config(const nlohmann::json& j, std::vector<std::string>* warnings);

/// FNV-1a over the canonical (sorted-key) serialization, so the hash is
/// stable under key reordering.
std::string config_hash(const nlohmann::json& j);

nlohmann::json make_manifest(const nlohmann::json& config, std::uint64_t seed,
                             const std::vector<std::string>& outputs);

/// Assembles the BSDE run configuration from a parsed experiment.
BsdeRunConfig to_bsde_config(const ExperimentConfig& cfg, int threads);

}  // namespace bblab
