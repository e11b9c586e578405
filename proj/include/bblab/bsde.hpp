#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bblab/closedform.hpp"
#include "bblab/coefficients.hpp"
#include "bblab/diffusion.hpp"
#include "bblab/geometry.hpp"

namespace bblab {

/// Scalar backward step: the unique y >= 0 with y - dt f(y) = target
/// (power kind: y + dt kappa y^{1+q} = target), by safeguarded Newton.
double implicit_step(const GeneratorSpec& gen, double dt, double target);

/// Monte Carlo mean of the pathwise flow started from the truncated exit
/// value: alpha_0 = (kappa q tau + (g(exit) ∧ n)^{-q})^{-1/q} for the power
/// kind (the F-transform flow in general). Unexited paths beyond the
/// threshold are an error; below it they are excluded.
McEstimate xi_lower_bound(const CoefficientField& field, const Domain& domain,
                          const BoundaryData& boundary, std::span<const double> x,
                          const GeneratorSpec& gen, double truncation_n, double dt,
                          std::size_t n_paths, std::uint64_t seed, double t_max = 10.0,
                          double unexited_threshold = 1e-3, int threads = 1);

struct BsdeRunConfig {
    GeneratorSpec gen = GeneratorSpec::power(1.0, 1.0);
    double dt = 1e-3;
    double truncation_n = kInf;

    // Pure-ODE mode: no space, fixed horizon, deterministic terminal value.
    bool pure_ode = false;
    double ode_xi = kInf;
    double horizon = 0.0;

    // Spatial mode.
    std::optional<CoefficientField> field;
    std::optional<Domain> domain;
    std::optional<BoundaryData> boundary;
    Point start;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    double t_max = 10.0;
    int bins = 64;  // per axis
    double unexited_threshold = 1e-3;
    bool estimate_z = false;
    double z_weight_epsilon = 2.0;  // weight exponent is 4/q + epsilon
    int threads = 1;
    int bootstrap_resamples = 64;
    bool keep_slice_values = false;

    static BsdeRunConfig ode(GeneratorSpec gen, double xi, double horizon, double dt);
    static BsdeRunConfig spatial(CoefficientField field, Domain domain, BoundaryData boundary,
                                 GeneratorSpec gen, Point start, double dt, std::size_t n_paths,
                                 std::uint64_t seed, double truncation_n);

    nlohmann::json echo() const;
};

/// One backward-regression solve. The Y0 estimate carries a bootstrap
/// standard error; tau/terminal summaries feed the residual identity.
struct BsdeRun {
    BsdeRunConfig config;
    double y0_mean = 0.0;
    double y0_stderr = 0.0;
    double unexited_fraction = 0.0;
    McEstimate tau_mean;            // exit time over contributing paths
    McEstimate residual_combo;      // per-path q (tau + F(g(exit) ∧ n))
    std::optional<McEstimate> z_weighted;  // E ∫ |Z|² rho^{4/q+eps} dr
    std::vector<std::vector<double>> slice_values;  // optional per-slice bin values
    nlohmann::json diagnostics = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Backward induction with spatial-binning conditional expectations and an
/// implicit generator step per bin.
BsdeRun solve_regression(const BsdeRunConfig& config);

/// Phi_0 = q E[tau] + E[(g(exit) ∧ n)^{-q}] - Y0^{-q} for the standard
/// power generator (via the F-transform in general; scaled by q so the
/// kappa = 1 case matches the identity exactly). Nonnegative in theory.
McEstimate phi_residual(const BsdeRun& run, double alpha_lower_bound);

struct TruncationLadder {
    std::vector<double> levels;
    std::vector<BsdeRun> runs;
    std::size_t monotonicity_violations = 0;  // beyond 3 combined stderr
    bool stabilized = false;
    double stabilized_y0 = 0.0;

    nlohmann::json to_json() const;
};

/// solve_regression per level with a common seed; stabilization means two
/// successive increments below rel_tol * current value.
TruncationLadder ladder_run(const BsdeRunConfig& config, const std::vector<double>& levels,
                            double rel_tol = 1e-3);

/// Diagnostic estimate of E ∫_0^tau |Z_r|² rho(X_r)^{4/q+eps} dr from the
/// regression Z slopes; requires eps > 1 and a run with Z estimates for
/// the same eps.
McEstimate weighted_z_diagnostic(const BsdeRun& run, double eps);

}  // namespace bblab
