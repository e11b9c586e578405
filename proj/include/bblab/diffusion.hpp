#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "bblab/coefficients.hpp"
#include "bblab/geometry.hpp"
#include "bblab/report.hpp"
#include "bblab/rng.hpp"

namespace bblab {

/// Raised when a simulated state leaves the representable range
/// (coefficient blow-up); carries the offending step and path.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, std::size_t step, std::size_t path = 0)
        : std::runtime_error(what), step_index(step), path_index(path) {}
    std::size_t step_index;
    std::size_t path_index;
};

/// One killed trajectory. Pre-exit states are interior; the exit time is
/// grid time minus a linear-interpolation correction in [0, dt).
struct StoppedPath {
    Point start;
    double dt = 0.0;
    std::vector<double> states;  // flattened d-per-step, t = 0, dt, ... (pre-exit)
    double tau_hat = 0.0;
    Point exit_point;
    bool exited = false;
    std::uint64_t stream_id = 0;

    std::size_t n_states() const { return start.empty() ? 0 : states.size() / start.size(); }
};

/// Batch of killed trajectories; per-path exit summaries only (the BSDE
/// solver keeps its own slice-major state storage).
struct PathBatch {
    Point start;
    int dim = 1;
    double dt = 0.0;
    double t_max = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> tau_hat;
    std::vector<double> exit_points;  // flattened, dim per path; zeros when unexited
    std::vector<std::uint8_t> exited;

    std::size_t size() const { return tau_hat.size(); }
    std::size_t unexited_count() const;
};

struct McEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

/// Sample mean and standard error, accumulated in index order. A batch of
/// bit-identical samples yields the sample itself with zero error.
McEstimate mc_from_samples(std::span<const double> samples, std::uint64_t seed);

/// Euler-Maruyama to the first exit from the domain closure. A start on
/// the boundary (or outside) exits immediately with tau_hat = 0. If the
/// path has not left by t_max it is returned truncated with exited=false.
StoppedPath simulate_to_exit(const CoefficientField& field, const Domain& domain,
                             std::span<const double> x, double dt, RngStream stream,
                             double t_max, std::uint64_t stream_id = 0,
                             bool record_states = true);

/// n_paths independent trajectories; path i draws from the stream derived
/// from (seed, i), so the batch is bit-identical for any worker count.
PathBatch simulate_batch(const CoefficientField& field, const Domain& domain,
                         std::span<const double> x, double dt, std::uint64_t seed,
                         std::size_t n_paths, double t_max, int threads = 1);

McEstimate estimate_mean_exit_time(const PathBatch& batch);
/// Sample mean of exp(beta * tau).
McEstimate estimate_exp_moment(const PathBatch& batch, double beta);
/// Sample mean of tau^{-1/q}; all exit times must be positive.
McEstimate estimate_inverse_power_moment(const PathBatch& batch, double q);

/// Samples b and σ on a grid and compares against the declared condition
/// constants; violations are report content, not errors.
CheckReport check_coefficients(const CoefficientField& field, const Domain& domain,
                               int grid_resolution);

/// CSV with fixed columns: path_id, tau_hat, exit_0..exit_{d-1}, exited.
void write_batch_csv(const PathBatch& batch, std::ostream& os);

}  // namespace bblab
