#include "bblab/diffusion.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

namespace bblab {

std::size_t PathBatch::unexited_count() const {
    std::size_t n = 0;
    for (auto e : exited)
        if (!e) ++n;
    return n;
}

McEstimate mc_from_samples(std::span<const double> samples, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("mc_from_samples: empty sample set");
    McEstimate est;
    est.sample_count = samples.size();
    est.seed = seed;
    bool all_equal = true;
    for (double s : samples)
        if (s != samples[0]) {
            all_equal = false;
            break;
        }
    if (all_equal) {
        est.mean = samples[0];
        est.standard_error = 0.0;
        return est;
    }
    double sum = 0.0;
    for (double s : samples) sum += s;
    const double n = static_cast<double>(samples.size());
    est.mean = sum / n;
    double ss = 0.0;
    for (double s : samples) {
        const double d = s - est.mean;
        ss += d * d;
    }
    est.standard_error = samples.size() > 1 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0;
    return est;
}

StoppedPath simulate_to_exit(const CoefficientField& field, const Domain& domain,
                             std::span<const double> x, double dt, RngStream stream,
                             double t_max, std::uint64_t stream_id, bool record_states) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_to_exit requires dt > 0");
    if (t_max < dt) throw std::invalid_argument("simulate_to_exit requires t_max >= dt");
    if (field.dimension() != domain.dimension())
        throw std::invalid_argument("field/domain dimension mismatch");
    const int d = domain.dimension();
    if (d > kMaxDim) throw std::invalid_argument("dimension exceeds kMaxDim");

    StoppedPath path;
    path.start = Point(x.begin(), x.end());
    path.dt = dt;
    path.stream_id = stream_id;

    // Boundary and exterior starts are already stopped: every boundary
    // point is regular for the non-degenerate fields, so tau = 0.
    if (domain.contains(x) != Region::interior) {
        path.tau_hat = 0.0;
        path.exited = true;
        path.exit_point = domain.project_to_boundary(x);
        return path;
    }

    std::array<double, kMaxDim> cur{}, nxt{}, b{}, sig{};
    std::copy(x.begin(), x.end(), cur.begin());
    const double sqdt = std::sqrt(dt);
    const std::size_t max_steps = static_cast<std::size_t>(t_max / dt + 1e-9);

    double d_cur = domain.signed_distance({cur.data(), static_cast<std::size_t>(d)});
    for (std::size_t k = 0; k < max_steps; ++k) {
        if (record_states)
            path.states.insert(path.states.end(), cur.begin(), cur.begin() + d);
        field.drift({cur.data(), static_cast<std::size_t>(d)}, {b.data(), static_cast<std::size_t>(d)});
        field.sigma_diag({cur.data(), static_cast<std::size_t>(d)},
                         {sig.data(), static_cast<std::size_t>(d)});
        for (int i = 0; i < d; ++i)
            nxt[i] = cur[i] + b[i] * dt + sig[i] * sqdt * stream.next_normal();
        for (int i = 0; i < d; ++i)
            if (!std::isfinite(nxt[i]))
                throw SimulationError("non-finite state during Euler step", k);
        const double d_nxt = domain.signed_distance({nxt.data(), static_cast<std::size_t>(d)});
        if (d_nxt <= 0.0) {
            // Crossing time from the linear interpolant of the signed distance.
            const double s = d_cur / (d_cur - d_nxt);
            path.tau_hat = static_cast<double>(k) * dt + s * dt;
            Point crossing(d);
            for (int i = 0; i < d; ++i) crossing[i] = cur[i] + s * (nxt[i] - cur[i]);
            path.exit_point = domain.project_to_boundary(crossing);
            path.exited = true;
            return path;
        }
        std::copy(nxt.begin(), nxt.begin() + d, cur.begin());
        d_cur = d_nxt;
    }
    path.tau_hat = static_cast<double>(max_steps) * dt;
    path.exited = false;
    return path;
}

PathBatch simulate_batch(const CoefficientField& field, const Domain& domain,
                         std::span<const double> x, double dt, std::uint64_t seed,
                         std::size_t n_paths, double t_max, int threads) {
    if (n_paths < 1) throw std::invalid_argument("simulate_batch requires n_paths >= 1");
    const int d = domain.dimension();
    PathBatch batch;
    batch.start = Point(x.begin(), x.end());
    batch.dim = d;
    batch.dt = dt;
    batch.t_max = t_max;
    batch.seed = seed;
    batch.tau_hat.assign(n_paths, 0.0);
    batch.exit_points.assign(n_paths * d, 0.0);
    batch.exited.assign(n_paths, 0);

    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            StoppedPath p;
            try {
                p = simulate_to_exit(field, domain, x, dt, RngStream(seed, i), t_max, i,
                                     /*record_states=*/false);
            } catch (const SimulationError& e) {
                throw SimulationError(e.what(), e.step_index, i);
            }
            batch.tau_hat[i] = p.tau_hat;
            batch.exited[i] = p.exited ? 1 : 0;
            if (p.exited)
                std::copy(p.exit_point.begin(), p.exit_point.end(),
                          batch.exit_points.begin() + static_cast<std::ptrdiff_t>(i * d));
        }
    };

    const int n_workers = std::max(1, threads);
    if (n_workers == 1 || n_paths < 2) {
        run_range(0, n_paths);
        return batch;
    }
    // Each path writes only its own slot, so the result does not depend on
    // the partition.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    const std::size_t chunk = (n_paths + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, w] {
            try {
                run_range(lo, hi);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return batch;
}

namespace {
void require_all_exited(const PathBatch& batch, const char* op) {
    const std::size_t n = batch.unexited_count();
    if (n > 0)
        throw std::runtime_error(std::string(op) + ": " + std::to_string(n) + " of " +
                                 std::to_string(batch.size()) + " paths did not exit by t_max");
}
}  // namespace

McEstimate estimate_mean_exit_time(const PathBatch& batch) {
    require_all_exited(batch, "estimate_mean_exit_time");
    return mc_from_samples(batch.tau_hat, batch.seed);
}

McEstimate estimate_exp_moment(const PathBatch& batch, double beta) {
    if (beta < 0.0) throw std::invalid_argument("estimate_exp_moment requires beta >= 0");
    require_all_exited(batch, "estimate_exp_moment");
    std::vector<double> vals(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) vals[i] = std::exp(beta * batch.tau_hat[i]);
    return mc_from_samples(vals, batch.seed);
}

McEstimate estimate_inverse_power_moment(const PathBatch& batch, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("estimate_inverse_power_moment requires q > 0");
    require_all_exited(batch, "estimate_inverse_power_moment");
    std::vector<double> vals(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.tau_hat[i] <= 0.0)
            throw std::runtime_error(
                "estimate_inverse_power_moment: tau = 0 in sample (start on boundary?)");
        vals[i] = std::pow(batch.tau_hat[i], -1.0 / q);
    }
    return mc_from_samples(vals, batch.seed);
}

CheckReport check_coefficients(const CoefficientField& field, const Domain& domain,
                               int grid_resolution) {
    const auto t0 = std::chrono::steady_clock::now();
    if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be >= 1");
    const int d = domain.dimension();

    // Tensor sample grid over the closure's bounding box; ball keeps
    // closure points only.
    std::vector<double> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    if (domain.shape() == Shape::ball) {
        for (int i = 0; i < d; ++i) {
            lo[static_cast<std::size_t>(i)] = domain.center()[static_cast<std::size_t>(i)] - domain.radius();
            hi[static_cast<std::size_t>(i)] = domain.center()[static_cast<std::size_t>(i)] + domain.radius();
        }
    } else {
        lo = domain.lo();
        hi = domain.hi();
    }

    std::vector<Point> samples;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
        Point p(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            p[ui] = lo[ui] + (hi[ui] - lo[ui]) * idx[ui] / grid_resolution;
        }
        if (domain.shape() != Shape::ball || domain.contains(p) != Region::exterior)
            samples.push_back(std::move(p));
        int axis = 0;
        while (axis < d && ++idx[static_cast<std::size_t>(axis)] > grid_resolution) {
            idx[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == d) break;
    }

    std::array<double, kMaxDim> b{}, sig{};
    double bound_measured = 0.0;
    double alpha_measured = kInf;
    for (const auto& p : samples) {
        field.drift(p, {b.data(), static_cast<std::size_t>(d)});
        field.sigma_diag(p, {sig.data(), static_cast<std::size_t>(d)});
        double bn = 0.0, smax = 0.0, smin = kInf;
        for (int i = 0; i < d; ++i) {
            bn += b[i] * b[i];
            smax = std::max(smax, std::abs(sig[i]));
            smin = std::min(smin, std::abs(sig[i]));
        }
        bound_measured = std::max(bound_measured, std::sqrt(bn) + smax);
        alpha_measured = std::min(alpha_measured, smin * smin);
    }

    // Finite-difference Lipschitz estimate for sigma along each axis.
    double lip_measured = 0.0;
    std::array<double, kMaxDim> sig2{};
    for (const auto& p : samples) {
        field.sigma_diag(p, {sig.data(), static_cast<std::size_t>(d)});
        for (int axis = 0; axis < d; ++axis) {
            const double h = (hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]) / grid_resolution;
            Point pq = p;
            pq[static_cast<std::size_t>(axis)] += h;
            if (pq[static_cast<std::size_t>(axis)] > hi[static_cast<std::size_t>(axis)]) continue;
            field.sigma_diag(pq, {sig2.data(), static_cast<std::size_t>(d)});
            double diff = 0.0;
            for (int i = 0; i < d; ++i) diff = std::max(diff, std::abs(sig2[i] - sig[i]));
            lip_measured = std::max(lip_measured, diff / h);
        }
    }

    CheckReport rep;
    rep.name = "coefficient_conditions";
    rep.config = {{"family", field.family_name()},
                  {"grid_resolution", grid_resolution},
                  {"k_bound", field.k_bound},
                  {"alpha_ellipticity", field.alpha_ellipticity},
                  {"k_lipschitz", field.k_lipschitz}};
    rep.measure("bound_measured", bound_measured);
    rep.measure("alpha_measured", alpha_measured);
    rep.measure("lipschitz_measured", lip_measured);
    rep.gate("boundedness_B", bound_measured, "<=", field.k_bound + 1e-12);
    rep.gate("ellipticity_E_declared_positive", field.alpha_ellipticity, ">", 0.0);
    rep.gate("ellipticity_E", alpha_measured, ">=", field.alpha_ellipticity - 1e-12);
    rep.gate("lipschitz_L", lip_measured, "<=", field.k_lipschitz + 1e-9);
    rep.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

void write_batch_csv(const PathBatch& batch, std::ostream& os) {
    os << "path_id,tau_hat";
    for (int i = 0; i < batch.dim; ++i) os << ",exit_" << i;
    os << ",exited\n";
    char buf[32];
    for (std::size_t p = 0; p < batch.size(); ++p) {
        os << p;
        std::snprintf(buf, sizeof buf, "%.17g", batch.tau_hat[p]);
        os << ',' << buf;
        for (int i = 0; i < batch.dim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g",
                          batch.exit_points[p * static_cast<std::size_t>(batch.dim) + static_cast<std::size_t>(i)]);
            os << ',' << buf;
        }
        os << ',' << (batch.exited[p] ? 1 : 0) << '\n';
    }
}

}  // namespace bblab
