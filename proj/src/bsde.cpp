#include "bblab/bsde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

namespace bblab {

double implicit_step(const GeneratorSpec& gen, double dt, double target) {
    if (!(dt > 0.0)) throw std::invalid_argument("implicit_step requires dt > 0");
    if (target < 0.0) throw std::invalid_argument("implicit_step requires target >= 0");
    if (target == 0.0) return 0.0;
    if (target == kInf) return kInf;

    const double tol =
        std::max(1e-12, 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + target));
    if (gen.kind == GeneratorSpec::Kind::power) {
        // g(y) = y + dt kappa y^{1+q} - target is increasing and convex;
        // Newton from y = target descends monotonically onto the root.
        const double q = gen.q, kappa = gen.kappa;
        double y = target;
        for (int it = 0; it < 100; ++it) {
            const double yq = std::pow(y, q);
            const double g = y + dt * kappa * yq * y - target;
            if (std::abs(g) <= tol) return y;
            const double gp = 1.0 + dt * kappa * (1.0 + q) * yq;
            y = std::max(0.0, y - g / gp);
        }
        const double g = y + dt * gen.kappa * std::pow(y, 1.0 + q) - target;
        if (std::abs(g) <= tol) return y;
        throw std::runtime_error("implicit_step did not converge");
    }
    // Tabulated: y - dt f(y) is increasing in y (f nonincreasing); bisect
    // then polish with a secant step.
    auto g = [&](double y) { return y - dt * gen.f(y) - target; };
    double lo = 0.0, hi = target;  // f <= 0 so g(target) >= 0, g(0) = -target < 0
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= tol) return mid;
        (gm < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Pathwise flow from the truncated exit value over the remaining time.
double exit_flow(const GeneratorSpec& gen, double xi, double tau) {
    if (xi == 0.0) return 0.0;
    if (gen.kind == GeneratorSpec::Kind::power)
        return std::pow(gen.kappa * gen.q * tau + std::pow(xi, -gen.q), -1.0 / gen.q);
    return general_flow(gen, xi, tau);
}

}  // namespace

McEstimate xi_lower_bound(const CoefficientField& field, const Domain& domain,
                          const BoundaryData& boundary, std::span<const double> x,
                          const GeneratorSpec& gen, double truncation_n, double dt,
                          std::size_t n_paths, std::uint64_t seed, double t_max,
                          double unexited_threshold, int threads) {
    if (domain.contains(x) != Region::interior)
        throw std::invalid_argument("xi_lower_bound requires an interior start");
    const PathBatch batch =
        simulate_batch(field, domain, x, dt, seed, n_paths, t_max, threads);
    const std::size_t unexited = batch.unexited_count();
    const double frac = static_cast<double>(unexited) / static_cast<double>(batch.size());
    if (frac > unexited_threshold)
        throw std::runtime_error("xi_lower_bound: unexited fraction " + std::to_string(frac) +
                                 " above threshold");
    std::vector<double> samples;
    samples.reserve(batch.size() - unexited);
    const int d = batch.dim;
    for (std::size_t p = 0; p < batch.size(); ++p) {
        if (!batch.exited[p]) continue;
        const std::span<const double> ep{batch.exit_points.data() + p * static_cast<std::size_t>(d),
                                         static_cast<std::size_t>(d)};
        const double xi = std::min(boundary.value_at(domain, ep), truncation_n);
        samples.push_back(exit_flow(gen, xi, batch.tau_hat[p]));
    }
    return mc_from_samples(samples, seed);
}

BsdeRunConfig BsdeRunConfig::ode(GeneratorSpec gen, double xi, double horizon, double dt) {
    BsdeRunConfig c;
    c.gen = std::move(gen);
    c.pure_ode = true;
    c.ode_xi = xi;
    c.horizon = horizon;
    c.dt = dt;
    return c;
}

BsdeRunConfig BsdeRunConfig::spatial(CoefficientField field, Domain domain,
                                     BoundaryData boundary, GeneratorSpec gen, Point start,
                                     double dt, std::size_t n_paths, std::uint64_t seed,
                                     double truncation_n) {
    BsdeRunConfig c;
    c.gen = std::move(gen);
    c.field = std::move(field);
    c.domain = std::move(domain);
    c.boundary = std::move(boundary);
    c.start = std::move(start);
    c.dt = dt;
    c.n_paths = n_paths;
    c.seed = seed;
    c.truncation_n = truncation_n;
    return c;
}

nlohmann::json BsdeRunConfig::echo() const {
    nlohmann::json j;
    j["q"] = gen.q;
    j["kappa"] = gen.kappa;
    j["dt"] = dt;
    j["truncation_n"] = truncation_n;
    if (pure_ode) {
        j["mode"] = "pure_ode";
        j["xi"] = ode_xi;
        j["horizon"] = horizon;
        return j;
    }
    j["mode"] = "spatial";
    j["start"] = start;
    j["n_paths"] = n_paths;
    j["seed"] = seed;
    j["t_max"] = t_max;
    j["bins"] = bins;
    j["unexited_threshold"] = unexited_threshold;
    if (field) j["family"] = field->family_name();
    return j;
}

nlohmann::json BsdeRun::to_json() const {
    nlohmann::json j;
    j["config"] = config.echo();
    j["y0_mean"] = y0_mean;
    j["y0_stderr"] = y0_stderr;
    j["unexited_fraction"] = unexited_fraction;
    j["per_level"] = nlohmann::json::array();
    j["phi0"] = nullptr;
    j["diagnostics"] = diagnostics;
    return j;
}

namespace {

struct BinGrid {
    int dim = 1;
    int per_axis = 64;
    std::array<double, 2> lo{}, hi{};

    explicit BinGrid(const Domain& domain, int bins) : per_axis(bins) {
        dim = domain.dimension();
        if (dim > 2) throw std::invalid_argument("regression binning supports d <= 2");
        if (domain.shape() == Shape::ball) {
            for (int a = 0; a < dim; ++a) {
                lo[static_cast<std::size_t>(a)] =
                    domain.center()[static_cast<std::size_t>(a)] - domain.radius();
                hi[static_cast<std::size_t>(a)] =
                    domain.center()[static_cast<std::size_t>(a)] + domain.radius();
            }
        } else {
            for (int a = 0; a < dim; ++a) {
                lo[static_cast<std::size_t>(a)] = domain.lo()[static_cast<std::size_t>(a)];
                hi[static_cast<std::size_t>(a)] = domain.hi()[static_cast<std::size_t>(a)];
            }
        }
    }

    int count() const { return dim == 1 ? per_axis : per_axis * per_axis; }

    int axis_bin(double v, int a) const {
        const std::size_t ua = static_cast<std::size_t>(a);
        const double t = (v - lo[ua]) / (hi[ua] - lo[ua]);
        return std::clamp(static_cast<int>(t * per_axis), 0, per_axis - 1);
    }

    int flat(const double* p) const {
        if (dim == 1) return axis_bin(p[0], 0);
        return axis_bin(p[1], 1) * per_axis + axis_bin(p[0], 0);
    }

    Point center(int b) const {
        Point c(static_cast<std::size_t>(dim));
        const int i = dim == 1 ? b : b % per_axis;
        c[0] = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / per_axis;
        if (dim == 2) {
            const int j = b / per_axis;
            c[1] = lo[1] + (hi[1] - lo[1]) * (j + 0.5) / per_axis;
        }
        return c;
    }

    double width(int a) const {
        const std::size_t ua = static_cast<std::size_t>(a);
        return (hi[ua] - lo[ua]) / per_axis;
    }
};

// Fill empty bins from the nearest nonempty bin (ties to the lower index).
void merge_empty_bins(const BinGrid& grid, const std::vector<std::size_t>& count,
                      std::vector<double>& value) {
    const int B = grid.count();
    if (grid.dim == 1) {
        for (int b = 0; b < B; ++b) {
            if (count[static_cast<std::size_t>(b)] > 0) continue;
            for (int r = 1; r < B; ++r) {
                if (b - r >= 0 && count[static_cast<std::size_t>(b - r)] > 0) {
                    value[static_cast<std::size_t>(b)] = value[static_cast<std::size_t>(b - r)];
                    break;
                }
                if (b + r < B && count[static_cast<std::size_t>(b + r)] > 0) {
                    value[static_cast<std::size_t>(b)] = value[static_cast<std::size_t>(b + r)];
                    break;
                }
            }
        }
        return;
    }
    for (int b = 0; b < B; ++b) {
        if (count[static_cast<std::size_t>(b)] > 0) continue;
        const Point cb = grid.center(b);
        double best = kInf;
        int best_idx = -1;
        for (int o = 0; o < B; ++o) {
            if (count[static_cast<std::size_t>(o)] == 0) continue;
            const Point co = grid.center(o);
            double d2 = 0.0;
            for (int a = 0; a < grid.dim; ++a) {
                const double dd = cb[static_cast<std::size_t>(a)] - co[static_cast<std::size_t>(a)];
                d2 += dd * dd;
            }
            if (d2 < best) {
                best = d2;
                best_idx = o;
            }
        }
        if (best_idx >= 0) value[static_cast<std::size_t>(b)] = value[static_cast<std::size_t>(best_idx)];
    }
}

struct ForwardPaths {
    std::size_t n_slices = 0;
    // Slice-major storage: positions (dim per entry) and path ids, in path order.
    std::vector<std::vector<double>> pos;
    std::vector<std::vector<std::uint32_t>> id;
    std::vector<double> tau_hat;      // per path
    std::vector<double> xi;           // g(exit) ∧ n, NaN when unexited
    std::vector<std::uint8_t> exited;
    std::vector<double> final_pos;    // position at t_max for unexited paths
};

ForwardPaths simulate_forward(const BsdeRunConfig& cfg) {
    const CoefficientField& field = *cfg.field;
    const Domain& domain = *cfg.domain;
    const BoundaryData& boundary = *cfg.boundary;
    const int d = domain.dimension();
    const std::size_t M = static_cast<std::size_t>(cfg.t_max / cfg.dt + 1e-9);
    if (M < 1) throw std::invalid_argument("t_max must allow at least one step");

    ForwardPaths fw;
    fw.n_slices = M;
    fw.pos.resize(M);
    fw.id.resize(M);
    fw.tau_hat.assign(cfg.n_paths, 0.0);
    fw.xi.assign(cfg.n_paths, std::numeric_limits<double>::quiet_NaN());
    fw.exited.assign(cfg.n_paths, 0);
    fw.final_pos.assign(cfg.n_paths * static_cast<std::size_t>(d), 0.0);

    struct WorkerOut {
        std::vector<std::vector<double>> pos;
        std::vector<std::vector<std::uint32_t>> id;
    };

    const int n_workers =
        std::max(1, std::min<int>(cfg.threads, static_cast<int>(cfg.n_paths)));
    std::vector<WorkerOut> outs(static_cast<std::size_t>(n_workers));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    const std::size_t chunk = (cfg.n_paths + n_workers - 1) / n_workers;

    auto run_range = [&](std::size_t lo_p, std::size_t hi_p, WorkerOut& out) {
        out.pos.resize(M);
        out.id.resize(M);
        std::array<double, kMaxDim> cur{}, nxt{}, b{}, sig{};
        const double sqdt = std::sqrt(cfg.dt);
        for (std::size_t p = lo_p; p < hi_p; ++p) {
            RngStream stream(cfg.seed, p);
            std::copy(cfg.start.begin(), cfg.start.end(), cur.begin());
            const std::span<const double> cur_s{cur.data(), static_cast<std::size_t>(d)};
            double d_cur = domain.signed_distance(cur_s);
            if (d_cur <= 0.0) {
                // Start on the boundary: stopped at once.
                fw.exited[p] = 1;
                fw.tau_hat[p] = 0.0;
                const Point ep = domain.project_to_boundary(cfg.start);
                fw.xi[p] = std::min(boundary.value_at(domain, ep), cfg.truncation_n);
                continue;
            }
            bool exited = false;
            for (std::size_t k = 0; k < M; ++k) {
                out.pos[k].insert(out.pos[k].end(), cur.begin(), cur.begin() + d);
                out.id[k].push_back(static_cast<std::uint32_t>(p));
                field.drift(cur_s, {b.data(), static_cast<std::size_t>(d)});
                field.sigma_diag(cur_s, {sig.data(), static_cast<std::size_t>(d)});
                for (int i = 0; i < d; ++i)
                    nxt[i] = cur[i] + b[i] * cfg.dt + sig[i] * sqdt * stream.next_normal();
                for (int i = 0; i < d; ++i)
                    if (!std::isfinite(nxt[i]))
                        throw SimulationError("non-finite state during Euler step", k, p);
                const double d_nxt =
                    domain.signed_distance({nxt.data(), static_cast<std::size_t>(d)});
                if (d_nxt <= 0.0) {
                    const double s = d_cur / (d_cur - d_nxt);
                    fw.tau_hat[p] = static_cast<double>(k) * cfg.dt + s * cfg.dt;
                    Point crossing(static_cast<std::size_t>(d));
                    for (int i = 0; i < d; ++i) crossing[static_cast<std::size_t>(i)] = cur[i] + s * (nxt[i] - cur[i]);
                    const Point ep = domain.project_to_boundary(crossing);
                    fw.xi[p] = std::min(boundary.value_at(domain, ep), cfg.truncation_n);
                    fw.exited[p] = 1;
                    exited = true;
                    break;
                }
                std::copy(nxt.begin(), nxt.begin() + d, cur.begin());
                d_cur = d_nxt;
            }
            if (!exited) {
                fw.tau_hat[p] = static_cast<double>(M) * cfg.dt;
                std::copy(cur.begin(), cur.begin() + d,
                          fw.final_pos.begin() + static_cast<std::ptrdiff_t>(p * static_cast<std::size_t>(d)));
            }
        }
    };

    if (n_workers == 1) {
        run_range(0, cfg.n_paths, outs[0]);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) {
            const std::size_t lo_p = static_cast<std::size_t>(w) * chunk;
            const std::size_t hi_p = std::min(cfg.n_paths, lo_p + chunk);
            if (lo_p >= hi_p) break;
            pool.emplace_back([&, lo_p, hi_p, w] {
                try {
                    run_range(lo_p, hi_p, outs[static_cast<std::size_t>(w)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Merge worker blocks in path order so the layout is schedule-independent.
    for (std::size_t k = 0; k < M; ++k) {
        std::size_t total = 0;
        for (const auto& o : outs) total += (k < o.id.size() ? o.id[k].size() : 0);
        fw.pos[k].reserve(total * static_cast<std::size_t>(d));
        fw.id[k].reserve(total);
        for (auto& o : outs) {
            if (k >= o.id.size()) continue;
            fw.pos[k].insert(fw.pos[k].end(), o.pos[k].begin(), o.pos[k].end());
            fw.id[k].insert(fw.id[k].end(), o.id[k].begin(), o.id[k].end());
            o.pos[k].clear();
            o.pos[k].shrink_to_fit();
            o.id[k].clear();
            o.id[k].shrink_to_fit();
        }
    }
    return fw;
}

}  // namespace

BsdeRun solve_regression(const BsdeRunConfig& cfg) {
    BsdeRun run;
    run.config = cfg;

    if (cfg.pure_ode) {
        const double xi_eff = std::min(cfg.ode_xi, cfg.truncation_n);
        if (!(xi_eff < kInf))
            throw std::invalid_argument(
                "pure-ODE mode needs a finite terminal value (truncate first)");
        const std::size_t M =
            std::max<std::size_t>(1, static_cast<std::size_t>(cfg.horizon / cfg.dt + 0.5));
        const double dt = cfg.horizon / static_cast<double>(M);
        double y = xi_eff;
        for (std::size_t k = 0; k < M; ++k) y = implicit_step(cfg.gen, dt, y);
        run.y0_mean = y;
        run.y0_stderr = 0.0;
        run.tau_mean = mc_from_samples(std::vector<double>{cfg.horizon}, cfg.seed);
        const double f_xi = xi_eff > 0.0 ? f_transform(cfg.gen, xi_eff) : kInf;
        run.residual_combo =
            mc_from_samples(std::vector<double>{cfg.gen.q * (cfg.horizon + f_xi)}, cfg.seed);
        run.diagnostics["slices"] = M;
        return run;
    }

    if (!cfg.field || !cfg.domain || !cfg.boundary)
        throw std::invalid_argument("spatial mode needs field, domain and boundary");
    if (!(cfg.truncation_n < kInf))
        throw std::invalid_argument("solve_regression requires a finite truncation level");
    if (std::min(cfg.boundary->sup(), cfg.truncation_n) == kInf)
        throw std::invalid_argument("g ∧ n must be finite everywhere");
    if (cfg.domain->contains(cfg.start) != Region::interior)
        throw std::invalid_argument("solve_regression requires an interior start");

    const Domain& domain = *cfg.domain;
    const int d = domain.dimension();
    ForwardPaths fw = simulate_forward(cfg);
    const std::size_t M = fw.n_slices;

    std::size_t unexited = 0;
    for (auto e : fw.exited)
        if (!e) ++unexited;
    run.unexited_fraction = static_cast<double>(unexited) / static_cast<double>(cfg.n_paths);
    if (run.unexited_fraction > cfg.unexited_threshold)
        throw std::runtime_error("solve_regression: unexited fraction " +
                                 std::to_string(run.unexited_fraction) + " above threshold " +
                                 std::to_string(cfg.unexited_threshold));

    if (cfg.bins < 2) throw std::invalid_argument("regression needs at least 2 bins per axis");
    const BinGrid bins(domain, cfg.bins);
    const int B = bins.count();
    const double z_exp = 4.0 / cfg.gen.q + cfg.z_weight_epsilon;

    // One backward pass; `unexited_v` supplies terminal values for paths
    // still alive at t_max (called only when such paths exist).
    auto backward = [&](const std::vector<double>& unexited_v, bool with_z,
                        std::vector<double>* acc,
                        bool record_slices) -> std::pair<double, std::vector<double>> {
        std::vector<double> v(cfg.n_paths, 0.0);
        for (std::size_t p = 0; p < cfg.n_paths; ++p)
            v[p] = fw.exited[p] ? fw.xi[p] : unexited_v[p];

        std::vector<double> bin_sum(static_cast<std::size_t>(B));
        std::vector<std::size_t> bin_cnt(static_cast<std::size_t>(B));
        std::vector<double> bin_val(static_cast<std::size_t>(B));
        std::array<double, kMaxDim> sig{};

        for (std::size_t k = M; k-- > 1;) {
            const auto& ids = fw.id[k];
            const auto& pos = fw.pos[k];
            if (ids.empty()) continue;
            std::fill(bin_sum.begin(), bin_sum.end(), 0.0);
            std::fill(bin_cnt.begin(), bin_cnt.end(), 0);
            for (std::size_t e = 0; e < ids.size(); ++e) {
                const int b = bins.flat(pos.data() + e * static_cast<std::size_t>(d));
                bin_sum[static_cast<std::size_t>(b)] += v[ids[e]];
                bin_cnt[static_cast<std::size_t>(b)] += 1;
            }
            for (int b = 0; b < B; ++b) {
                const std::size_t ub = static_cast<std::size_t>(b);
                if (bin_cnt[ub] == 0) continue;
                bin_val[ub] = implicit_step(cfg.gen, cfg.dt,
                                            bin_sum[ub] / static_cast<double>(bin_cnt[ub]));
            }
            if (with_z || record_slices) merge_empty_bins(bins, bin_cnt, bin_val);
            if (record_slices) run.slice_values[k] = bin_val;
            if (with_z && acc) {
                // |Z|² = Σ_a (σ_aa ∂_a u)² from central differences of the
                // bin values, accumulated path by path with weight ρ^{4/q+ε}.
                // Within max(2 bins, 5 σ√dt) of ∂D the per-slice values
                // still carry one-step exit mass that the weight cannot
                // damp at this resolution, while the true weighted mass in
                // that collar is O(collar²) because ε > 1; it is excluded.
                double min_width = kInf;
                for (int a = 0; a < d; ++a) min_width = std::min(min_width, bins.width(a));
                for (std::size_t e = 0; e < ids.size(); ++e) {
                    const double* pe = pos.data() + e * static_cast<std::size_t>(d);
                    const std::span<const double> ps{pe, static_cast<std::size_t>(d)};
                    cfg.field->sigma_diag(ps, {sig.data(), static_cast<std::size_t>(d)});
                    double sig_max = 0.0;
                    for (int a = 0; a < d; ++a) sig_max = std::max(sig_max, std::abs(sig[a]));
                    const double collar =
                        std::max(2.0 * min_width, 5.0 * sig_max * std::sqrt(cfg.dt));
                    if (domain.distance_to_boundary(ps) < collar) continue;
                    const int b = bins.flat(pe);
                    double z2 = 0.0;
                    for (int a = 0; a < d; ++a) {
                        const int stride = (a == 0) ? 1 : bins.per_axis;
                        const int ia = (a == 0) ? (bins.dim == 1 ? b : b % bins.per_axis)
                                                : b / bins.per_axis;
                        double slope;
                        const double w = bins.width(a);
                        if (ia == 0)
                            slope = (bin_val[static_cast<std::size_t>(b + stride)] -
                                     bin_val[static_cast<std::size_t>(b)]) / w;
                        else if (ia == bins.per_axis - 1)
                            slope = (bin_val[static_cast<std::size_t>(b)] -
                                     bin_val[static_cast<std::size_t>(b - stride)]) / w;
                        else
                            slope = (bin_val[static_cast<std::size_t>(b + stride)] -
                                     bin_val[static_cast<std::size_t>(b - stride)]) / (2.0 * w);
                        const double z = sig[a] * slope;
                        z2 += z * z;
                    }
                    const double rho = domain.distance_to_boundary(ps);
                    (*acc)[ids[e]] += z2 * std::pow(rho, z_exp) * cfg.dt;
                }
            }
            for (std::size_t e = 0; e < ids.size(); ++e) {
                const int b = bins.flat(pos.data() + e * static_cast<std::size_t>(d));
                v[ids[e]] = bin_val[static_cast<std::size_t>(b)];
            }
        }

        // Slice 0: every path sits at the start point; keep the raw
        // continuation values for the bootstrap.
        std::vector<double> cont;
        cont.reserve(fw.id[0].size());
        for (std::size_t e = 0; e < fw.id[0].size(); ++e) cont.push_back(v[fw.id[0][e]]);
        double mean = 0.0;
        for (double c : cont) mean += c;
        mean /= static_cast<double>(cont.size());
        return {implicit_step(cfg.gen, cfg.dt, mean), std::move(cont)};
    };

    if (cfg.keep_slice_values) run.slice_values.assign(M, {});

    std::vector<double> z_acc;
    if (cfg.estimate_z) {
        if (cfg.z_weight_epsilon <= 1.0)
            throw std::invalid_argument("z weight requires epsilon > 1");
        z_acc.assign(cfg.n_paths, 0.0);
    }
    const std::vector<double> unexited_low(cfg.n_paths, 0.0);
    auto [y0, cont] = backward(unexited_low, cfg.estimate_z, cfg.estimate_z ? &z_acc : nullptr,
                               cfg.keep_slice_values);
    run.y0_mean = y0;

    // Bootstrap standard error over the slice-0 continuation values.
    {
        RngStream boot(cfg.seed ^ 0x626f6f74ULL, 0);
        const int R = std::max(2, cfg.bootstrap_resamples);
        std::vector<double> y0s(static_cast<std::size_t>(R));
        const std::size_t n = cont.size();
        for (int r = 0; r < R; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j =
                    std::min(n - 1, static_cast<std::size_t>(boot.next_uniform() *
                                                             static_cast<double>(n)));
                s += cont[j];
            }
            y0s[static_cast<std::size_t>(r)] =
                implicit_step(cfg.gen, cfg.dt, s / static_cast<double>(n));
        }
        const McEstimate be = mc_from_samples(y0s, cfg.seed);
        run.y0_stderr =
            be.standard_error * std::sqrt(static_cast<double>(y0s.size()));  // sd of resamples
    }

    if (unexited > 0) {
        // Bracket the unexited contribution: 0 below, min(n, majorant) above.
        CoefficientField cf = *cfg.field;
        cf.declare_exact(domain);
        const double C = keller_osserman_constant_generic(
            cfg.gen.q, cf.k_bound, cf.k_bound, default_geometry_bounds(domain, cf.k_bound),
            std::max(cfg.gen.kappa, 1e-12));
        std::vector<double> caps(cfg.n_paths, 0.0);
        for (std::size_t p = 0; p < cfg.n_paths; ++p) {
            if (fw.exited[p]) continue;
            const std::span<const double> fp{
                fw.final_pos.data() + p * static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
            caps[p] = std::min(cfg.truncation_n,
                               majorant_value(MajorantSpec{C, cfg.gen.q, 0.0},
                                              domain.distance_to_boundary(fp)));
        }
        run.diagnostics["y0_unexited_low"] = y0;
        run.diagnostics["y0_unexited_high"] = backward(caps, false, nullptr, false).first;
    }

    // Exit summaries over exited paths (path order).
    std::vector<double> taus, combos;
    taus.reserve(cfg.n_paths - unexited);
    combos.reserve(cfg.n_paths - unexited);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        if (!fw.exited[p]) continue;
        taus.push_back(fw.tau_hat[p]);
        const double f_xi = fw.xi[p] > 0.0 ? f_transform(cfg.gen, fw.xi[p]) : kInf;
        combos.push_back(cfg.gen.q * (fw.tau_hat[p] + f_xi));
    }
    if (!taus.empty()) {
        run.tau_mean = mc_from_samples(taus, cfg.seed);
        run.residual_combo = mc_from_samples(combos, cfg.seed);
    }

    if (cfg.estimate_z) {
        const McEstimate ze = mc_from_samples(z_acc, cfg.seed);
        run.z_weighted = ze;
    }
    run.diagnostics["slices"] = M;
    run.diagnostics["unexited_count"] = unexited;
    return run;
}

McEstimate phi_residual(const BsdeRun& run, double alpha_lower_bound) {
    if (!(alpha_lower_bound > 0.0))
        throw std::invalid_argument("phi_residual requires a declared alpha > 0");
    if (!run.config.pure_ode) {
        const double gmin =
            std::min(run.config.boundary->min_value(), run.config.truncation_n);
        if (gmin < alpha_lower_bound)
            throw std::invalid_argument("boundary data is not bounded below by alpha");
    } else if (std::min(run.config.ode_xi, run.config.truncation_n) < alpha_lower_bound) {
        throw std::invalid_argument("terminal value is not bounded below by alpha");
    }
    const double q = run.config.gen.q;
    const double f_y0 = f_transform(run.config.gen, run.y0_mean);
    // d/dy [q F(y)] = q / f(y); propagate the Y0 error through it.
    const double dq = q / run.config.gen.f(run.y0_mean);
    McEstimate est;
    est.mean = run.residual_combo.mean - q * f_y0;
    est.standard_error = std::sqrt(run.residual_combo.standard_error *
                                       run.residual_combo.standard_error +
                                   dq * dq * run.y0_stderr * run.y0_stderr);
    est.sample_count = run.residual_combo.sample_count;
    est.seed = run.config.seed;
    return est;
}

nlohmann::json TruncationLadder::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        arr.push_back({{"n", levels[i]},
                       {"y0_mean", runs[i].y0_mean},
                       {"y0_stderr", runs[i].y0_stderr},
                       {"unexited_fraction", runs[i].unexited_fraction}});
    }
    return {{"levels", arr},
            {"monotonicity_violations", monotonicity_violations},
            {"stabilized", stabilized},
            {"stabilized_y0", stabilized_y0}};
}

TruncationLadder ladder_run(const BsdeRunConfig& config, const std::vector<double>& levels,
                            double rel_tol) {
    if (levels.empty()) throw std::invalid_argument("ladder_run requires levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1]))
            throw std::invalid_argument("ladder levels must be strictly increasing");
    TruncationLadder ladder;
    ladder.levels = levels;
    for (double n : levels) {
        BsdeRunConfig c = config;
        c.truncation_n = n;
        ladder.runs.push_back(solve_regression(c));
    }
    int small_increments = 0;
    for (std::size_t i = 1; i < ladder.runs.size(); ++i) {
        const BsdeRun& a = ladder.runs[i - 1];
        const BsdeRun& b = ladder.runs[i];
        const double tol3 = 3.0 * std::sqrt(a.y0_stderr * a.y0_stderr +
                                            b.y0_stderr * b.y0_stderr);
        if (b.y0_mean < a.y0_mean - tol3) ++ladder.monotonicity_violations;
        if (std::abs(b.y0_mean - a.y0_mean) < rel_tol * std::abs(b.y0_mean))
            ++small_increments;
        else
            small_increments = 0;
        if (small_increments >= 2) ladder.stabilized = true;
    }
    if (ladder.runs.size() == 1) ladder.stabilized = true;
    ladder.stabilized_y0 = ladder.runs.back().y0_mean;
    return ladder;
}

McEstimate weighted_z_diagnostic(const BsdeRun& run, double eps) {
    if (!(eps > 1.0))
        throw std::invalid_argument("weighted_z_diagnostic requires epsilon > 1");
    if (!run.z_weighted)
        throw std::invalid_argument("run has no Z estimates (enable estimate_z)");
    if (eps != run.config.z_weight_epsilon)
        throw std::invalid_argument("run was computed with a different epsilon");
    return *run.z_weighted;
}

}  // namespace bblab
