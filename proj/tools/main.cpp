#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bblab/checks.hpp"
#include "bblab/config.hpp"
#include "bblab/diffusion.hpp"
#include "bblab/pde.hpp"
#include "bblab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool emit_plots = false;
};

int resolve_threads(const CommonOpts& o) {
    if (o.threads > 0) return o.threads;
    if (const char* env = std::getenv("BBLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

bblab::ExperimentConfig load_experiment(const CommonOpts& o, json* raw_out) {
    json raw = bblab::load_json_file(o.config_path);
    std::vector<std::string> warnings;
    bblab::ExperimentConfig cfg = bblab::parse_config(raw, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (o.seed_set) cfg.solver.seed = o.seed;
    if (raw_out) *raw_out = raw;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& prefix, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& outputs) {
    write_text(dir / (prefix + "_manifest.json"),
               bblab::make_manifest(config, seed, outputs).dump(2) + "\n");
}

int cmd_simulate(const CommonOpts& o) {
    json raw;
    const bblab::ExperimentConfig cfg = load_experiment(o, &raw);
    if (!cfg.domain || !cfg.coefficients) throw bblab::ConfigError("simulate needs domain and coefficients");
    if (cfg.solver.start.empty()) throw bblab::ConfigError("simulate needs solver.start");
    const bblab::PathBatch batch = bblab::simulate_batch(
        *cfg.coefficients, *cfg.domain, cfg.solver.start, cfg.solver.dt, cfg.solver.seed,
        cfg.solver.n_paths, cfg.solver.t_max, resolve_threads(o));
    fs::create_directories(o.out_dir);
    const std::string csv_name = cfg.output_prefix + "_batch.csv";
    std::ofstream csv(fs::path(o.out_dir) / csv_name, std::ios::binary);
    bblab::write_batch_csv(batch, csv);
    csv.close();
    write_manifest(o.out_dir, cfg.output_prefix, raw, cfg.solver.seed, {csv_name});
    std::cout << "wrote " << (fs::path(o.out_dir) / csv_name).string() << " ("
              << batch.size() << " paths, " << batch.unexited_count() << " unexited)\n";
    return 0;
}

int cmd_solve_pde(const CommonOpts& o) {
    json raw;
    const bblab::ExperimentConfig cfg = load_experiment(o, &raw);
    if (!cfg.domain || !cfg.coefficients || !cfg.boundary)
        throw bblab::ConfigError("solve-pde needs domain, coefficients and boundary");
    if (cfg.solver.grid_cells.empty())
        throw bblab::ConfigError("solve-pde needs solver.grid_cells");

    bblab::EllipticProblem prob{bblab::Grid(*cfg.domain, cfg.solver.grid_cells),
                                *cfg.coefficients, cfg.generator, *cfg.boundary,
                                cfg.solver.truncation_n};
    json summary;
    bblab::SolutionField field;
    if (!cfg.solver.truncation_levels.empty()) {
        const bblab::LadderResult lad =
            bblab::ladder_minimal(prob, cfg.solver.truncation_levels,
                                  cfg.solver.interior_margin, cfg.solver.ladder_tol);
        field = lad.field;
        json levels = json::array();
        for (const auto& l : lad.levels)
            levels.push_back({{"n", l.n},
                              {"increment_sup", l.increment_sup},
                              {"residual", l.residual},
                              {"iterations", l.iterations}});
        summary["ladder"] = {{"levels", levels},
                             {"converged", lad.converged},
                             {"interior_margin", lad.interior_margin},
                             {"tol", lad.tol}};
    } else {
        if (!(cfg.solver.truncation_n < bblab::kInf))
            throw bblab::ConfigError("solve-pde needs truncation_n or truncation_levels");
        field = bblab::solve_truncated(prob);
    }
    summary["residual"] = field.residual_norm;
    summary["iterations"] = field.newton_iterations;
    summary["truncation_n"] = field.truncation_n;

    fs::create_directories(o.out_dir);
    std::vector<std::string> outputs;
    const std::string csv_name = cfg.output_prefix + "_field.csv";
    {
        std::ofstream csv(fs::path(o.out_dir) / csv_name, std::ios::binary);
        bblab::write_field_csv(prob.grid, field, csv);
    }
    outputs.push_back(csv_name);
    const std::string sum_name = cfg.output_prefix + "_summary.json";
    write_text(fs::path(o.out_dir) / sum_name, summary.dump(2) + "\n");
    outputs.push_back(sum_name);

    if (o.emit_plots) {
        // Profile along the inward normal from a blow-up endpoint, when any.
        std::string profile_name;
        if (!cfg.boundary->blowup().empty() && cfg.domain->shape() == bblab::Shape::interval) {
            const bblab::Point left{cfg.domain->a()};
            const bool left_blows = cfg.boundary->blowup().contains(*cfg.domain, left);
            const std::size_t node =
                left_blows ? 0 : static_cast<std::size_t>(prob.grid.cells(0));
            const auto profile = bblab::boundary_layer_profile(
                prob.grid, field, cfg.generator.q, node, {left_blows ? 1 : -1});
            profile_name = cfg.output_prefix + "_profile.csv";
            std::ofstream pcsv(fs::path(o.out_dir) / profile_name, std::ios::binary);
            pcsv << "rho,weighted_u\n";
            char buf[64];
            for (const auto& [rho, v] : profile) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rho, v);
                pcsv << buf;
            }
            outputs.push_back(profile_name);
        }
        std::string gp = "set datafile separator ','\nset key autotitle columnhead\n";
        gp += "set terminal pngcairo size 900,600\n";
        gp += "set output '" + cfg.output_prefix + "_u.png'\n";
        gp += "plot '" + csv_name + "' using 1:" +
              std::to_string(cfg.domain->dimension() + 1) + " with lines title 'u'\n";
        if (!profile_name.empty()) {
            gp += "set output '" + cfg.output_prefix + "_profile.png'\n";
            gp += "set logscale x\n";
            gp += "plot '" + profile_name + "' using 1:2 with lines title 'rho^{2/q} u'\n";
        }
        const std::string gp_name = cfg.output_prefix + "_plot.gp";
        write_text(fs::path(o.out_dir) / gp_name, gp);
        outputs.push_back(gp_name);
    }
    write_manifest(o.out_dir, cfg.output_prefix, raw, cfg.solver.seed, outputs);
    std::cout << "wrote " << (fs::path(o.out_dir) / csv_name).string() << "\n";
    return 0;
}

int cmd_solve_bsde(const CommonOpts& o) {
    json raw;
    const bblab::ExperimentConfig cfg = load_experiment(o, &raw);
    bblab::BsdeRunConfig bc = bblab::to_bsde_config(cfg, resolve_threads(o));

    json out;
    bblab::BsdeRun last;
    if (!cfg.solver.truncation_levels.empty() && !bc.pure_ode) {
        const bblab::TruncationLadder lad =
            bblab::ladder_run(bc, cfg.solver.truncation_levels, cfg.solver.ladder_tol);
        last = lad.runs.back();
        out = last.to_json();
        out["per_level"] = lad.to_json()["levels"];
        out["stabilized"] = lad.stabilized;
    } else {
        last = bblab::solve_regression(bc);
        out = last.to_json();
    }
    if (cfg.solver.alpha_lower_bound > 0.0) {
        const bblab::McEstimate phi =
            bblab::phi_residual(last, cfg.solver.alpha_lower_bound);
        out["phi0"] = {{"mean", phi.mean}, {"stderr", phi.standard_error}};
    }

    fs::create_directories(o.out_dir);
    const std::string run_name = cfg.output_prefix + "_run.json";
    write_text(fs::path(o.out_dir) / run_name, out.dump(2) + "\n");
    write_manifest(o.out_dir, cfg.output_prefix, raw, cfg.solver.seed, {run_name});
    std::cout << "y0 = " << last.y0_mean << " +- " << last.y0_stderr << "\n";
    return 0;
}

int cmd_verify(const CommonOpts& o, const std::string& suite) {
    const auto reports = bblab::run_suite(suite, o.seed_set ? o.seed : 1, resolve_threads(o));
    fs::create_directories(o.out_dir);
    const std::string name = "verify_" + suite + ".jsonl";
    write_text(fs::path(o.out_dir) / name, bblab::reports_to_jsonl(reports));
    std::cout << bblab::summary_table(reports);
    bool all = true;
    for (const auto& r : reports) all = all && r.pass();
    std::cout << (all ? "ALL PASS" : "FAILURES PRESENT") << "\n";
    return all ? 0 : 1;
}

void apply_override(json& j, const std::string& dotted, const json& value) {
    json* cur = &j;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t dot = dotted.find('.', pos);
        const std::string key = dotted.substr(pos, dot - pos);
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

int cmd_sweep(const CommonOpts& o) {
    const json raw = bblab::load_json_file(o.config_path);
    if (!raw.contains("sweep")) throw bblab::ConfigError("sweep needs a \"sweep\" section");
    const json& sw = raw.at("sweep");
    const std::string command = sw.value("command", "solve-bsde");
    if (command != "simulate" && command != "solve-pde" && command != "solve-bsde")
        throw bblab::ConfigError("sweep.command must be simulate, solve-pde or solve-bsde");
    const json& params = sw.at("parameters");
    if (!params.is_object() || params.empty())
        throw bblab::ConfigError("sweep.parameters must be a nonempty object");

    std::vector<std::string> keys;
    std::vector<std::vector<json>> values;
    for (const auto& [k, v] : params.items()) {
        if (!v.is_array() || v.empty())
            throw bblab::ConfigError("sweep parameter " + k + " must be a nonempty array");
        keys.push_back(k);
        values.push_back(std::vector<json>(v.begin(), v.end()));
    }

    json base = raw;
    base.erase("sweep");
    std::vector<std::size_t> idx(keys.size(), 0);
    std::size_t combo = 0;
    std::vector<std::string> outputs;
    for (;;) {
        json one = base;
        for (std::size_t i = 0; i < keys.size(); ++i)
            apply_override(one, keys[i], values[i][idx[i]]);
        char tag[32];
        std::snprintf(tag, sizeof tag, "sweep_%03zu", combo);
        const fs::path dir = fs::path(o.out_dir) / tag;
        fs::create_directories(dir);
        const fs::path cfg_path = dir / "config.json";
        write_text(cfg_path, one.dump(2) + "\n");
        outputs.push_back(std::string(tag) + "/config.json");

        CommonOpts sub = o;
        sub.config_path = cfg_path.string();
        sub.out_dir = dir.string();
        if (command == "simulate")
            cmd_simulate(sub);
        else if (command == "solve-pde")
            cmd_solve_pde(sub);
        else
            cmd_solve_bsde(sub);

        ++combo;
        std::size_t axis = 0;
        while (axis < keys.size() && ++idx[axis] == values[axis].size()) {
            idx[axis] = 0;
            ++axis;
        }
        if (axis == keys.size()) break;
    }
    write_manifest(o.out_dir, "sweep", raw, o.seed_set ? o.seed : 0, outputs);
    std::cout << "ran " << combo << " sweep combinations\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for killed-diffusion BSDEs and boundary blow-up PDEs"};
    app.set_version_flag("--version", bblab::kVersion);
    app.require_subcommand(1);

    CommonOpts opts;
    std::string suite = "fast";

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path, "experiment config (JSON)");
        if (needs_config) c->required();
        sub->add_option("--seed", opts.seed, "override the config seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
        sub->add_option("--threads", opts.threads, "worker threads (default: BBLAB_THREADS or 1)");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_flag("--emit-plots", opts.emit_plots, "emit gnuplot scripts");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "exit-time batch to CSV");
    add_common(simulate, true);
    CLI::App* solve_pde = app.add_subcommand("solve-pde", "finite-difference solve / ladder");
    add_common(solve_pde, true);
    CLI::App* solve_bsde = app.add_subcommand("solve-bsde", "backward regression solve");
    add_common(solve_bsde, true);
    CLI::App* verify = app.add_subcommand("verify", "run an invariant check suite");
    add_common(verify, false);
    verify->add_option("--suite", suite, "fast or full");
    CLI::App* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep");
    add_common(sweep, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (solve_pde->parsed()) return cmd_solve_pde(opts);
        if (solve_bsde->parsed()) return cmd_solve_bsde(opts);
        if (verify->parsed()) return cmd_verify(opts, suite);
        if (sweep->parsed()) return cmd_sweep(opts);
    } catch (const bblab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
