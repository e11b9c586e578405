#include "bblab/config.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "bblab/version.hpp"

namespace bblab {

namespace {

double num_or_inf(const nlohmann::json& v, const char* what) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kInf;
        throw ConfigError(std::string(what) + ": expected a number or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError(std::string(what) + ": expected a number");
    return v.get<double>();
}

void warn_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                  const std::string& where, std::vector<std::string>* warnings) {
    if (!warnings || !obj.is_object()) return;
    for (const auto& [k, v] : obj.items())
        if (!known.count(k))
            warnings->push_back("unknown key \"" + where + "." + k + "\" ignored");
}

Domain parse_domain(const nlohmann::json& j, std::vector<std::string>* warnings) {
    warn_unknown(j, {"shape", "a", "b", "lo", "hi", "center", "radius"}, "domain", warnings);
    const std::string shape = j.at("shape");
    if (shape == "interval") return Domain::interval(j.at("a"), j.at("b"));
    if (shape == "box")
        return Domain::box(j.at("lo").get<std::vector<double>>(),
                           j.at("hi").get<std::vector<double>>());
    if (shape == "ball")
        return Domain::ball(j.at("center").get<std::vector<double>>(), j.at("radius"));
    throw ConfigError("domain.shape must be interval, box or ball");
}

CoefficientField parse_coefficients(const nlohmann::json& j, const Domain& domain,
                                    std::vector<std::string>* warnings) {
    warn_unknown(j,
                 {"family", "v", "lambda", "m", "sigma_scale", "s", "x", "b", "sigma",
                  "k_bound", "alpha_ellipticity", "k_lipschitz"},
                 "coefficients", warnings);
    const std::string family = j.at("family");
    CoefficientField f = [&] {
        if (family == "brownian") return CoefficientField::brownian(domain.dimension());
        if (family == "constant_drift")
            return CoefficientField::constant_drift(j.at("v").get<std::vector<double>>(),
                                                    j.value("sigma_scale", 1.0));
        if (family == "linear_drift")
            return CoefficientField::linear_drift(j.at("lambda"),
                                                  j.at("m").get<std::vector<double>>(),
                                                  j.value("sigma_scale", 1.0));
        if (family == "scalar_sigma")
            return CoefficientField::scalar_sigma(domain.dimension(), j.at("s"));
        if (family == "tabulated")
            return CoefficientField::tabulated(j.at("x").get<std::vector<double>>(),
                                               j.at("b").get<std::vector<double>>(),
                                               j.at("sigma").get<std::vector<double>>());
        throw ConfigError("unknown coefficient family: " + family);
    }();
    if (f.dimension() != domain.dimension())
        throw ConfigError("coefficient dimension does not match the domain");
    f.declare_exact(domain);
    if (j.contains("k_bound")) f.k_bound = j.at("k_bound");
    if (j.contains("alpha_ellipticity")) f.alpha_ellipticity = j.at("alpha_ellipticity");
    if (j.contains("k_lipschitz")) f.k_lipschitz = j.at("k_lipschitz");
    return f;
}

GeneratorSpec parse_generator(const nlohmann::json& j, std::vector<std::string>* warnings) {
    warn_unknown(j, {"kind", "q", "kappa", "y", "f"}, "generator", warnings);
    const std::string kind = j.value("kind", "power");
    if (kind == "power") return GeneratorSpec::power(j.at("q"), j.value("kappa", 1.0));
    if (kind == "tabulated")
        return GeneratorSpec::tabulated(j.at("y").get<std::vector<double>>(),
                                        j.at("f").get<std::vector<double>>(), j.at("q"),
                                        j.at("kappa"));
    throw ConfigError("generator.kind must be power or tabulated");
}

BoundaryRegion parse_region(const nlohmann::json& j, const Domain& domain) {
    const std::string type = j.at("type");
    if (type == "endpoint") {
        if (domain.shape() != Shape::interval)
            throw ConfigError("endpoint regions require an interval domain");
        const int which = j.at("which");
        if (which != 0 && which != 1) throw ConfigError("endpoint.which must be 0 or 1");
        return BoundaryRegion::interval_endpoint(which);
    }
    if (type == "face") {
        if (domain.shape() != Shape::box)
            throw ConfigError("face regions require a box domain");
        const int axis = j.at("axis");
        if (axis < 0 || axis >= domain.dimension())
            throw ConfigError("face.axis outside the domain dimension");
        const std::string side = j.at("side");
        if (side != "lo" && side != "hi") throw ConfigError("face.side must be lo or hi");
        if (j.contains("t0") || j.contains("t1"))
            return BoundaryRegion::box_face_segment(axis, side == "lo" ? 0 : 1,
                                                    j.value("t0", -kInf), j.value("t1", kInf));
        return BoundaryRegion::box_face(axis, side == "lo" ? 0 : 1);
    }
    if (type == "arc") {
        if (domain.shape() != Shape::ball || domain.dimension() != 2)
            throw ConfigError("arc regions require a 2-d ball domain");
        return BoundaryRegion::ball_arc(j.at("from"), j.at("to"));
    }
    throw ConfigError("region type must be endpoint, face or arc");
}

BoundaryData parse_boundary(const nlohmann::json& j, const Domain& domain,
                            std::vector<std::string>* warnings) {
    warn_unknown(j, {"default", "regions", "left", "right"}, "boundary", warnings);
    if (j.contains("left") || j.contains("right")) {
        if (domain.shape() != Shape::interval)
            throw ConfigError("boundary.left/right require an interval domain");
        return BoundaryData::interval_ends(domain,
                                           num_or_inf(j.at("left"), "boundary.left"),
                                           num_or_inf(j.at("right"), "boundary.right"));
    }
    std::vector<std::pair<BoundaryRegion, double>> regions;
    if (j.contains("regions"))
        for (const auto& r : j.at("regions"))
            regions.emplace_back(parse_region(r.at("where"), domain),
                                 num_or_inf(r.at("value"), "region.value"));
    const double fallback =
        j.contains("default") ? num_or_inf(j.at("default"), "boundary.default") : 0.0;
    return BoundaryData(domain, std::move(regions), fallback);
}

}  // namespace

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
}

ExperimentConfig parse_config(const nlohmann::json& j, std::vector<std::string>* warnings) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    warn_unknown(j, {"domain", "coefficients", "generator", "boundary", "solver", "outputs",
                     "sweep"},
                 "config", warnings);
    ExperimentConfig cfg;
    cfg.raw = j;
    if (j.contains("domain")) cfg.domain = parse_domain(j.at("domain"), warnings);
    if (j.contains("coefficients")) {
        if (!cfg.domain) throw ConfigError("coefficients require a domain");
        cfg.coefficients = parse_coefficients(j.at("coefficients"), *cfg.domain, warnings);
    }
    if (j.contains("generator")) cfg.generator = parse_generator(j.at("generator"), warnings);
    if (j.contains("boundary")) {
        if (!cfg.domain) throw ConfigError("boundary data requires a domain");
        cfg.boundary = parse_boundary(j.at("boundary"), *cfg.domain, warnings);
    }
    if (j.contains("outputs")) {
        warn_unknown(j.at("outputs"), {"prefix"}, "outputs", warnings);
        cfg.output_prefix = j.at("outputs").value("prefix", "run");
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        warn_unknown(s,
                     {"dt", "n_paths", "seed", "t_max", "grid_cells", "bins",
                      "truncation_levels", "truncation_n", "unexited_threshold", "ladder_tol",
                      "interior_margin", "start", "mode", "horizon", "xi", "estimate_z",
                      "z_weight_epsilon", "bootstrap_resamples", "alpha_lower_bound"},
                     "solver", warnings);
        SolverParams& p = cfg.solver;
        p.dt = s.value("dt", p.dt);
        p.n_paths = s.value("n_paths", p.n_paths);
        p.seed = s.value("seed", p.seed);
        p.t_max = s.value("t_max", p.t_max);
        if (s.contains("grid_cells")) p.grid_cells = s.at("grid_cells").get<std::vector<int>>();
        p.bins = s.value("bins", p.bins);
        if (s.contains("truncation_levels"))
            p.truncation_levels = s.at("truncation_levels").get<std::vector<double>>();
        if (s.contains("truncation_n"))
            p.truncation_n = num_or_inf(s.at("truncation_n"), "solver.truncation_n");
        p.unexited_threshold = s.value("unexited_threshold", p.unexited_threshold);
        p.ladder_tol = s.value("ladder_tol", p.ladder_tol);
        p.interior_margin = s.value("interior_margin", p.interior_margin);
        if (s.contains("start")) p.start = s.at("start").get<Point>();
        p.pure_ode = s.value("mode", "spatial") == "pure_ode";
        p.horizon = s.value("horizon", p.horizon);
        if (s.contains("xi")) p.xi = num_or_inf(s.at("xi"), "solver.xi");
        p.estimate_z = s.value("estimate_z", p.estimate_z);
        p.z_weight_epsilon = s.value("z_weight_epsilon", p.z_weight_epsilon);
        p.bootstrap_resamples = s.value("bootstrap_resamples", p.bootstrap_resamples);
        p.alpha_lower_bound = s.value("alpha_lower_bound", p.alpha_lower_bound);
    }
    // Cross-references must resolve.
    if (cfg.boundary && cfg.domain && !cfg.solver.start.empty()) {
        if (static_cast<int>(cfg.solver.start.size()) != cfg.domain->dimension())
            throw ConfigError("solver.start dimension does not match the domain");
    }
    if (!(cfg.solver.dt > 0.0)) throw ConfigError("solver.dt must be positive");
    for (std::size_t i = 1; i < cfg.solver.truncation_levels.size(); ++i)
        if (!(cfg.solver.truncation_levels[i] > cfg.solver.truncation_levels[i - 1]))
            throw ConfigError("solver.truncation_levels must increase strictly");
    return cfg;
}

std::string config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json make_manifest(const nlohmann::json& config, std::uint64_t seed,
                             const std::vector<std::string>& outputs) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return {{"config_hash", config_hash(config)},
            {"artifact_version", kVersion},
            {"seed", seed},
            {"created", stamp},
            {"outputs", outputs}};
}

BsdeRunConfig to_bsde_config(const ExperimentConfig& cfg, int threads) {
    const SolverParams& p = cfg.solver;
    if (p.pure_ode) {
        BsdeRunConfig c = BsdeRunConfig::ode(cfg.generator, p.xi, p.horizon, p.dt);
        c.truncation_n = p.truncation_n;
        c.seed = p.seed;
        return c;
    }
    if (!cfg.domain || !cfg.coefficients || !cfg.boundary)
        throw ConfigError("spatial solve needs domain, coefficients and boundary");
    if (p.start.empty()) throw ConfigError("spatial solve needs solver.start");
    BsdeRunConfig c = BsdeRunConfig::spatial(*cfg.coefficients, *cfg.domain, *cfg.boundary,
                                             cfg.generator, p.start, p.dt, p.n_paths, p.seed,
                                             p.truncation_n);
    c.t_max = p.t_max;
    c.bins = p.bins;
    c.unexited_threshold = p.unexited_threshold;
    c.estimate_z = p.estimate_z;
    c.z_weight_epsilon = p.z_weight_epsilon;
    c.bootstrap_resamples = p.bootstrap_resamples;
    c.threads = threads;
    return c;
}

}  // namespace bblab
