#include <doctest.h>

#include "bblab/config.hpp"

using namespace bblab;
using nlohmann::json;

namespace {
json minimal_spatial() {
    return json::parse(R"({
      "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
      "coefficients": {"family": "brownian"},
      "generator": {"kind": "power", "q": 1.0},
      "boundary": {"left": "inf", "right": 1.0},
      "solver": {"dt": 0.001, "n_paths": 100, "seed": 3, "start": [0.5],
                 "truncation_n": 8.0}
    })");
}
}  // namespace

TEST_CASE("minimal config parses with exact declared constants") {
    std::vector<std::string> warnings;
    const ExperimentConfig cfg = parse_config(minimal_spatial(), &warnings);
    CHECK(warnings.empty());
    CHECK(cfg.domain->shape() == Shape::interval);
    CHECK(cfg.coefficients->k_bound == 1.0);
    CHECK(cfg.boundary->blowup().empty() == false);
    CHECK(cfg.solver.seed == 3);
    CHECK(cfg.solver.truncation_n == 8.0);
}

TEST_CASE("unknown keys warn and are ignored") {
    json j = minimal_spatial();
    j["solver"]["frobnicate"] = true;
    j["extra_top_level"] = 1;
    std::vector<std::string> warnings;
    (void)parse_config(j, &warnings);
    CHECK(warnings.size() == 2);
}

TEST_CASE("validation failures raise config errors") {
    json j = minimal_spatial();
    j["solver"]["dt"] = 0.0;
    CHECK_THROWS_AS((void)parse_config(j, nullptr), ConfigError);

    j = minimal_spatial();
    j["solver"]["start"] = {0.5, 0.5};
    CHECK_THROWS_AS((void)parse_config(j, nullptr), ConfigError);

    j = minimal_spatial();
    j["solver"]["truncation_levels"] = {4.0, 2.0};
    CHECK_THROWS_AS((void)parse_config(j, nullptr), ConfigError);

    j = minimal_spatial();
    j["boundary"] = {{"left", "infinity"}, {"right", 1.0}};
    CHECK_THROWS_AS((void)parse_config(j, nullptr), ConfigError);

    j = minimal_spatial();
    j["domain"] = {{"shape", "triangle"}};
    CHECK_THROWS_AS((void)parse_config(j, nullptr), ConfigError);
}

TEST_CASE("region parsing covers faces and arcs") {
    json j = json::parse(R"({
      "domain": {"shape": "ball", "center": [0.0, 0.0], "radius": 1.0},
      "coefficients": {"family": "brownian"},
      "boundary": {"default": 1.0,
                   "regions": [{"where": {"type": "arc", "from": 0.0, "to": 1.0},
                                "value": "inf"}]}
    })");
    const ExperimentConfig cfg = parse_config(j, nullptr);
    CHECK_FALSE(cfg.boundary->blowup().empty());

    json bad = j;
    bad["boundary"]["regions"][0]["where"]["type"] = "endpoint";
    CHECK_THROWS_AS((void)parse_config(bad, nullptr), ConfigError);
}

TEST_CASE("config hash is stable under key reordering") {
    const json a = json::parse(R"({"x": 1, "y": {"a": 2, "b": 3}})");
    const json b = json::parse(R"({"y": {"b": 3, "a": 2}, "x": 1})");
    CHECK(config_hash(a) == config_hash(b));
    json c = a;
    c["x"] = 2;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("manifests record hash, version, seed and outputs") {
    const json m = make_manifest(minimal_spatial(), 9, {"a.csv", "b.json"});
    CHECK(m.at("config_hash").get<std::string>().size() == 16);
    CHECK(m.at("seed") == 9);
    CHECK(m.at("outputs").size() == 2);
    CHECK(m.contains("artifact_version"));
    CHECK(m.contains("created"));
}

TEST_CASE("bsde config assembly for both modes") {
    const ExperimentConfig spatial = parse_config(minimal_spatial(), nullptr);
    const BsdeRunConfig sc = to_bsde_config(spatial, 2);
    CHECK_FALSE(sc.pure_ode);
    CHECK(sc.threads == 2);
    CHECK(sc.truncation_n == 8.0);

    json j = json::parse(R"({
      "generator": {"kind": "power", "q": 1.0},
      "solver": {"mode": "pure_ode", "xi": 2.0, "horizon": 1.0, "dt": 0.001}
    })");
    const BsdeRunConfig oc = to_bsde_config(parse_config(j, nullptr), 1);
    CHECK(oc.pure_ode);
    CHECK(oc.ode_xi == 2.0);

    json missing = minimal_spatial();
    missing.erase("boundary");
    CHECK_THROWS_AS((void)to_bsde_config(parse_config(missing, nullptr), 1), ConfigError);
}
