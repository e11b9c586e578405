#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bblab/bsde.hpp"
#include "bblab/checks.hpp"
#include "bblab/closedform.hpp"
#include "bblab/coefficients.hpp"
#include "bblab/diffusion.hpp"
#include "bblab/pde.hpp"
#include "bblab/version.hpp"

namespace py = pybind11;
using namespace bblab;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
    const std::string s =
        py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return nlohmann::json::parse(s);
}

const char* region_name(Region r) {
    switch (r) {
        case Region::interior: return "interior";
        case Region::boundary: return "boundary";
        case Region::exterior: return "exterior";
    }
    return "?";
}

}  // namespace

PYBIND11_MODULE(bblab, m) {
    m.doc() = "killed-diffusion BSDE and boundary blow-up PDE laboratory";
    m.attr("__version__") = kVersion;
    m.attr("INF") = kInf;

    py::class_<Domain>(m, "Domain")
        .def_static("interval", &Domain::interval, py::arg("a"), py::arg("b"))
        .def_static("box", &Domain::box, py::arg("lo"), py::arg("hi"))
        .def_static("ball", &Domain::ball, py::arg("center"), py::arg("radius"))
        .def_property_readonly("dimension", &Domain::dimension)
        .def("contains",
             [](const Domain& d, const Point& x) { return region_name(d.contains(x)); })
        .def("distance_to_boundary",
             [](const Domain& d, const Point& x) { return d.distance_to_boundary(x); })
        .def("signed_distance",
             [](const Domain& d, const Point& x) { return d.signed_distance(x); })
        .def("project_to_boundary",
             [](const Domain& d, const Point& x) { return d.project_to_boundary(x); });

    py::class_<BoundaryData>(m, "BoundaryData")
        .def_static("constant", &BoundaryData::constant, py::arg("domain"), py::arg("value"))
        .def_static("interval_ends", &BoundaryData::interval_ends, py::arg("domain"),
                    py::arg("left"), py::arg("right"))
        .def("value_at", [](const BoundaryData& b, const Domain& d, const Point& p) {
            return b.value_at(d, p);
        })
        .def("distance_to_blowup", [](const BoundaryData& b, const Domain& d, const Point& p) {
            return distance_to_blowup(d, b, p);
        });

    py::class_<CoefficientField>(m, "CoefficientField")
        .def_static("brownian", &CoefficientField::brownian, py::arg("dim"))
        .def_static("constant_drift", &CoefficientField::constant_drift, py::arg("v"),
                    py::arg("sigma_scale") = 1.0)
        .def_static("linear_drift", &CoefficientField::linear_drift, py::arg("lam"),
                    py::arg("m"), py::arg("sigma_scale") = 1.0)
        .def_static("scalar_sigma", &CoefficientField::scalar_sigma, py::arg("dim"),
                    py::arg("s"))
        .def("declare_exact", &CoefficientField::declare_exact)
        .def_readwrite("k_bound", &CoefficientField::k_bound)
        .def_readwrite("alpha_ellipticity", &CoefficientField::alpha_ellipticity)
        .def_readwrite("k_lipschitz", &CoefficientField::k_lipschitz);

    py::class_<GeneratorSpec>(m, "GeneratorSpec")
        .def_static("power", &GeneratorSpec::power, py::arg("q"), py::arg("kappa") = 1.0)
        .def_static("tabulated", &GeneratorSpec::tabulated, py::arg("y"), py::arg("f"),
                    py::arg("q"), py::arg("kappa"))
        .def_readonly("q", &GeneratorSpec::q)
        .def_readonly("kappa", &GeneratorSpec::kappa)
        .def("f", &GeneratorSpec::f);

    // Closed-form oracles.
    m.def("ode_flow_alpha", &ode_flow_alpha, py::arg("q"), py::arg("xi"), py::arg("tau"),
          py::arg("t"));
    m.def("keller_osserman_constant_ball", &keller_osserman_constant_ball, py::arg("q"),
          py::arg("d"), py::arg("kappa") = 1.0);
    m.def("majorant_value",
          [](double constant, double q, double eps, double rho) {
              return majorant_value(MajorantSpec{constant, q, eps}, rho);
          },
          py::arg("constant"), py::arg("q"), py::arg("eps"), py::arg("rho"));
    m.def("f_transform", &f_transform);
    m.def("f_transform_inverse", &f_transform_inverse);
    m.def("general_flow", &general_flow, py::arg("gen"), py::arg("xi"), py::arg("horizon"));
    m.def("halfline_blowup_coefficient", &halfline_blowup_coefficient, py::arg("q"),
          py::arg("sigma"), py::arg("kappa") = 1.0);
    m.def("implicit_step", &implicit_step, py::arg("gen"), py::arg("dt"), py::arg("target"));

    // Killed-diffusion simulation.
    py::class_<McEstimate>(m, "McEstimate")
        .def_readonly("mean", &McEstimate::mean)
        .def_readonly("standard_error", &McEstimate::standard_error)
        .def_readonly("sample_count", &McEstimate::sample_count)
        .def_readonly("seed", &McEstimate::seed);

    py::class_<PathBatch>(m, "PathBatch")
        .def_readonly("tau_hat", &PathBatch::tau_hat)
        .def_readonly("exit_points", &PathBatch::exit_points)
        .def_property_readonly("exited",
                               [](const PathBatch& b) {
                                   std::vector<bool> v(b.exited.begin(), b.exited.end());
                                   return v;
                               })
        .def("unexited_count", &PathBatch::unexited_count);

    m.def("simulate_batch",
          [](const CoefficientField& f, const Domain& d, const Point& x, double dt,
             std::uint64_t seed, std::size_t n_paths, double t_max, int threads) {
              return simulate_batch(f, d, x, dt, seed, n_paths, t_max, threads);
          },
          py::arg("field"), py::arg("domain"), py::arg("x"), py::arg("dt"), py::arg("seed"),
          py::arg("n_paths"), py::arg("t_max") = 10.0, py::arg("threads") = 1);
    m.def("estimate_mean_exit_time", &estimate_mean_exit_time);
    m.def("estimate_exp_moment", &estimate_exp_moment);
    m.def("estimate_inverse_power_moment", &estimate_inverse_power_moment);
    m.def("check_coefficients", [](const CoefficientField& f, const Domain& d, int res) {
        return json_to_py(check_coefficients(f, d, res).to_json(true));
    });

    // Backward solvers.
    py::class_<BsdeRunConfig>(m, "BsdeRunConfig")
        .def_static("ode", &BsdeRunConfig::ode, py::arg("gen"), py::arg("xi"),
                    py::arg("horizon"), py::arg("dt"))
        .def_static("spatial", &BsdeRunConfig::spatial, py::arg("field"), py::arg("domain"),
                    py::arg("boundary"), py::arg("gen"), py::arg("start"), py::arg("dt"),
                    py::arg("n_paths"), py::arg("seed"), py::arg("truncation_n"))
        .def_readwrite("t_max", &BsdeRunConfig::t_max)
        .def_readwrite("bins", &BsdeRunConfig::bins)
        .def_readwrite("truncation_n", &BsdeRunConfig::truncation_n)
        .def_readwrite("unexited_threshold", &BsdeRunConfig::unexited_threshold)
        .def_readwrite("estimate_z", &BsdeRunConfig::estimate_z)
        .def_readwrite("z_weight_epsilon", &BsdeRunConfig::z_weight_epsilon)
        .def_readwrite("threads", &BsdeRunConfig::threads);

    py::class_<BsdeRun>(m, "BsdeRun")
        .def_readonly("y0_mean", &BsdeRun::y0_mean)
        .def_readonly("y0_stderr", &BsdeRun::y0_stderr)
        .def_readonly("unexited_fraction", &BsdeRun::unexited_fraction)
        .def("to_dict", [](const BsdeRun& r) { return json_to_py(r.to_json()); });

    m.def("solve_regression", &solve_regression);
    m.def("phi_residual", &phi_residual, py::arg("run"), py::arg("alpha_lower_bound"));
    m.def("xi_lower_bound",
          [](const CoefficientField& f, const Domain& d, const BoundaryData& b, const Point& x,
             const GeneratorSpec& g, double n, double dt, std::size_t n_paths,
             std::uint64_t seed, double t_max, double unexited_threshold, int threads) {
              return xi_lower_bound(f, d, b, x, g, n, dt, n_paths, seed, t_max,
                                    unexited_threshold, threads);
          },
          py::arg("field"), py::arg("domain"), py::arg("boundary"), py::arg("x"),
          py::arg("gen"), py::arg("truncation_n"), py::arg("dt"), py::arg("n_paths"),
          py::arg("seed"), py::arg("t_max") = 10.0, py::arg("unexited_threshold") = 1e-3,
          py::arg("threads") = 1);
    m.def("ladder_run",
          [](const BsdeRunConfig& c, const std::vector<double>& levels, double rel_tol) {
              return json_to_py(ladder_run(c, levels, rel_tol).to_json());
          },
          py::arg("config"), py::arg("levels"), py::arg("rel_tol") = 1e-3);
    m.def("weighted_z_diagnostic", &weighted_z_diagnostic, py::arg("run"), py::arg("eps"));

    // Finite differences.
    m.def("solve_pde",
          [](const Domain& domain, const CoefficientField& field, const GeneratorSpec& gen,
             const BoundaryData& boundary, const std::vector<int>& cells, double truncation_n) {
              EllipticProblem p{Grid(domain, cells), field, gen, boundary, truncation_n};
              SolutionField f = solve_truncated(p);
              py::dict out;
              out["u"] = f.u;
              out["residual"] = f.residual_norm;
              out["iterations"] = f.newton_iterations;
              return out;
          },
          py::arg("domain"), py::arg("field"), py::arg("gen"), py::arg("boundary"),
          py::arg("cells"), py::arg("truncation_n"));
    m.def("solve_pde_ladder",
          [](const Domain& domain, const CoefficientField& field, const GeneratorSpec& gen,
             const BoundaryData& boundary, const std::vector<int>& cells,
             const std::vector<double>& levels, double margin, double tol) {
              EllipticProblem p{Grid(domain, cells), field, gen, boundary, kInf};
              LadderResult lad = ladder_minimal(p, levels, margin, tol);
              py::dict out;
              out["u"] = lad.field.u;
              out["converged"] = lad.converged;
              py::list incs;
              for (const auto& l : lad.levels) incs.append(l.increment_sup);
              out["increments"] = incs;
              return out;
          },
          py::arg("domain"), py::arg("field"), py::arg("gen"), py::arg("boundary"),
          py::arg("cells"), py::arg("levels"), py::arg("margin") = 0.0,
          py::arg("tol") = 1e-3);

    // Invariant checks.
    m.def("run_check",
          [](const std::string& name, const py::object& config, std::uint64_t seed,
             int threads) {
              return json_to_py(run_check(name, py_to_json(config), seed, threads)
                                    .to_json(true));
          },
          py::arg("name"), py::arg("config") = py::dict(), py::arg("seed") = 1,
          py::arg("threads") = 1);
    m.def("run_suite",
          [](const std::string& suite, std::uint64_t seed, int threads) {
              py::list out;
              for (const auto& r : run_suite(suite, seed, threads))
                  out.append(json_to_py(r.to_json(true)));
              return out;
          },
          py::arg("suite"), py::arg("seed") = 1, py::arg("threads") = 1);
    m.def("check_names", [] {
        std::vector<std::string> names;
        for (const auto& e : CheckRegistry::instance().entries()) names.push_back(e.name);
        return names;
    });
}
