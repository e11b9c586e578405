// Acceptance suite: runs every criterion at its stated tolerance and
// prints one PASS/FAIL line each. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bblab/bsde.hpp"
#include "bblab/checks.hpp"
#include "bblab/closedform.hpp"
#include "bblab/pde.hpp"

using namespace bblab;

namespace {

struct Criterion {
    std::string label;
    double time_limit_s;
    std::function<bool(std::string&)> run;
};

bool check_runtime(double elapsed, double limit, std::string& detail) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "; %.1fs/%.0fs", elapsed, limit);
    detail += buf;
    return elapsed <= limit;
}

bool report_pass(const CheckReport& rep, std::string& detail) {
    if (rep.pass()) return true;
    for (const auto& g : rep.gates)
        if (!g.ok) {
            char buf[160];
            std::snprintf(buf, sizeof buf, " [%s: %.6g %s %.6g]", g.name.c_str(), g.lhs,
                          g.op.c_str(), g.rhs);
            detail += buf;
        }
    return false;
}

// 1. Pure-ODE backward scheme vs the analytic flow value 2/3.
bool crit_ode_flow(std::string& detail) {
    const GeneratorSpec g = GeneratorSpec::power(1.0, 1.0);
    auto y_at = [&](double dt) {
        return solve_regression(BsdeRunConfig::ode(g, 2.0, 1.0, dt)).y0_mean;
    };
    const double y = y_at(1e-3);
    const double err = std::abs(y - 2.0 / 3.0);
    const double ratio = std::abs(y_at(4e-3) - 2.0 / 3.0) / std::abs(y_at(2e-3) - 2.0 / 3.0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "|y0 - 2/3| = %.2e, dt-ratio = %.2f", err, ratio);
    detail = buf;
    return err <= 0.01 && ratio >= 1.6 && ratio <= 2.4;
}

// 2. Keller-Osserman bound with C = 16 on both representations.
bool crit_keller_osserman(std::string& detail) {
    const CheckReport rep =
        run_check("keller_osserman", CheckRegistry::instance().at("keller_osserman").full_config,
                  1, 1);
    char buf[96];
    std::snprintf(buf, sizeof buf, "max rho^2 u = %.3f vs C = 16",
                  rep.measured.at("pde_max_rho_weighted_u").value);
    detail = buf;
    return report_pass(rep, detail);
}

// 3. Blow-up boundary layer against the exact half-line profile (A = 1).
bool crit_boundary_layer(std::string& detail) {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::brownian(1);
    f.declare_exact(iv);
    EllipticProblem prob{Grid(iv, {4096}), std::move(f), GeneratorSpec::power(2.0, 1.0),
                         BoundaryData::interval_ends(iv, kInf, 1.0), kInf};
    std::vector<double> levels;
    for (int k = 0; k <= 14; ++k) levels.push_back(std::pow(2.0, k));
    const LadderResult lad = ladder_minimal(prob, levels, 0.0, 1e-4);

    double band_lo = kInf, band_hi = 0.0, xu_max = 0.0;
    for (std::size_t k = 1; k < lad.field.u.size() - 1; ++k) {
        const double x = prob.grid.node(k)[0];
        xu_max = std::max(xu_max, x * lad.field.u[k]);
        if (x >= 0.01 && x <= 0.03) {
            band_lo = std::min(band_lo, x * lad.field.u[k]);
            band_hi = std::max(band_hi, x * lad.field.u[k]);
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "x*u in [%.3f, %.3f] on [0.01,0.03], max x*u = %.3f",
                  band_lo, band_hi, xu_max);
    detail = buf;
    return band_lo >= 0.9 && band_hi <= 1.1 && xu_max <= std::sqrt(6.0) + 1e-9;
}

// 4. Flow lower bound below the ladder value (three points).
bool crit_xi_bound(std::string& detail) {
    const CheckReport rep =
        run_check("xi_bound", CheckRegistry::instance().at("xi_bound").full_config, 1, 1);
    detail = "flow lower bound vs ladder u at x in {0.25, 0.5, 0.75}";
    return report_pass(rep, detail);
}

// 5. Residual-identity sign, stochastic and deterministic.
bool crit_phi_sign(std::string& detail) {
    const CheckReport rep =
        run_check("phi_sign", CheckRegistry::instance().at("phi_sign").full_config, 1, 1);
    char buf[96];
    std::snprintf(buf, sizeof buf, "phi0 = %.4f +- %.4f", rep.measured.at("phi0").value,
                  rep.measured.at("phi0").stderr_est.value_or(0.0));
    detail = buf;
    return report_pass(rep, detail);
}

// 6. Two-sided exit-moment band across x.
bool crit_lemma3_band(std::string& detail) {
    const CheckReport rep =
        run_check("lemma3_band", CheckRegistry::instance().at("lemma3_band").full_config, 1, 1);
    detail = "rho^{2/q} E[tau^{-1/q}] band over x in {0.01..0.1}, q in {1,2}";
    return report_pass(rep, detail);
}

// 7. Degenerate field: the band must decay, failing the band criterion.
bool crit_degenerate(std::string& detail) {
    const CheckReport rep =
        run_check("degenerate_sigma", CheckRegistry::instance().at("degenerate_sigma").full_config,
                  1, 1);
    char buf[96];
    std::snprintf(buf, sizeof buf, "band(0.998) = %.4g (must be < 0.05)",
                  rep.measured.at("band_x0.998").value);
    detail = buf;
    return report_pass(rep, detail);
}

// 8. Cross-representation agreement for bounded data.
bool crit_cross_consistency(std::string& detail) {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField cf = CoefficientField::brownian(1);
    cf.declare_exact(iv);
    EllipticProblem prob{Grid(iv, {512}), cf, GeneratorSpec::power(1.0, 1.0),
                         BoundaryData::constant(iv, 1.0), 2.0};
    const SolutionField u = solve_truncated(prob);

    bool ok = true;
    detail = "|u - y0|:";
    for (double x : {0.25, 0.5, 0.75}) {
        BsdeRunConfig c = BsdeRunConfig::spatial(cf, iv, BoundaryData::constant(iv, 1.0),
                                                 GeneratorSpec::power(1.0, 1.0), {x}, 1e-3,
                                                 30000, 1, 2.0);
        c.t_max = 8.0;
        const BsdeRun run = solve_regression(c);
        const double uref = u.u[static_cast<std::size_t>(std::llround(x * 512))];
        const double diff = std::abs(run.y0_mean - uref);
        char buf[64];
        std::snprintf(buf, sizeof buf, " %.4f@%.2f", diff, x);
        detail += buf;
        ok = ok && diff <= 3.0 * run.y0_stderr + 0.05;
    }
    return ok;
}

// 9. Ladder monotonicity plus the comparison pair with its negative control.
bool crit_ladder_comparison(std::string& detail) {
    const CheckReport mono =
        run_check("ladder_monotone", CheckRegistry::instance().at("ladder_monotone").full_config,
                  1, 1);
    const CheckReport comp = run_check(
        "minimality_comparison", CheckRegistry::instance().at("minimality_comparison").full_config,
        1, 1);
    detail = "nodal ladder monotone; comparison ordered/equal/swapped";
    bool ok = report_pass(mono, detail);
    ok = report_pass(comp, detail) && ok;
    return ok;
}

// 10. General monotone generator (kappa = 2) reruns with the F-transform.
bool crit_general_generator(std::string& detail) {
    const CheckReport rep = run_check(
        "general_generator", CheckRegistry::instance().at("general_generator").full_config, 1, 1);
    char buf[96];
    std::snprintf(buf, sizeof buf, "ode err ok, F-quadrature rel err = %.1e",
                  rep.measured.at("f_quadrature_max_rel_err").value);
    detail = buf;
    return report_pass(rep, detail);
}

// 11. Byte-identical fast-suite reports across repeats and worker counts,
// each run inside its own two-minute budget.
bool crit_determinism(std::string& detail) {
    auto timed = [&](int threads, double& secs) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string out = reports_to_jsonl(run_suite("fast", 1, threads));
        secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    };
    double ta = 0.0, tb = 0.0, tc = 0.0;
    const std::string a = timed(1, ta);
    const std::string b = timed(1, tb);
    const std::string c = timed(4, tc);
    char buf[96];
    std::snprintf(buf, sizeof buf, "runs %.0fs/%.0fs/%.0fs, each < 120s", ta, tb, tc);
    detail = buf;
    return a == b && a == c && !a.empty() && ta < 120.0 && tb < 120.0 && tc < 120.0;
}

// 12. Weighted-Z diagnostic stability across truncation levels.
bool crit_weighted_z(std::string& detail) {
    const CheckReport rep =
        run_check("weighted_z", CheckRegistry::instance().at("weighted_z").full_config, 1, 1);
    char buf[96];
    std::snprintf(buf, sizeof buf, "median = %.4g, levels within factor 2",
                  rep.measured.at("diag_median").value);
    detail = buf;
    return report_pass(rep, detail);
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"ode-flow convergence", 1.0, crit_ode_flow},
        {"keller-osserman explicit constant", 120.0, crit_keller_osserman},
        {"blow-up layer vs half-line profile", 60.0, crit_boundary_layer},
        {"flow lower bound below ladder", 120.0, crit_xi_bound},
        {"residual identity sign", 60.0, crit_phi_sign},
        {"exit-moment band", 120.0, crit_lemma3_band},
        {"degenerate negative control", 1.0, crit_degenerate},
        {"cross-representation consistency", 180.0, crit_cross_consistency},
        {"ladder monotone + comparison", 60.0, crit_ladder_comparison},
        {"general generator (kappa = 2)", 180.0, crit_general_generator},
        {"determinism of the fast suite", 360.0, crit_determinism},
        {"weighted-Z stability", 300.0, crit_weighted_z},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = check_runtime(elapsed, criteria[i].time_limit_s, detail) && ok;
        std::printf("%s  criterion %2zu: %s (%s)\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].label.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures == 0) {
        std::printf("ACCEPTANCE: all %zu criteria pass\n", criteria.size());
        return 0;
    }
    std::printf("ACCEPTANCE: %d of %zu criteria failed\n", failures, criteria.size());
    return 1;
}
