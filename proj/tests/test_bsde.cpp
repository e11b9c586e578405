#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "bblab/bsde.hpp"
#include "bblab/pde.hpp"
#include "support/exit_time_oracle.hpp"

using namespace bblab;

namespace {
BsdeRunConfig brownian_cfg(double q, double x, double dt, std::size_t n_paths,
                           std::uint64_t seed, const BoundaryData& bd, double n) {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::brownian(1);
    f.declare_exact(iv);
    BsdeRunConfig c = BsdeRunConfig::spatial(std::move(f), iv, bd, GeneratorSpec::power(q, 1.0),
                                             {x}, dt, n_paths, seed, n);
    c.t_max = 8.0;
    return c;
}
}  // namespace

TEST_CASE("implicit step solves its scalar equation") {
    CHECK(implicit_step(GeneratorSpec::power(1.0, 1.0), 0.5, 1.5) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(implicit_step(GeneratorSpec::power(1.0, 1.0), 0.5, 0.0) == 0.0);
    CHECK(implicit_step(GeneratorSpec::power(2.0, 1.0), 1.0, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // Residual contract.
    for (double dt : {1e-3, 0.1, 2.0})
        for (double target : {1e-6, 0.5, 3.0, 500.0}) {
            const GeneratorSpec g = GeneratorSpec::power(1.5, 2.0);
            const double y = implicit_step(g, dt, target);
            CHECK(std::abs(y - dt * g.f(y) - target) <= 1e-12 * (1.0 + target));
        }
}

TEST_CASE("implicit step is monotone in target and dt") {
    const GeneratorSpec g = GeneratorSpec::power(1.0, 1.0);
    double prev = 0.0;
    for (double target : {0.1, 0.5, 1.0, 2.0, 8.0}) {
        const double y = implicit_step(g, 0.25, target);
        CHECK(y >= prev);
        prev = y;
    }
    double prev_dt = kInf;
    for (double dt : {0.01, 0.1, 1.0, 10.0}) {
        const double y = implicit_step(g, dt, 2.0);
        CHECK(y <= prev_dt);
        prev_dt = y;
    }
}

TEST_CASE("implicit step handles tabulated generators") {
    std::vector<double> ys, fs;
    for (int i = 0; i <= 400; ++i) {
        const double y = 1e-3 * std::pow(1e7, i / 400.0);
        ys.push_back(y);
        fs.push_back(-y * y);
    }
    const GeneratorSpec tab = GeneratorSpec::tabulated(ys, fs, 1.0, 1.0);
    const double y = implicit_step(tab, 0.5, 1.5);
    CHECK(y - 0.5 * tab.f(y) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("pure-ODE mode reproduces the deterministic flow at first order") {
    const GeneratorSpec g = GeneratorSpec::power(1.0, 1.0);
    const BsdeRun run = solve_regression(BsdeRunConfig::ode(g, 2.0, 1.0, 1e-3));
    CHECK(std::abs(run.y0_mean - 2.0 / 3.0) <= 0.01);
    CHECK(run.y0_stderr == 0.0);

    // O(dt) convergence: halving dt halves the error.
    auto err = [&](double dt) {
        return std::abs(solve_regression(BsdeRunConfig::ode(g, 2.0, 1.0, dt)).y0_mean -
                        2.0 / 3.0);
    };
    const double r1 = err(4e-3) / err(2e-3);
    const double r2 = err(2e-3) / err(1e-3);
    CHECK(r1 >= 1.6);
    CHECK(r1 <= 2.4);
    CHECK(r2 >= 1.6);
    CHECK(r2 <= 2.4);
}

TEST_CASE("deterministic transport reduces the scheme to the flow") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::constant_drift({1.0}, 0.0);
    f.declare_exact(iv);
    const double dt = 1e-3;
    BsdeRunConfig c = BsdeRunConfig::spatial(std::move(f), iv, BoundaryData::constant(iv, 3.0),
                                             GeneratorSpec::power(1.0, 1.0), {0.3}, dt, 32, 1,
                                             8.0);
    c.t_max = 2.0;
    const BsdeRun run = solve_regression(c);
    const double exact = general_flow(GeneratorSpec::power(1.0, 1.0), 3.0, 0.7);
    CHECK(std::abs(run.y0_mean - exact) <= 10.0 * dt);
    CHECK(run.y0_stderr == 0.0);
    CHECK(run.unexited_fraction == 0.0);
}

TEST_CASE("pathwise flow lower bound on deterministic exits") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::constant_drift({1.0}, 0.0);
    f.declare_exact(iv);
    const GeneratorSpec g = GeneratorSpec::power(1.0, 1.0);

    // tau = 0.5 exactly, g = +inf: alpha_0 = 1/tau = 2.
    const McEstimate a = xi_lower_bound(f, iv, BoundaryData::constant(iv, kInf), {{0.5}}, g,
                                        kInf, 1e-3, 16, 1);
    CHECK(a.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(a.standard_error == 0.0);

    // Finite data c: alpha_0 = (tau + 1/c)^{-1}.
    const McEstimate b = xi_lower_bound(f, iv, BoundaryData::constant(iv, 4.0), {{0.5}}, g,
                                        kInf, 1e-3, 16, 1);
    CHECK(b.mean == doctest::Approx(1.0 / (0.5 + 0.25)).epsilon(1e-12));

    const double edge = 0.0;
    CHECK_THROWS_AS((void)xi_lower_bound(f, iv, BoundaryData::constant(iv, kInf), {&edge, 1},
                                         g, kInf, 1e-3, 4, 1),
                    std::invalid_argument);
}

TEST_CASE("flow lower bound matches the quadrature oracle for Brownian exits") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::brownian(1);
    f.declare_exact(iv);
    const GeneratorSpec g = GeneratorSpec::power(1.0, 1.0);
    const double dt = 2e-5;
    // q = 1, g = +inf: E[(q tau)^{-1/q}] = E[1/tau].
    const McEstimate est = xi_lower_bound(f, iv, BoundaryData::constant(iv, kInf), {{0.5}}, g,
                                          kInf, dt, 40000, 7);
    const double exact = oracle::inverse_power_exit_moment(0.5, 1.0);
    const double bias = 0.5826 * std::sqrt(dt) / 0.25 * exact;
    CHECK(std::abs(est.mean - exact) <= 3.0 * est.standard_error + bias);
}

TEST_CASE("Jensen inequality holds exactly on every batch") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField f = CoefficientField::brownian(1);
    f.declare_exact(iv);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const PathBatch batch = simulate_batch(f, iv, {{0.5}}, 1e-3, seed, 2000, 30.0);
        for (double q : {1.0, 2.0}) {
            const double c = 0.3;
            double mean_phi = 0.0, mean_lin = 0.0;
            for (double tau : batch.tau_hat) {
                mean_phi += std::pow(q * tau + c, -1.0 / q);
                mean_lin += q * tau + c;
            }
            mean_phi /= static_cast<double>(batch.size());
            mean_lin /= static_cast<double>(batch.size());
            CHECK(mean_phi >= std::pow(mean_lin, -1.0 / q));
        }
    }
}

TEST_CASE("regression solve against the finite-difference field (bounded data)") {
    const Domain iv = Domain::interval(0.0, 1.0);
    const double q = 1.0;
    CoefficientField cf = CoefficientField::brownian(1);
    cf.declare_exact(iv);
    EllipticProblem prob{Grid(iv, {256}), cf, GeneratorSpec::power(q, 1.0),
                         BoundaryData::constant(iv, 1.0), 2.0};
    const SolutionField u = solve_truncated(prob);

    BsdeRunConfig c = brownian_cfg(q, 0.5, 1e-3, 20000, 11,
                                   BoundaryData::constant(iv, 1.0), 2.0);
    const BsdeRun run = solve_regression(c);
    const double u_mid = u.u[128];
    CHECK(std::abs(run.y0_mean - u_mid) <= 3.0 * run.y0_stderr + 0.05);
    CHECK(run.y0_stderr > 0.0);
    CHECK(run.unexited_fraction <= 1e-3);
}

TEST_CASE("residual identity: zero in deterministic mode, nonnegative with noise") {
    // Transport: Z vanishes so the residual is O(dt).
    {
        const Domain iv = Domain::interval(0.0, 1.0);
        CoefficientField f = CoefficientField::constant_drift({1.0}, 0.0);
        f.declare_exact(iv);
        const double dt = 1e-3;
        BsdeRunConfig c = BsdeRunConfig::spatial(std::move(f), iv,
                                                 BoundaryData::constant(iv, 1.0),
                                                 GeneratorSpec::power(1.0, 1.0), {0.3}, dt, 32,
                                                 1, 4.0);
        c.t_max = 2.0;
        const BsdeRun run = solve_regression(c);
        const McEstimate phi = phi_residual(run, 1.0);
        CHECK(std::abs(phi.mean) <= 5.0 * dt);
        CHECK(phi.standard_error == 0.0);
    }
    // Brownian run: nonnegative within three standard errors.
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 1e-3, 20000, 3,
                                       BoundaryData::constant(Domain::interval(0.0, 1.0), 1.0),
                                       2.0);
        const BsdeRun run = solve_regression(c);
        const McEstimate phi = phi_residual(run, 1.0);
        CHECK(phi.mean >= -3.0 * phi.standard_error);
    }
    // Declared alpha must be positive and actually bound the data.
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 1e-2, 64, 3,
                                       BoundaryData::constant(Domain::interval(0.0, 1.0), 1.0),
                                       2.0);
        const BsdeRun run = solve_regression(c);
        CHECK_THROWS_AS((void)phi_residual(run, 0.0), std::invalid_argument);
        CHECK_THROWS_AS((void)phi_residual(run, 1.5), std::invalid_argument);
    }
}

TEST_CASE("truncation ladder behavior") {
    const Domain iv = Domain::interval(0.0, 1.0);
    // Bounded data: every level above sup g gives the identical run.
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 2e-3, 4000, 5,
                                       BoundaryData::constant(iv, 1.0), kInf);
        const TruncationLadder lad = ladder_run(c, {1.0, 2.0, 4.0});
        CHECK(lad.runs[0].y0_mean == lad.runs[1].y0_mean);
        CHECK(lad.runs[1].y0_mean == lad.runs[2].y0_mean);
        CHECK(lad.monotonicity_violations == 0);
        CHECK(lad.stabilized);
    }
    // Singular data on one endpoint: strictly increasing, no violations.
    // Convergence at a fixed point is only polynomial in n, so the
    // stabilization declaration follows the configured tolerance.
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 2e-3, 4000, 5,
                                       BoundaryData::interval_ends(iv, kInf, 1.0), kInf);
        const std::vector<double> levels{1.0, 4.0, 16.0, 64.0, 256.0, 1024.0};
        const TruncationLadder lad = ladder_run(c, levels);
        CHECK(lad.runs[1].y0_mean > lad.runs[0].y0_mean);
        CHECK(lad.monotonicity_violations == 0);
        CHECK_FALSE(lad.stabilized);  // 0.1% is far below the ladder deficit here
        CHECK(ladder_run(c, levels, 0.35).stabilized);
    }
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 1e-2, 128, 5,
                                       BoundaryData::constant(iv, 1.0), kInf);
        CHECK_THROWS_AS((void)ladder_run(c, {4.0, 2.0}), std::invalid_argument);
    }
}

TEST_CASE("reproducibility across worker counts") {
    BsdeRunConfig c = brownian_cfg(1.0, 0.5, 2e-3, 3000, 17,
                                   BoundaryData::constant(Domain::interval(0.0, 1.0), 1.0),
                                   2.0);
    c.threads = 1;
    const BsdeRun r1 = solve_regression(c);
    c.threads = 4;
    const BsdeRun r4 = solve_regression(c);
    CHECK(r1.y0_mean == r4.y0_mean);
    CHECK(r1.y0_stderr == r4.y0_stderr);
    CHECK(r1.tau_mean.mean == r4.tau_mean.mean);
}

TEST_CASE("weighted Z diagnostic") {
    const Domain iv = Domain::interval(0.0, 1.0);
    // sigma = 0 forces the diagnostic to vanish identically.
    {
        CoefficientField f = CoefficientField::constant_drift({1.0}, 0.0);
        f.declare_exact(iv);
        BsdeRunConfig c = BsdeRunConfig::spatial(std::move(f), iv,
                                                 BoundaryData::constant(iv, 1.0),
                                                 GeneratorSpec::power(1.0, 1.0), {0.3}, 1e-3,
                                                 32, 1, 2.0);
        c.t_max = 2.0;
        c.estimate_z = true;
        c.z_weight_epsilon = 2.0;
        const BsdeRun run = solve_regression(c);
        const McEstimate z = weighted_z_diagnostic(run, 2.0);
        CHECK(z.mean == 0.0);
        CHECK(z.standard_error == 0.0);
    }
    // Missing Z estimates and the epsilon > 1 precondition are errors.
    {
        BsdeRunConfig c = brownian_cfg(1.0, 0.5, 5e-3, 500, 2,
                                       BoundaryData::constant(iv, 1.0), 2.0);
        const BsdeRun run = solve_regression(c);
        CHECK_THROWS_AS((void)weighted_z_diagnostic(run, 2.0), std::invalid_argument);
        c.estimate_z = true;
        c.z_weight_epsilon = 2.0;
        const BsdeRun with_z = solve_regression(c);
        CHECK_THROWS_AS((void)weighted_z_diagnostic(with_z, 1.0), std::invalid_argument);
        CHECK(weighted_z_diagnostic(with_z, 2.0).mean >= 0.0);
    }
}

TEST_CASE("unexited fraction above the threshold is an error") {
    BsdeRunConfig c = brownian_cfg(1.0, 0.5, 1e-3, 500, 2,
                                   BoundaryData::constant(Domain::interval(0.0, 1.0), 1.0),
                                   2.0);
    c.t_max = 0.01;
    CHECK_THROWS_AS((void)solve_regression(c), std::runtime_error);
    c.t_max = 0.05;
    c.unexited_threshold = 1.0;  // tolerate them: the run reports the bracket
    const BsdeRun run = solve_regression(c);
    CHECK(run.unexited_fraction > 0.0);
    CHECK(run.diagnostics.contains("y0_unexited_low"));
    CHECK(run.diagnostics.contains("y0_unexited_high"));
    CHECK(run.diagnostics["y0_unexited_high"].get<double>() >=
          run.diagnostics["y0_unexited_low"].get<double>());
}

TEST_CASE("run JSON carries the fixed fields") {
    BsdeRunConfig c = brownian_cfg(1.0, 0.5, 5e-3, 200, 2,
                                   BoundaryData::constant(Domain::interval(0.0, 1.0), 1.0),
                                   2.0);
    const nlohmann::json j = solve_regression(c).to_json();
    for (const char* key :
         {"config", "y0_mean", "y0_stderr", "unexited_fraction", "per_level", "phi0",
          "diagnostics"})
        CHECK(j.contains(key));
}
