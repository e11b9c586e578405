#include <doctest.h>

#include <stdexcept>

#include <array>

#include "bblab/coefficients.hpp"
#include "bblab/diffusion.hpp"

using namespace bblab;

TEST_CASE("family evaluations") {
    const Domain iv = Domain::interval(0.0, 1.0);
    std::array<double, 1> b{}, s{};
    double x = 0.25;

    CoefficientField br = CoefficientField::brownian(1);
    br.drift({&x, 1}, b);
    br.sigma_diag({&x, 1}, s);
    CHECK(b[0] == 0.0);
    CHECK(s[0] == 1.0);

    CoefficientField cd = CoefficientField::constant_drift({2.0}, 0.5);
    cd.drift({&x, 1}, b);
    cd.sigma_diag({&x, 1}, s);
    CHECK(b[0] == 2.0);
    CHECK(s[0] == 0.5);

    CoefficientField ld = CoefficientField::linear_drift(2.0, {0.5});
    ld.drift({&x, 1}, b);
    CHECK(b[0] == doctest::Approx(0.5));

    CoefficientField tab = CoefficientField::tabulated({0.0, 1.0}, {0.0, 1.0}, {1.0, 3.0});
    x = 0.5;
    tab.drift({&x, 1}, b);
    tab.sigma_diag({&x, 1}, s);
    CHECK(b[0] == doctest::Approx(0.5));
    CHECK(s[0] == doctest::Approx(2.0));
    (void)iv;
}

TEST_CASE("exact declared constants") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField br = CoefficientField::brownian(1);
    br.declare_exact(iv);
    CHECK(br.k_bound == 1.0);
    CHECK(br.alpha_ellipticity == 1.0);
    CHECK(br.k_lipschitz == 0.0);

    CoefficientField ld = CoefficientField::linear_drift(1.0, {0.5});
    ld.declare_exact(iv);
    CHECK(ld.k_bound == doctest::Approx(1.5));  // drift sup 0.5 + sigma 1
}

TEST_CASE("condition report: brownian passes with its exact constants") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField br = CoefficientField::brownian(1);
    br.declare_exact(iv);
    const CheckReport rep = check_coefficients(br, iv, 32);
    CHECK(rep.pass());
    CHECK(rep.measured.at("bound_measured").value == doctest::Approx(1.0));
    CHECK(rep.measured.at("alpha_measured").value == doctest::Approx(1.0));
}

TEST_CASE("condition report: the degenerate field fails ellipticity") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField deg = CoefficientField::constant_drift({1.0}, 0.0);
    deg.declare_exact(iv);
    const CheckReport rep = check_coefficients(deg, iv, 32);
    CHECK_FALSE(rep.pass());
    CHECK(rep.measured.at("alpha_measured").value == 0.0);
    bool bound_ok = false;
    for (const auto& g : rep.gates)
        if (g.name == "boundedness_B") bound_ok = g.ok;
    CHECK(bound_ok);
}

TEST_CASE("condition report: pass iff the declared bound covers the measured one") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField ld = CoefficientField::linear_drift(1.0, {0.5});
    ld.declare_exact(iv);
    CHECK(check_coefficients(ld, iv, 64).pass());
    ld.k_bound = 1.49;  // below the measured sup 1.5
    CHECK_FALSE(check_coefficients(ld, iv, 64).pass());
}

TEST_CASE("lipschitz estimate flags steep tabulated sigma") {
    const Domain iv = Domain::interval(0.0, 1.0);
    CoefficientField tab = CoefficientField::tabulated({0.0, 1.0}, {0.0, 0.0}, {1.0, 2.0});
    tab.declare_exact(iv);
    CHECK(check_coefficients(tab, iv, 32).pass());
    tab.k_lipschitz = 0.5;  // true slope is 1
    CHECK_FALSE(check_coefficients(tab, iv, 32).pass());
}
