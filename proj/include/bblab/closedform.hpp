#pragma once

#include <vector>

#include "bblab/geometry.hpp"

namespace bblab {

/// Reaction term of the backward equation: f(y) = -kappa * y^{1+q} for the
/// power kind, or a tabulated nonincreasing C^1 function dominated by that
/// power envelope (f(y) <= -kappa * y^{1+q} for y >= 0). Beyond the last
/// table point the envelope itself is used, so tail integrals close.
struct GeneratorSpec {
    enum class Kind { power, tabulated };
    Kind kind = Kind::power;
    double q = 1.0;
    double kappa = 1.0;
    std::vector<double> table_y;   // tabulated: strictly increasing, table_y[0] >= 0
    std::vector<double> table_f;   // tabulated: f values at table_y

    static GeneratorSpec power(double q, double kappa = 1.0);
    static GeneratorSpec tabulated(std::vector<double> y, std::vector<double> f, double q,
                                   double kappa);

    /// f(y) for y >= 0 (linear interpolation between table points; the
    /// power envelope past the table end).
    double f(double y) const;

    /// Checks f(0) = 0, monotonicity and the envelope on the table points.
    void validate() const;
};

/// alpha_t = (q (tau - min(tau, t)) + xi^{-q})^{-1/q}; alpha_t = xi for
/// t >= tau. xi = +inf is allowed and gives (q (tau - t))^{-1/q}.
double ode_flow_alpha(double q, double xi, double tau, double t);

/// Setting for the a priori bound constant.
struct GeometryBounds {
    double theta_sup = 1.0;   // sup of the distance-like weight on the closure
    double grad_sup = 1.0;    // sup |∇θ| (1 for the restricted shapes)
    double trace_bound = 0.0; // bound on |Trace(σσ* D²θ)|
};

/// Minimal constant C with C^q = (4/q)(2/q + 1) + 4d/q, valid for Brownian
/// motion on a ball. The optional kappa rescales for generators
/// f(y) = -kappa y^{1+q} (bracket carries kappa C^q).
double keller_osserman_constant_ball(double q, int d, double kappa = 1.0);

/// Conservative constant for bounded drift/diffusion on the restricted
/// shapes: C^q = (2/q)(2/q+1) sigma_sup^2 + (2/q) theta_sup b_sup grad_sup
///            + (1/q) theta_sup trace_bound, all divided by kappa.
double keller_osserman_constant_generic(double q, double b_sup, double sigma_sup,
                                        const GeometryBounds& g, double kappa = 1.0);

/// Geometry bounds for the built-in shapes with theta = rho + eps
/// (ball curvature bounded on the near-boundary half of the radius).
GeometryBounds default_geometry_bounds(const Domain& domain, double sigma_sup, double eps = 0.0);

/// Majorant C / (rho + eps)^{2/q}; +inf when rho = eps = 0.
struct MajorantSpec {
    double constant = 1.0;
    double q = 1.0;
    double eps = 0.0;
};
double majorant_value(const MajorantSpec& spec, double rho);

/// F(y) = -int_y^inf dx / f(x). Closed form y^{-q}/(kappa q) for the power
/// kind; adaptive quadrature (relative tolerance 1e-10) for tabulated.
double f_transform(const GeneratorSpec& gen, double y);

/// Unique y > 0 with F(y) = v; closed form for power, bisection to
/// relative tolerance 1e-12 for tabulated.
double f_transform_inverse(const GeneratorSpec& gen, double v);

/// F(y) by adaptive quadrature of 1/(-f) regardless of kind; the second
/// route of the closed-form/quadrature cross-check.
double f_transform_quadrature(const GeneratorSpec& gen, double y);

/// Deterministic flow: the Y with F(Y) = F(xi) + horizon (F(+inf) = 0).
/// For the power kind with kappa = 1 this equals ode_flow_alpha with
/// tau - t = horizon.
double general_flow(const GeneratorSpec& gen, double xi, double horizon);

/// Coefficient A of the exact half-line blow-up profile u(x) = A x^{-2/q}
/// solving (sigma^2/2) u'' = kappa u^{1+q}: A^q = (sigma^2/(kappa q))(2/q + 1).
double halfline_blowup_coefficient(double q, double sigma, double kappa = 1.0);

/// Eq.-style bracket certified nonnegative by the Keller-Osserman constant:
///   kappa C^q + (2θ/q)(∇θ·b) - (1/q)(2/q+1)|σ∇θ|² + (θ/q) Tr(σσ* D²θ)
/// evaluated for Brownian motion on a ball of radius R with the quadratic
/// weight θ_eps = (R² + eps - r²)/R, at radial coordinate r.
double ko_bracket_ball_quadratic(double q, int d, double C, double R, double r, double eps,
                                 double kappa = 1.0);

/// Same bracket with θ = ρ + eps on a d-dimensional ball (exact distance
/// derivatives; the curvature term blows up at the center, so this form is
/// meaningful on the near-boundary band only).
double ko_bracket_ball_distance(double q, int d, double C, double R, double rho, double eps,
                                double kappa = 1.0);

}  // namespace bblab
