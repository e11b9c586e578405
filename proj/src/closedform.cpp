#include "bblab/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bblab {

GeneratorSpec GeneratorSpec::power(double q, double kappa) {
    if (!(q > 0.0)) throw std::invalid_argument("generator requires q > 0");
    if (kappa < 0.0) throw std::invalid_argument("generator requires kappa >= 0");
    GeneratorSpec g;
    g.kind = Kind::power;
    g.q = q;
    g.kappa = kappa;
    return g;
}

GeneratorSpec GeneratorSpec::tabulated(std::vector<double> y, std::vector<double> f, double q,
                                       double kappa) {
    if (!(q > 0.0) || !(kappa > 0.0))
        throw std::invalid_argument("tabulated generator requires q > 0 and kappa > 0");
    if (y.size() != f.size() || y.size() < 2)
        throw std::invalid_argument("tabulated generator needs at least two samples");
    GeneratorSpec g;
    g.kind = Kind::tabulated;
    g.q = q;
    g.kappa = kappa;
    g.table_y = std::move(y);
    g.table_f = std::move(f);
    g.validate();
    return g;
}

double GeneratorSpec::f(double y) const {
    if (y < 0.0) throw std::invalid_argument("generator evaluated at y < 0");
    if (kind == Kind::power) return -kappa * std::pow(y, 1.0 + q);
    if (y >= table_y.back()) return -kappa * std::pow(y, 1.0 + q);
    if (y <= table_y.front()) {
        // Interpolate toward f(0) = 0.
        const double y0 = table_y.front();
        return y0 > 0.0 ? table_f.front() * (y / y0) : table_f.front();
    }
    const auto it = std::upper_bound(table_y.begin(), table_y.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - table_y.begin());
    const double t = (y - table_y[i - 1]) / (table_y[i] - table_y[i - 1]);
    return table_f[i - 1] + t * (table_f[i] - table_f[i - 1]);
}

void GeneratorSpec::validate() const {
    if (kind == Kind::power) return;
    for (std::size_t i = 1; i < table_y.size(); ++i) {
        if (!(table_y[i] > table_y[i - 1]))
            throw std::invalid_argument("tabulated generator ordinates must increase");
        if (table_f[i] > table_f[i - 1] + 1e-15)
            throw std::invalid_argument("tabulated generator must be nonincreasing");
    }
    if (table_y.front() < 0.0)
        throw std::invalid_argument("tabulated generator ordinates must be >= 0");
    for (std::size_t i = 0; i < table_y.size(); ++i) {
        const double envelope = -kappa * std::pow(table_y[i], 1.0 + q);
        if (table_f[i] > envelope + 1e-12 * (1.0 + std::abs(envelope)))
            throw std::invalid_argument("tabulated generator violates the power envelope at y = " +
                                        std::to_string(table_y[i]));
    }
}

double ode_flow_alpha(double q, double xi, double tau, double t) {
    if (!(q > 0.0)) throw std::invalid_argument("ode_flow_alpha requires q > 0");
    if (t >= tau) return xi;
    const double base = q * (tau - std::min(tau, t)) + std::pow(xi, -q);
    return std::pow(base, -1.0 / q);
}

double keller_osserman_constant_ball(double q, int d, double kappa) {
    if (!(q > 0.0)) throw std::invalid_argument("keller_osserman_constant requires q > 0");
    if (d < 1) throw std::invalid_argument("keller_osserman_constant requires d >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("keller_osserman_constant requires kappa > 0");
    const double cq = (4.0 / q) * (2.0 / q + 1.0) + 4.0 * d / q;
    return std::pow(cq / kappa, 1.0 / q);
}

double keller_osserman_constant_generic(double q, double b_sup, double sigma_sup,
                                        const GeometryBounds& g, double kappa) {
    if (!(q > 0.0)) throw std::invalid_argument("keller_osserman_constant requires q > 0");
    if (!(kappa > 0.0)) throw std::invalid_argument("keller_osserman_constant requires kappa > 0");
    const double cq = (2.0 / q) * (2.0 / q + 1.0) * sigma_sup * sigma_sup * g.grad_sup * g.grad_sup +
                      (2.0 / q) * g.theta_sup * b_sup * g.grad_sup +
                      (1.0 / q) * g.theta_sup * g.trace_bound;
    return std::pow(cq / kappa, 1.0 / q);
}

GeometryBounds default_geometry_bounds(const Domain& domain, double sigma_sup, double eps) {
    GeometryBounds g;
    g.grad_sup = 1.0;
    switch (domain.shape()) {
        case Shape::interval:
            g.theta_sup = 0.5 * (domain.b() - domain.a()) + eps;
            g.trace_bound = 0.0;  // rho is piecewise linear
            break;
        case Shape::box: {
            double m = kInf;
            for (std::size_t i = 0; i < domain.lo().size(); ++i)
                m = std::min(m, 0.5 * (domain.hi()[i] - domain.lo()[i]));
            g.theta_sup = m + eps;
            g.trace_bound = 0.0;  // rho is piecewise linear off the ridge set
            break;
        }
        case Shape::ball: {
            const double R = domain.radius();
            const int d = domain.dimension();
            g.theta_sup = R + eps;
            // |Tr(σσ* D²ρ)| <= sigma² (d-1)/|x-c|, bounded on |x-c| >= R/2.
            g.trace_bound = sigma_sup * sigma_sup * 2.0 * (d - 1) / R;
            break;
        }
    }
    return g;
}

double majorant_value(const MajorantSpec& spec, double rho) {
    if (rho < 0.0) throw std::invalid_argument("majorant_value requires rho >= 0");
    const double t = rho + spec.eps;
    if (t == 0.0) return kInf;
    return spec.constant / std::pow(t, 2.0 / spec.q);
}

namespace {

// Adaptive Simpson on [a, b] with absolute tolerance tol.
template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double f_transform(const GeneratorSpec& gen, double y) {
    if (!(y > 0.0)) throw std::invalid_argument("f_transform requires y > 0");
    if (gen.kind == GeneratorSpec::Kind::power)
        return std::pow(y, -gen.q) / (gen.kappa * gen.q);

    // Tail beyond the table is the power envelope, integrated in closed form.
    const double end = std::max(y, gen.table_y.back());
    const double tail = std::pow(end, -gen.q) / (gen.kappa * gen.q);
    if (y >= gen.table_y.back()) return tail;

    const auto integrand = [&](double x) {
        const double fx = gen.f(x);
        if (fx >= 0.0)
            throw std::runtime_error("f_transform: generator not negative at x = " +
                                     std::to_string(x) + "; integral diverges");
        return -1.0 / fx;
    };
    // Absolute tolerance scaled to the target value for ~1e-10 relative.
    const double scale = std::pow(y, -gen.q) / (gen.kappa * gen.q);
    const double body = adaptive_simpson(integrand, y, gen.table_y.back(), 1e-11 * scale);
    return body + tail;
}

double f_transform_quadrature(const GeneratorSpec& gen, double y) {
    if (!(y > 0.0)) throw std::invalid_argument("f_transform_quadrature requires y > 0");
    // Integrate the exact integrand out to a far cutoff; close the tail
    // with the power envelope (exact for the power kind).
    const double far = std::max(y * 1e4, gen.kind == GeneratorSpec::Kind::tabulated
                                             ? gen.table_y.back()
                                             : 1e4);
    const auto integrand = [&](double x) {
        const double fx = gen.f(x);
        if (fx >= 0.0)
            throw std::runtime_error("f_transform_quadrature: integrand diverges");
        return -1.0 / fx;
    };
    const double scale = std::pow(y, -gen.q) / (gen.kappa * gen.q);
    double total = 0.0;
    // Piecewise over decades keeps the adaptive rule efficient on the
    // power-law decay.
    double a = y;
    while (a < far) {
        const double b = std::min(far, a * 10.0);
        total += adaptive_simpson(integrand, a, b, 1e-12 * scale);
        a = b;
    }
    total += std::pow(far, -gen.q) / (gen.kappa * gen.q);
    return total;
}

double f_transform_inverse(const GeneratorSpec& gen, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("f_transform_inverse requires v > 0");
    if (gen.kind == GeneratorSpec::Kind::power)
        return std::pow(gen.kappa * gen.q * v, -1.0 / gen.q);

    // F is strictly decreasing with range (0, +inf); bracket then bisect.
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (f_transform(gen, hi) > v) {
        hi *= 2.0;
        if (++guard > 1200) throw std::domain_error("f_transform_inverse: v below range of F");
    }
    guard = 0;
    while (f_transform(gen, lo) < v) {
        lo *= 0.5;
        if (++guard > 1200) throw std::domain_error("f_transform_inverse: v above range of F");
    }
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (f_transform(gen, mid) >= v)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double general_flow(const GeneratorSpec& gen, double xi, double horizon) {
    if (horizon < 0.0) throw std::invalid_argument("general_flow requires horizon >= 0");
    if (!(xi > 0.0)) throw std::invalid_argument("general_flow requires xi > 0");
    const double f_xi = xi == kInf ? 0.0 : f_transform(gen, xi);
    if (f_xi + horizon == 0.0) return kInf;
    return f_transform_inverse(gen, f_xi + horizon);
}

double halfline_blowup_coefficient(double q, double sigma, double kappa) {
    if (!(q > 0.0) || !(sigma > 0.0) || !(kappa > 0.0))
        throw std::invalid_argument("halfline_blowup_coefficient requires q, sigma, kappa > 0");
    return std::pow(sigma * sigma / (kappa * q) * (2.0 / q + 1.0), 1.0 / q);
}

double ko_bracket_ball_quadratic(double q, int d, double C, double R, double r, double eps,
                                 double kappa) {
    // theta(x) = (R² + eps - r²)/R:  ∇θ = -2(x-c)/R,  D²θ = -(2/R) Id.
    const double theta = (R * R + eps - r * r) / R;
    const double grad_norm2 = 4.0 * r * r / (R * R);
    const double trace = -2.0 * d / R;  // sigma = Id
    return kappa * std::pow(C, q) - (1.0 / q) * (2.0 / q + 1.0) * grad_norm2 +
           (theta / q) * trace;
}

double ko_bracket_ball_distance(double q, int d, double C, double R, double rho, double eps,
                                double kappa) {
    // theta = rho + eps with rho = R - |x-c|: |∇θ| = 1, Tr D²θ = -(d-1)/(R-rho).
    const double theta = rho + eps;
    const double trace = d == 1 ? 0.0 : -(d - 1.0) / (R - rho);
    return kappa * std::pow(C, q) - (1.0 / q) * (2.0 / q + 1.0) + (theta / q) * trace;
}

}  // namespace bblab
