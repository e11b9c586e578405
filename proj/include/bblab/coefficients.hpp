#pragma once

#include <span>
#include <string>
#include <vector>

#include "bblab/geometry.hpp"

namespace bblab {

/// Drift b and diffusion σ of the state equation, restricted to a small
/// declarative family so the boundedness/ellipticity conditions can be
/// checked against the declared constants. σ is a scalar or per-axis
/// diagonal matrix throughout.
class CoefficientField {
public:
    enum class Family { brownian, constant_drift, linear_drift, scalar_sigma, tabulated };

    /// b = 0, σ = Id.
    static CoefficientField brownian(int dim);
    /// b ≡ v, σ = sigma_scale · Id (sigma_scale = 0 gives the degenerate field).
    static CoefficientField constant_drift(std::vector<double> v, double sigma_scale = 1.0);
    /// b(x) = λ (m - x), σ = sigma_scale · Id.
    static CoefficientField linear_drift(double lambda, std::vector<double> m,
                                         double sigma_scale = 1.0);
    /// b = 0, σ = s · Id.
    static CoefficientField scalar_sigma(int dim, double s);
    /// One-dimensional tables for b and σ, linearly interpolated (clamped
    /// outside the table range).
    static CoefficientField tabulated(std::vector<double> x, std::vector<double> b,
                                      std::vector<double> sigma);

    Family family() const { return family_; }
    std::string family_name() const;
    int dimension() const { return dim_; }

    void drift(std::span<const double> x, std::span<double> out) const;
    /// Diagonal entries of σ(x).
    void sigma_diag(std::span<const double> x, std::span<double> out) const;
    /// Scalar σ for fields with σ = s · Id (all built-ins except tabulated).
    double sigma_scalar() const;

    // Declared condition constants; verified empirically by check_coefficients.
    double k_bound = 0.0;
    double alpha_ellipticity = 0.0;
    double k_lipschitz = 0.0;

    /// Fills the declared constants with the family's exact values on the
    /// given domain (what an honest config would declare).
    void declare_exact(const Domain& domain);

private:
    Family family_ = Family::brownian;
    int dim_ = 1;
    std::vector<double> drift_v_;   // constant_drift: v; linear_drift: m
    double lambda_ = 0.0;
    double sigma_scale_ = 1.0;
    std::vector<double> tab_x_, tab_b_, tab_sigma_;
};

}  // namespace bblab
