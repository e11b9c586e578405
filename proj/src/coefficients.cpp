#include "bblab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bblab {

CoefficientField CoefficientField::brownian(int dim) {
    CoefficientField f;
    f.family_ = Family::brownian;
    f.dim_ = dim;
    f.sigma_scale_ = 1.0;
    return f;
}

CoefficientField CoefficientField::constant_drift(std::vector<double> v, double sigma_scale) {
    if (v.empty()) throw std::invalid_argument("constant_drift requires a drift vector");
    if (sigma_scale < 0.0) throw std::invalid_argument("sigma scale must be >= 0");
    CoefficientField f;
    f.family_ = Family::constant_drift;
    f.dim_ = static_cast<int>(v.size());
    f.drift_v_ = std::move(v);
    f.sigma_scale_ = sigma_scale;
    return f;
}

CoefficientField CoefficientField::linear_drift(double lambda, std::vector<double> m,
                                                double sigma_scale) {
    if (m.empty()) throw std::invalid_argument("linear_drift requires a target point");
    if (sigma_scale < 0.0) throw std::invalid_argument("sigma scale must be >= 0");
    CoefficientField f;
    f.family_ = Family::linear_drift;
    f.dim_ = static_cast<int>(m.size());
    f.drift_v_ = std::move(m);
    f.lambda_ = lambda;
    f.sigma_scale_ = sigma_scale;
    return f;
}

CoefficientField CoefficientField::scalar_sigma(int dim, double s) {
    if (s < 0.0) throw std::invalid_argument("sigma scale must be >= 0");
    CoefficientField f;
    f.family_ = Family::scalar_sigma;
    f.dim_ = dim;
    f.sigma_scale_ = s;
    return f;
}

CoefficientField CoefficientField::tabulated(std::vector<double> x, std::vector<double> b,
                                             std::vector<double> sigma) {
    if (x.size() < 2 || x.size() != b.size() || x.size() != sigma.size())
        throw std::invalid_argument("tabulated field needs matching tables with >= 2 samples");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("tabulated abscissae must increase");
    CoefficientField f;
    f.family_ = Family::tabulated;
    f.dim_ = 1;
    f.tab_x_ = std::move(x);
    f.tab_b_ = std::move(b);
    f.tab_sigma_ = std::move(sigma);
    return f;
}

std::string CoefficientField::family_name() const {
    switch (family_) {
        case Family::brownian: return "brownian";
        case Family::constant_drift: return "constant_drift";
        case Family::linear_drift: return "linear_drift";
        case Family::scalar_sigma: return "scalar_sigma";
        case Family::tabulated: return "tabulated";
    }
    return "?";
}

namespace {
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}
}  // namespace

void CoefficientField::drift(std::span<const double> x, std::span<double> out) const {
    switch (family_) {
        case Family::brownian:
        case Family::scalar_sigma:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case Family::constant_drift:
            std::copy(drift_v_.begin(), drift_v_.end(), out.begin());
            return;
        case Family::linear_drift:
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = lambda_ * (drift_v_[i] - x[i]);
            return;
        case Family::tabulated:
            out[0] = interp(tab_x_, tab_b_, x[0]);
            return;
    }
}

void CoefficientField::sigma_diag(std::span<const double> x, std::span<double> out) const {
    if (family_ == Family::tabulated) {
        out[0] = interp(tab_x_, tab_sigma_, x[0]);
        return;
    }
    std::fill(out.begin(), out.end(), sigma_scale_);
}

double CoefficientField::sigma_scalar() const {
    if (family_ == Family::tabulated)
        throw std::logic_error("tabulated field has no single scalar sigma");
    return sigma_scale_;
}

void CoefficientField::declare_exact(const Domain& domain) {
    double b_sup = 0.0;
    double sig_sup = sigma_scale_;
    double sig_inf = sigma_scale_;
    double lip = 0.0;
    switch (family_) {
        case Family::brownian:
        case Family::scalar_sigma:
            break;
        case Family::constant_drift: {
            double s = 0.0;
            for (double c : drift_v_) s += c * c;
            b_sup = std::sqrt(s);
            break;
        }
        case Family::linear_drift: {
            // |b| is maximal at the corners of the domain's bounding box.
            double corner = 0.0;
            if (domain.shape() == Shape::ball) {
                double c2 = 0.0;
                for (std::size_t i = 0; i < domain.center().size(); ++i) {
                    const double d = drift_v_[i] - domain.center()[i];
                    c2 += d * d;
                }
                corner = std::sqrt(c2) + domain.radius();
            } else {
                double s = 0.0;
                for (std::size_t i = 0; i < domain.lo().size(); ++i) {
                    const double e = std::max(std::abs(drift_v_[i] - domain.lo()[i]),
                                              std::abs(drift_v_[i] - domain.hi()[i]));
                    s += e * e;
                }
                corner = std::sqrt(s);
            }
            b_sup = std::abs(lambda_) * corner;
            break;
        }
        case Family::tabulated: {
            for (double v : tab_b_) b_sup = std::max(b_sup, std::abs(v));
            sig_sup = sig_inf = std::abs(tab_sigma_.front());
            for (double v : tab_sigma_) {
                sig_sup = std::max(sig_sup, std::abs(v));
                sig_inf = std::min(sig_inf, std::abs(v));
            }
            for (std::size_t i = 1; i < tab_x_.size(); ++i)
                lip = std::max(lip, std::abs(tab_sigma_[i] - tab_sigma_[i - 1]) /
                                        (tab_x_[i] - tab_x_[i - 1]));
            break;
        }
    }
    k_bound = b_sup + sig_sup;
    alpha_ellipticity = sig_inf * sig_inf;
    k_lipschitz = lip;
}

}  // namespace bblab
