#include "bblab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bblab {

namespace {

double dist(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Angle of p relative to the ball center, in [0, 2π).
double angle_of(const Domain& d, std::span<const double> p) {
    const double a = std::atan2(p[1] - d.center()[1], p[0] - d.center()[0]);
    return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

Domain Domain::interval(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("interval requires a < b");
    Domain d;
    d.shape_ = Shape::interval;
    d.dim_ = 1;
    d.lo_ = {a};
    d.hi_ = {b};
    return d;
}

Domain Domain::box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.empty() || lo.size() != hi.size())
        throw std::invalid_argument("box requires matching nonempty lo/hi");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("box requires lo[i] < hi[i]");
    Domain d;
    d.shape_ = Shape::box;
    d.dim_ = static_cast<int>(lo.size());
    d.lo_ = std::move(lo);
    d.hi_ = std::move(hi);
    return d;
}

Domain Domain::ball(std::vector<double> center, double radius) {
    if (center.empty()) throw std::invalid_argument("ball requires a center");
    if (!(radius > 0.0)) throw std::invalid_argument("ball requires radius > 0");
    Domain d;
    d.shape_ = Shape::ball;
    d.dim_ = static_cast<int>(center.size());
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
}

double Domain::diameter() const {
    switch (shape_) {
        case Shape::interval:
            return hi_[0] - lo_[0];
        case Shape::box: {
            double s = 0.0;
            for (std::size_t i = 0; i < lo_.size(); ++i) {
                const double e = hi_[i] - lo_[i];
                s += e * e;
            }
            return std::sqrt(s);
        }
        case Shape::ball:
            return 2.0 * radius_;
    }
    return 0.0;
}

void Domain::require_dim(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                    " does not match domain dimension " + std::to_string(dim_));
}

Region Domain::contains(std::span<const double> x) const {
    require_dim(x);
    switch (shape_) {
        case Shape::interval:
        case Shape::box: {
            bool on_boundary = false;
            for (int i = 0; i < dim_; ++i) {
                if (x[i] < lo_[i] || x[i] > hi_[i]) return Region::exterior;
                if (x[i] == lo_[i] || x[i] == hi_[i]) on_boundary = true;
            }
            return on_boundary ? Region::boundary : Region::interior;
        }
        case Shape::ball: {
            const double r = dist(x, center_);
            if (std::abs(r - radius_) <= 1e-12 * radius_) return Region::boundary;
            return r < radius_ ? Region::interior : Region::exterior;
        }
    }
    return Region::exterior;
}

double Domain::distance_to_boundary(std::span<const double> x) const {
    require_dim(x);
    switch (shape_) {
        case Shape::interval:
        case Shape::box: {
            double m = kInf;
            for (int i = 0; i < dim_; ++i) {
                if (x[i] <= lo_[i] || x[i] >= hi_[i]) return 0.0;
                m = std::min(m, std::min(x[i] - lo_[i], hi_[i] - x[i]));
            }
            return m;
        }
        case Shape::ball:
            return std::max(0.0, radius_ - dist(x, center_));
    }
    return 0.0;
}

double Domain::signed_distance(std::span<const double> x) const {
    require_dim(x);
    switch (shape_) {
        case Shape::interval:
        case Shape::box: {
            // Inside: min face distance. Outside: -dist to the closed box.
            double inside = kInf;
            double out2 = 0.0;
            bool outside = false;
            for (int i = 0; i < dim_; ++i) {
                const double lo_gap = x[i] - lo_[i];
                const double hi_gap = hi_[i] - x[i];
                if (lo_gap < 0.0) {
                    outside = true;
                    out2 += lo_gap * lo_gap;
                } else if (hi_gap < 0.0) {
                    outside = true;
                    out2 += hi_gap * hi_gap;
                }
                inside = std::min(inside, std::min(lo_gap, hi_gap));
            }
            if (outside) return -std::sqrt(out2);
            return inside;  // 0 on the boundary
        }
        case Shape::ball:
            return radius_ - dist(x, center_);
    }
    return 0.0;
}

Point Domain::project_to_boundary(std::span<const double> x) const {
    require_dim(x);
    switch (shape_) {
        case Shape::interval: {
            const double a = lo_[0], b = hi_[0];
            if (x[0] <= a) return {a};
            if (x[0] >= b) return {b};
            return (x[0] - a <= b - x[0]) ? Point{a} : Point{b};
        }
        case Shape::box: {
            bool inside = true;
            for (int i = 0; i < dim_; ++i)
                if (x[i] <= lo_[i] || x[i] >= hi_[i]) inside = false;
            Point p(x.begin(), x.end());
            if (!inside) {
                // Clamping an exterior/boundary point lands on the boundary.
                for (int i = 0; i < dim_; ++i) p[i] = std::clamp(p[i], lo_[i], hi_[i]);
                return p;
            }
            int best_axis = 0, best_side = 0;
            double best = kInf;
            for (int i = 0; i < dim_; ++i) {
                if (x[i] - lo_[i] < best) {
                    best = x[i] - lo_[i];
                    best_axis = i;
                    best_side = 0;
                }
                if (hi_[i] - x[i] < best) {
                    best = hi_[i] - x[i];
                    best_axis = i;
                    best_side = 1;
                }
            }
            p[best_axis] = best_side == 0 ? lo_[best_axis] : hi_[best_axis];
            return p;
        }
        case Shape::ball: {
            const double r = dist(x, center_);
            if (r == 0.0)
                throw std::domain_error("ball center has no unique boundary projection");
            Point p(dim_);
            for (int i = 0; i < dim_; ++i)
                p[i] = center_[i] + radius_ * (x[i] - center_[i]) / r;
            return p;
        }
    }
    throw std::logic_error("unreachable");
}

BoundaryRegion BoundaryRegion::interval_endpoint(int which) {
    BoundaryRegion r;
    r.kind = Kind::endpoint;
    r.endpoint = which;
    return r;
}

BoundaryRegion BoundaryRegion::box_face(int axis, int side) {
    BoundaryRegion r;
    r.kind = Kind::face_segment;
    r.axis = axis;
    r.side = side;
    r.t0 = -kInf;
    r.t1 = kInf;  // clipped to the face extent on use
    return r;
}

BoundaryRegion BoundaryRegion::box_face_segment(int axis, int side, double t0, double t1) {
    BoundaryRegion r;
    r.kind = Kind::face_segment;
    r.axis = axis;
    r.side = side;
    r.t0 = t0;
    r.t1 = t1;
    return r;
}

BoundaryRegion BoundaryRegion::ball_arc(double angle0, double angle1) {
    BoundaryRegion r;
    r.kind = Kind::arc;
    r.t0 = angle0;
    r.t1 = angle1;
    return r;
}

BoundaryRegion BoundaryRegion::whole() { return BoundaryRegion{}; }

namespace {

// Closed-region membership for a boundary point.
bool region_contains(const Domain& d, const BoundaryRegion& r, std::span<const double> p) {
    switch (r.kind) {
        case BoundaryRegion::Kind::whole_boundary:
            return true;
        case BoundaryRegion::Kind::endpoint:
            return p[0] == (r.endpoint == 0 ? d.a() : d.b());
        case BoundaryRegion::Kind::face_segment: {
            const double face = r.side == 0 ? d.lo()[r.axis] : d.hi()[r.axis];
            if (p[r.axis] != face) return false;
            const int free_axis = 1 - r.axis;  // 2-d boxes
            const double t = p[free_axis];
            const double t0 = std::max(r.t0, d.lo()[free_axis]);
            const double t1 = std::min(r.t1, d.hi()[free_axis]);
            return t >= t0 && t <= t1;
        }
        case BoundaryRegion::Kind::arc: {
            const double a = angle_of(d, p);
            const double two_pi = 2.0 * std::numbers::pi;
            // The arc [t0, t1] may straddle the 0/2π cut.
            for (double shift : {-two_pi, 0.0, two_pi})
                if (a + shift >= r.t0 && a + shift <= r.t1) return true;
            return false;
        }
    }
    return false;
}

double point_segment_distance(std::span<const double> p, const Point& s0, const Point& s1) {
    double dx = s1[0] - s0[0], dy = s1[1] - s0[1];
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p[0] - s0[0]) * dx + (p[1] - s0[1]) * dy) / len2, 0.0, 1.0);
    const double cx = s0[0] + t * dx, cy = s0[1] + t * dy;
    return std::hypot(p[0] - cx, p[1] - cy);
}

double region_distance(const Domain& d, const BoundaryRegion& r, std::span<const double> p) {
    switch (r.kind) {
        case BoundaryRegion::Kind::whole_boundary:
            return 0.0;
        case BoundaryRegion::Kind::endpoint:
            return std::abs(p[0] - (r.endpoint == 0 ? d.a() : d.b()));
        case BoundaryRegion::Kind::face_segment: {
            const double face = r.side == 0 ? d.lo()[r.axis] : d.hi()[r.axis];
            const int free_axis = 1 - r.axis;
            const double t0 = std::max(r.t0, d.lo()[free_axis]);
            const double t1 = std::min(r.t1, d.hi()[free_axis]);
            Point s0(2), s1(2);
            s0[r.axis] = s1[r.axis] = face;
            s0[free_axis] = t0;
            s1[free_axis] = t1;
            return point_segment_distance(p, s0, s1);
        }
        case BoundaryRegion::Kind::arc: {
            if (region_contains(d, r, p)) return 0.0;
            // Euclidean (chord) distance to the nearer arc endpoint.
            auto at_angle = [&](double a) {
                return Point{d.center()[0] + d.radius() * std::cos(a),
                             d.center()[1] + d.radius() * std::sin(a)};
            };
            const Point e0 = at_angle(r.t0), e1 = at_angle(r.t1);
            return std::min(dist(p, e0), dist(p, e1));
        }
    }
    return kInf;
}

}  // namespace

bool BlowupSet::contains(const Domain& d, std::span<const double> p) const {
    for (const auto& r : regions_)
        if (region_contains(d, r, p)) return true;
    return false;
}

double BlowupSet::distance(const Domain& d, std::span<const double> p) const {
    double m = kInf;
    for (const auto& r : regions_) m = std::min(m, region_distance(d, r, p));
    return m;
}

BoundaryData::BoundaryData(const Domain& domain,
                           std::vector<std::pair<BoundaryRegion, double>> regions,
                           double fallback)
    : regions_(std::move(regions)), fallback_(fallback) {
    (void)domain;
    if (fallback_ < 0.0) throw std::invalid_argument("boundary data must be nonnegative");
    std::vector<BoundaryRegion> blow;
    bool any_finite_region = false;
    for (const auto& [r, v] : regions_) {
        if (v < 0.0) throw std::invalid_argument("boundary data must be nonnegative");
        if (v == kInf)
            blow.push_back(r);
        else
            any_finite_region = true;
    }
    if (fallback_ == kInf) {
        if (any_finite_region)
            throw std::invalid_argument(
                "an infinite fallback together with finite regions is not representable; "
                "declare the blow-up regions explicitly");
        blow.clear();
        blow.push_back(BoundaryRegion::whole());
    }
    blowup_ = BlowupSet(std::move(blow));
}

BoundaryData BoundaryData::constant(const Domain& domain, double value) {
    return BoundaryData(domain, {}, value);
}

BoundaryData BoundaryData::interval_ends(const Domain& domain, double left, double right) {
    if (domain.shape() != Shape::interval)
        throw std::invalid_argument("interval_ends requires an interval domain");
    return BoundaryData(domain,
                        {{BoundaryRegion::interval_endpoint(0), left},
                         {BoundaryRegion::interval_endpoint(1), right}},
                        std::min(left, right));
}

double BoundaryData::value_at(const Domain& d, std::span<const double> p) const {
    for (const auto& [r, v] : regions_)
        if (region_contains(d, r, p)) return v;
    return fallback_;
}

double BoundaryData::sup() const {
    double s = fallback_;
    for (const auto& [r, v] : regions_) s = std::max(s, v);
    return s;
}

double BoundaryData::min_value() const {
    double m = fallback_;
    for (const auto& [r, v] : regions_) m = std::min(m, v);
    return m;
}

double distance_to_blowup(const Domain& d, const BoundaryData& bdata, std::span<const double> p) {
    return bdata.blowup().distance(d, p);
}

}  // namespace bblab
