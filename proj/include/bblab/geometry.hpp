#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bblab {

using Point = std::vector<double>;

/// Hard cap on the spatial dimension; lets hot loops use stack buffers.
inline constexpr int kMaxDim = 8;

enum class Region { interior, boundary, exterior };

enum class Shape { interval, box, ball };

/// Bounded open domain: interval (a,b), axis-aligned box, or ball.
/// These shapes admit exact distance functions and boundary projections.
/// Immutable after construction; all queries are pure.
class Domain {
public:
    static Domain interval(double a, double b);
    static Domain box(std::vector<double> lo, std::vector<double> hi);
    static Domain ball(std::vector<double> center, double radius);

    Shape shape() const { return shape_; }
    int dimension() const { return dim_; }
    double diameter() const;

    /// Classify x as interior / boundary / exterior. Interval and box are
    /// exact; the ball uses relative tolerance 1e-12 on |‖x-c‖ - r|.
    Region contains(std::span<const double> x) const;

    /// ρ(x): distance to ∂D for x in the closure, 0 for exterior points.
    double distance_to_boundary(std::span<const double> x) const;

    /// +ρ(x) inside, -dist(x, ∂D) outside, 0 on the boundary.
    double signed_distance(std::span<const double> x) const;

    /// Nearest boundary point. Box ties are broken by the lowest axis
    /// index (lo face before hi face); the ball center has no unique
    /// projection and throws.
    Point project_to_boundary(std::span<const double> x) const;

    // Shape parameters (valid for the matching shape only).
    double a() const { return lo_[0]; }
    double b() const { return hi_[0]; }
    const std::vector<double>& lo() const { return lo_; }
    const std::vector<double>& hi() const { return hi_; }
    const std::vector<double>& center() const { return center_; }
    double radius() const { return radius_; }

private:
    Domain() = default;
    void require_dim(std::span<const double> x) const;

    Shape shape_ = Shape::interval;
    int dim_ = 1;
    std::vector<double> lo_, hi_;      // interval/box
    std::vector<double> center_;       // ball
    double radius_ = 0.0;              // ball
};

/// One closed piece of the boundary. Endpoints for intervals, a closed
/// sub-segment of a face for 2-d boxes, a closed arc for 2-d balls, or the
/// whole boundary.
struct BoundaryRegion {
    enum class Kind { endpoint, face_segment, arc, whole_boundary };
    Kind kind = Kind::whole_boundary;

    int endpoint = 0;            // interval: 0 = left, 1 = right
    int axis = 0;                // box face axis
    int side = 0;                // box face side: 0 = lo, 1 = hi
    double t0 = 0.0, t1 = 0.0;   // box: range along the free axis; ball: angle range (radians)

    static BoundaryRegion interval_endpoint(int which);
    static BoundaryRegion box_face(int axis, int side);
    static BoundaryRegion box_face_segment(int axis, int side, double t0, double t1);
    static BoundaryRegion ball_arc(double angle0, double angle1);
    static BoundaryRegion whole();
};

/// F_inf: the closed subset of ∂D where the boundary data is +infinity,
/// stored as a finite union of closed regions.
class BlowupSet {
public:
    BlowupSet() = default;
    explicit BlowupSet(std::vector<BoundaryRegion> regions) : regions_(std::move(regions)) {}

    bool empty() const { return regions_.empty(); }
    const std::vector<BoundaryRegion>& regions() const { return regions_; }

    /// Membership of a boundary point.
    bool contains(const Domain& d, std::span<const double> p) const;

    /// Euclidean distance from boundary point p to the set; +inf if empty.
    double distance(const Domain& d, std::span<const double> p) const;

private:
    std::vector<BoundaryRegion> regions_;
};

/// Dirichlet data g: ∂D -> [0, +inf]. Finite regions carry their own sup
/// (the stored constant); the +inf regions form the blow-up set.
class BoundaryData {
public:
    /// Regions are matched in declaration order; `fallback` applies where
    /// no region matches. Values must be >= 0; +inf marks blow-up.
    BoundaryData(const Domain& domain, std::vector<std::pair<BoundaryRegion, double>> regions,
                 double fallback);

    static BoundaryData constant(const Domain& domain, double value);
    /// Interval convenience: g(a) = left, g(b) = right.
    static BoundaryData interval_ends(const Domain& domain, double left, double right);

    double value_at(const Domain& d, std::span<const double> p) const;
    const BlowupSet& blowup() const { return blowup_; }
    double fallback() const { return fallback_; }
    const std::vector<std::pair<BoundaryRegion, double>>& regions() const { return regions_; }

    /// Sup of g over ∂D; +inf when a blow-up region exists.
    double sup() const;

    /// Inf of the stored values (a lower bound for g on ∂D).
    double min_value() const;

private:
    std::vector<std::pair<BoundaryRegion, double>> regions_;
    double fallback_ = 0.0;
    BlowupSet blowup_;
};

/// Distance from a boundary point to the blow-up set (+inf sentinel when
/// the set is empty).
double distance_to_blowup(const Domain& d, const BoundaryData& bdata, std::span<const double> p);

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace bblab
