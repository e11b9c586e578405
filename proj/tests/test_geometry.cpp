#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "bblab/geometry.hpp"
#include "bblab/rng.hpp"

using namespace bblab;

TEST_CASE("classification on the reference shapes") {
    const Domain iv = Domain::interval(0.0, 1.0);
    double x = 0.5;
    CHECK(iv.contains({&x, 1}) == Region::interior);
    x = 0.0;
    CHECK(iv.contains({&x, 1}) == Region::boundary);
    x = -0.1;
    CHECK(iv.contains({&x, 1}) == Region::exterior);

    const Domain ball = Domain::ball({0.0, 0.0}, 1.0);
    const Point outside{2.0, 0.0};
    CHECK(ball.contains(outside) == Region::exterior);
    const Point on{1.0, 0.0};
    CHECK(ball.contains(on) == Region::boundary);
    // Relative sphere tolerance.
    const Point nearly{1.0 + 1e-13, 0.0};
    CHECK(ball.contains(nearly) == Region::boundary);
}

TEST_CASE("distance to the boundary") {
    const Domain iv = Domain::interval(0.0, 1.0);
    double x = 0.3;
    CHECK(iv.distance_to_boundary({&x, 1}) == doctest::Approx(0.3).epsilon(1e-15));

    const Domain ball = Domain::ball({0.0, 0.0}, 1.0);
    const Point p{0.6, 0.0};
    CHECK(ball.distance_to_boundary(p) == doctest::Approx(0.4).epsilon(1e-15));

    const Domain box = Domain::box({0.0, 0.0}, {2.0, 1.0});
    const Point b{1.0, 0.2};
    CHECK(box.distance_to_boundary(b) == doctest::Approx(0.2).epsilon(1e-15));

    const Point outside{3.0, 0.5};
    CHECK(box.distance_to_boundary(outside) == 0.0);
}

TEST_CASE("signed distance") {
    const Domain iv = Domain::interval(0.0, 1.0);
    double x = 1.2;
    CHECK(iv.signed_distance({&x, 1}) == doctest::Approx(-0.2).epsilon(1e-14));
    x = 0.2;
    CHECK(iv.signed_distance({&x, 1}) == doctest::Approx(0.2).epsilon(1e-14));
    const Domain ball = Domain::ball({0.0, 0.0}, 1.0);
    const Point on{1.0, 0.0};
    CHECK(ball.signed_distance(on) == 0.0);
}

TEST_CASE("boundary projection") {
    const Domain iv = Domain::interval(0.0, 1.0);
    double x = 0.3;
    CHECK(iv.project_to_boundary({&x, 1})[0] == 0.0);

    const Domain ball = Domain::ball({0.0, 0.0}, 1.0);
    const Point p{0.5, 0.0};
    const Point proj = ball.project_to_boundary(p);
    CHECK(proj[0] == doctest::Approx(1.0));
    CHECK(proj[1] == doctest::Approx(0.0));
    const Point center{0.0, 0.0};
    CHECK_THROWS_AS((void)ball.project_to_boundary(center), std::domain_error);

    const Domain box = Domain::box({0.0, 0.0}, {1.0, 1.0});
    const Point q{0.5, 0.1};
    const Point pq = box.project_to_boundary(q);
    CHECK(pq[0] == doctest::Approx(0.5));
    CHECK(pq[1] == doctest::Approx(0.0));
}

TEST_CASE("projection identity on random interior samples") {
    RngStream rng(11, 0);
    const Domain shapes[] = {Domain::interval(-1.0, 2.0), Domain::box({0.0, 0.0}, {2.0, 1.0}),
                             Domain::ball({0.5, -0.5}, 1.5)};
    for (const Domain& d : shapes) {
        int tested = 0;
        while (tested < 10000) {
            Point x(static_cast<std::size_t>(d.dimension()));
            for (auto& c : x) c = -2.0 + 5.0 * rng.next_uniform();
            if (d.contains(x) != Region::interior) continue;
            if (d.shape() == Shape::ball) {
                double r = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double dd = x[i] - d.center()[i];
                    r += dd * dd;
                }
                if (std::sqrt(r) < 1e-6) continue;  // near-center projection is ill-posed
            }
            ++tested;
            const Point p = d.project_to_boundary(x);
            double dist = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double dd = x[i] - p[i];
                dist += dd * dd;
            }
            dist = std::sqrt(dist);
            const double rho = d.distance_to_boundary(x);
            CHECK(std::abs(dist - rho) <= 1e-12 * std::max(1.0, rho));
            CHECK(d.signed_distance(x) == rho);
            CHECK(rho > 0.0);
        }
    }
}

TEST_CASE("distance to the blow-up set") {
    const Domain iv = Domain::interval(0.0, 1.0);
    const BoundaryData g_left_inf = BoundaryData::interval_ends(iv, kInf, 1.0);
    double p = 1.0;
    CHECK(distance_to_blowup(iv, g_left_inf, {&p, 1}) == doctest::Approx(1.0));
    p = 0.0;
    CHECK(distance_to_blowup(iv, g_left_inf, {&p, 1}) == 0.0);

    const BoundaryData bounded = BoundaryData::constant(iv, 2.0);
    p = 0.0;
    CHECK(distance_to_blowup(iv, bounded, {&p, 1}) == kInf);

    const BoundaryData all_inf = BoundaryData::constant(iv, kInf);
    p = 0.7;  // interior points are not boundary points, but regions answer anyway
    CHECK(all_inf.blowup().empty() == false);
}

TEST_CASE("blow-up distance is 1-Lipschitz along the boundary") {
    const Domain ball = Domain::ball({0.0, 0.0}, 1.0);
    const BoundaryData bd(ball, {{BoundaryRegion::ball_arc(0.0, 1.0), kInf}}, 2.0);
    double prev = -1.0;
    Point prev_p;
    for (int k = 0; k <= 700; ++k) {
        const double a = 2.0 * 3.14159265358979323846 * k / 700.0;
        const Point p{std::cos(a), std::sin(a)};
        const double dist = distance_to_blowup(ball, bd, p);
        if (k > 0) {
            const double step = std::hypot(p[0] - prev_p[0], p[1] - prev_p[1]);
            CHECK(std::abs(dist - prev) <= step + 1e-12);
        }
        prev = dist;
        prev_p = p;
    }
}

TEST_CASE("box face segments") {
    const Domain box = Domain::box({0.0, 0.0}, {2.0, 1.0});
    const BoundaryData bd(box, {{BoundaryRegion::box_face_segment(1, 0, 0.5, 1.0), kInf}}, 3.0);
    const Point inside_region{0.7, 0.0};
    CHECK(bd.value_at(box, inside_region) == kInf);
    const Point outside_region{0.2, 0.0};
    CHECK(bd.value_at(box, outside_region) == 3.0);
    const Point other_face{0.0, 0.5};
    CHECK(distance_to_blowup(box, bd, other_face) ==
          doctest::Approx(std::hypot(0.5, 0.5)));
}

TEST_CASE("invalid constructions and dimension mismatches") {
    CHECK_THROWS_AS(Domain::interval(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Domain::box({0.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(Domain::ball({0.0}, 0.0), std::invalid_argument);
    const Domain iv = Domain::interval(0.0, 1.0);
    const Point p2{0.5, 0.5};
    CHECK_THROWS_AS((void)iv.contains(p2), std::invalid_argument);
    CHECK_THROWS_AS(BoundaryData::constant(iv, -1.0), std::invalid_argument);
}
