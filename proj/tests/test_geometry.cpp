#include <doctest.h>

#include <cmath>

#include "nudgesim/geometry.hpp"
#include "nudgesim/rng.hpp"
#include "oracles.hpp"

using namespace nudgesim;

TEST_CASE("polygon area and centroid") {
    const Polygon square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    CHECK(polygon_area(square) == doctest::Approx(16.0));
    const Vec2 c = polygon_centroid(square);
    CHECK(c.x == doctest::Approx(2.0));
    CHECK(c.y == doctest::Approx(2.0));
}

TEST_CASE("point in polygon") {
    const Polygon square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    CHECK(point_in_polygon(square, {2, 2}));
    CHECK_FALSE(point_in_polygon(square, {5, 2}));
    CHECK_FALSE(point_in_polygon(square, {-1, -1}));
}

TEST_CASE("convex hull of a noisy square") {
    std::vector<Vec2> pts{{0, 0}, {4, 0}, {4, 4}, {0, 4}, {2, 2}, {1, 1}, {2, 0}};
    const Polygon hull = convex_hull(pts);
    CHECK(hull.size() == 4);
    CHECK(polygon_area(hull) == doctest::Approx(16.0));
}

TEST_CASE("convex hull degenerate inputs") {
    CHECK(convex_hull({{0, 0}, {1, 1}}).size() == 2);
    CHECK(convex_hull({{0, 0}, {1, 1}, {2, 2}, {3, 3}}).size() == 2);  // collinear
}

TEST_CASE("penetration depth of overlapping squares") {
    const Polygon a{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    const Polygon b{{8, 0}, {18, 0}, {18, 10}, {8, 10}};
    const Penetration pen = convex_penetration(a, b);
    CHECK(pen.depth == doctest::Approx(2.0));
    CHECK(pen.axis.x == doctest::Approx(1.0));
    CHECK(pen.axis.y == doctest::Approx(0.0).epsilon(1e-9));

    const Polygon c{{20, 0}, {30, 0}, {30, 10}, {20, 10}};
    CHECK(convex_penetration(a, c).depth <= 0.0);
}

TEST_CASE("pose compose and inverse round trip") {
    const Pose p{3.0, -2.0, 0.7};
    const Pose id = p.compose(p.inverse());
    CHECK(id.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(id.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(id.theta == doctest::Approx(0.0));
}

TEST_CASE("wrapped angle distance stays in [0, pi]") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(0.0, 2.0 * M_PI);
        const double b = rng.uniform(0.0, 2.0 * M_PI);
        const double d = wrapped_angle_dist(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= M_PI + 1e-12);
        CHECK(d == doctest::Approx(wrapped_angle_dist(b, a)));
    }
}

TEST_CASE("convex intersection oracle sanity") {
    const Polygon a{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    const Polygon b{{5, 5}, {15, 5}, {15, 15}, {5, 15}};
    CHECK(oracle::convex_intersection_area(a, b) == doctest::Approx(25.0));
    const Polygon c{{20, 20}, {30, 20}, {30, 30}, {20, 30}};
    CHECK(oracle::convex_intersection_area(a, c) == doctest::Approx(0.0));
}
