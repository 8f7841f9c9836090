#pragma once

#include <cmath>
#include <vector>

namespace nudgesim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }

    Vec2 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Rigid transform in the plane: rotate by theta, then translate by (x, y).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 apply(const Vec2& p) const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {c * p.x - s * p.y + x, s * p.x + c * p.y + y};
    }

    /// this ∘ other: apply `other` first, then this.
    Pose compose(const Pose& other) const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {c * other.x - s * other.y + x,
                s * other.x + c * other.y + y,
                theta + other.theta};
    }

    Pose inverse() const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {-(c * x + s * y), -(-s * x + c * y), -theta};
    }
};

using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);
bool point_in_polygon(const Polygon& poly, const Vec2& p);
bool polygon_is_simple(const Polygon& poly);

/// Andrew monotone chain; collinear points on the boundary are dropped.
/// Returns CCW order. Fewer than 3 non-collinear inputs yield a degenerate
/// (size < 3) result.
Polygon convex_hull(std::vector<Vec2> points);

/// Minimum translation vector pushing `b` out of `a` (both convex, CCW or CW).
/// Returns depth <= 0 when separated; `axis` is a unit vector pointing from a
/// toward b along the minimum-overlap direction.
struct Penetration {
    double depth = 0.0;
    Vec2 axis;
};
Penetration convex_penetration(const Polygon& a, const Polygon& b);

/// Angle wrapped into [0, 2*pi).
double wrap_angle(double a);

/// min(|a-b|, 2*pi - |a-b|) for angles already in [0, 2*pi); result in [0, pi].
double wrapped_angle_dist(double a, double b);

} // namespace nudgesim
