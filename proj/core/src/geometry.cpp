#include "nudgesim/geometry.hpp"

#include <algorithm>
#include <limits>

namespace nudgesim {

double polygon_area(const Polygon& poly) {
    double a = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.cross(q);
    }
    return 0.5 * a;
}

Vec2 polygon_centroid(const Polygon& poly) {
    // Area-weighted centroid; falls back to vertex mean for degenerate area.
    double a = 0.0, cx = 0.0, cy = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        const double w = p.cross(q);
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if (std::abs(a) < 1e-12) {
        Vec2 m;
        for (const Vec2& p : poly) m = m + p;
        return m / static_cast<double>(n);
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

bool point_in_polygon(const Polygon& poly, const Vec2& p) {
    // Even-odd crossing rule with half-open edges in y.
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double t = (p.y - a.y) / (b.y - a.y);
            if (p.x < a.x + t * (b.x - a.x)) inside = !inside;
        }
    }
    return inside;
}

namespace {

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const double v = (q - p).cross(r - p);
        if (v > 1e-12) return 1;
        if (v < -1e-12) return -1;
        return 0;
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4;
}

} // namespace

bool polygon_is_simple(const Polygon& poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            // Skip adjacent edges (they share an endpoint).
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_intersect(poly[i], poly[(i + 1) % n],
                                   poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

Penetration convex_penetration(const Polygon& a, const Polygon& b) {
    Penetration best;
    best.depth = std::numeric_limits<double>::max();

    const Vec2 ca = polygon_centroid(a);
    const Vec2 cb = polygon_centroid(b);

    auto project = [](const Polygon& poly, const Vec2& axis, double& lo, double& hi) {
        lo = std::numeric_limits<double>::max();
        hi = std::numeric_limits<double>::lowest();
        for (const Vec2& p : poly) {
            const double d = p.dot(axis);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    };

    auto test_axes = [&](const Polygon& poly) {
        const size_t n = poly.size();
        for (size_t i = 0; i < n; ++i) {
            Vec2 axis = (poly[(i + 1) % n] - poly[i]).perp().normalized();
            if (axis.norm2() == 0.0) continue;
            double alo, ahi, blo, bhi;
            project(a, axis, alo, ahi);
            project(b, axis, blo, bhi);
            const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
            if (overlap < best.depth) {
                best.depth = overlap;
                // Orient the axis so it pushes b away from a.
                best.axis = ((cb - ca).dot(axis) >= 0.0) ? axis : -axis;
            }
            if (overlap <= 0.0) return false;
        }
        return true;
    };

    if (!test_axes(a) || !test_axes(b)) {
        // Separated; depth carries the (negative) gap along the witness axis.
        return best;
    }
    return best;
}

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    return a;
}

double wrapped_angle_dist(double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 2.0 * M_PI - d);
}

} // namespace nudgesim
