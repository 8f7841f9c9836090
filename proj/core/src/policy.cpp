#include "nudgesim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nudgesim {

std::vector<Blob> extract_blobs(const UncertaintyMap& rho, double thresh_k, double min_area) {
    if (min_area < 1.0) throw std::runtime_error("min_area must be >= 1");
    const size_t n = rho.rho.size();
    double mean = 0.0;
    for (double v : rho.rho) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : rho.rho) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(n));
    const double thresh = mean + thresh_k * stddev;

    BinaryImage bin(rho.width, rho.height, 0);
    for (size_t i = 0; i < n; ++i) bin.data[i] = rho.rho[i] > thresh ? 1 : 0;
    bin = open3x3(bin);

    std::vector<Blob> blobs;
    for (std::vector<int>& comp : connected_components8(bin)) {
        if (static_cast<double>(comp.size()) < min_area) continue;
        Blob blob;
        double sum = 0.0;
        for (int idx : comp) sum += rho.rho[idx];
        blob.mean_rho = sum / static_cast<double>(comp.size());
        blob.pixels = std::move(comp);
        blobs.push_back(std::move(blob));
    }
    if (blobs.empty()) throw std::runtime_error("no pile detected");
    std::stable_sort(blobs.begin(), blobs.end(),
                     [](const Blob& a, const Blob& b) { return a.mean_rho > b.mean_rho; });
    return blobs;
}

namespace {

Vec2 pixel_point(int idx, int width) {
    return {static_cast<double>(idx % width), static_cast<double>(idx / width)};
}

Vec2 pixels_centroid(const std::vector<int>& pixels, int width) {
    Vec2 c;
    for (int idx : pixels) c = c + pixel_point(idx, width);
    return c / static_cast<double>(pixels.size());
}

} // namespace

NudgeCommand first_nudge(const std::vector<Blob>& blobs, int width, const PolicyParams& params) {
    if (blobs.empty()) throw std::runtime_error("first_nudge: no blobs");

    size_t best = 0;
    for (size_t i = 1; i < blobs.size(); ++i)
        if (blobs[i].mean_rho > blobs[best].mean_rho) best = i;
    const Vec2 target = pixels_centroid(blobs[best].pixels, width);

    std::vector<Vec2> all;
    for (const Blob& b : blobs)
        for (int idx : b.pixels) all.push_back(pixel_point(idx, width));
    const Polygon hull = convex_hull(all);
    if (hull.size() < 3) throw std::runtime_error("pile degenerate");

    size_t pick = 0;
    double pick_d = params.first_nudge_farthest ? -1.0 : 1e300;
    for (size_t i = 0; i < hull.size(); ++i) {
        const double d = (hull[i] - target).norm();
        const bool better = params.first_nudge_farthest ? d > pick_d : d < pick_d;
        // Equal distances: lexicographic (y, then x).
        const bool tie = d == pick_d &&
                         (hull[i].y < hull[pick].y ||
                          (hull[i].y == hull[pick].y && hull[i].x < hull[pick].x));
        if (better || tie) {
            pick_d = d;
            pick = i;
        }
    }

    NudgeCommand cmd;
    cmd.point = hull[pick];
    cmd.direction = (polygon_centroid(hull) - cmd.point).normalized();
    if (cmd.direction.norm2() == 0.0) cmd.direction = {1.0, 0.0};
    cmd.magnitude = params.nudge_magnitude;
    return cmd;
}

namespace {

/// Closed-form eigen decomposition of [[a, c], [c, b]]; lambda1 >= lambda2.
void eigen2x2(double a, double b, double c,
              double& lambda1, double& lambda2, Vec2& v1, Vec2& v2) {
    const double disc = std::sqrt(std::max(0.0, (a - b) * (a - b) + 4.0 * c * c));
    lambda1 = 0.5 * (a + b + disc);
    lambda2 = 0.5 * (a + b - disc);
    if (std::abs(c) > 1e-300) {
        if (std::abs(a - lambda1) > std::abs(b - lambda1))
            v1 = Vec2{c, lambda1 - a}.normalized();
        else
            v1 = Vec2{lambda1 - b, c}.normalized();
    } else {
        v1 = a >= b ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    v2 = v1.perp();
}

} // namespace

std::vector<EigenStats> cluster_stats(const FlowField& flow, const SegmentationHypothesis& hyp) {
    std::vector<EigenStats> out;
    for (const Mask& m : hyp.masks) {
        double su = 0.0, sv = 0.0;
        int count = 0;
        for (int idx : m.pixels) {
            if (!flow.valid[idx]) continue;
            su += flow.u[idx];
            sv += flow.v[idx];
            ++count;
        }
        if (count < 2) continue;  // flagged by omission
        const double mu = su / count, mv = sv / count;
        double a = 0.0, b = 0.0, c = 0.0;
        for (int idx : m.pixels) {
            if (!flow.valid[idx]) continue;
            const double du = flow.u[idx] - mu;
            const double dv = flow.v[idx] - mv;
            a += du * du;
            b += dv * dv;
            c += du * dv;
        }
        a /= count;
        b /= count;
        c /= count;

        EigenStats st;
        st.mask_id = m.id;
        st.sigma[0] = a;
        st.sigma[1] = b;
        st.sigma[2] = c;
        eigen2x2(a, b, c, st.lambda_max, st.lambda_min, st.v_max, st.v_min);
        constexpr double kReg = 1e-6;
        st.kappa = (std::abs(st.lambda_max) + kReg) / (std::abs(st.lambda_min) + kReg);
        out.push_back(st);
    }
    return out;
}

namespace {

/// Length of the ray p + t*dir, t >= 0, inside the mask (0.5 px sampling).
double ray_chord_length(const BinaryImage& mask, Vec2 p, Vec2 dir) {
    const double limit = std::hypot(mask.width, mask.height);
    double len = 0.0;
    for (double t = 0.0; t <= limit; t += 0.5) {
        const Vec2 q = p + dir * t;
        const int x = static_cast<int>(std::lround(q.x));
        const int y = static_cast<int>(std::lround(q.y));
        if (mask.in_bounds(x, y) && mask.at(x, y)) len += 0.5;
    }
    return len;
}

} // namespace

NudgeCommand next_nudge(const std::vector<EigenStats>& stats, const SegmentationHypothesis& hyp,
                        const PolicyParams& params) {
    if (stats.empty()) throw std::runtime_error("next_nudge: no cluster stats");

    std::vector<const EigenStats*> order;
    for (const EigenStats& st : stats) order.push_back(&st);
    std::sort(order.begin(), order.end(), [](const EigenStats* a, const EigenStats* b) {
        return a->kappa > b->kappa || (a->kappa == b->kappa && a->mask_id < b->mask_id);
    });

    const EigenStats* pick = order[0];
    if (order.size() >= 2 && order[1]->kappa > params.tau_kappa)
        pick = order[1];

    const Mask* mask = hyp.find(pick->mask_id);
    if (mask == nullptr || mask->pixels.empty())
        throw std::runtime_error("next_nudge: stats reference a missing mask");

    const int w = hyp.width, h = hyp.height;
    BinaryImage bin(w, h, 0);
    for (int idx : mask->pixels) bin.data[idx] = 1;

    Vec2 c;
    for (int idx : mask->pixels)
        c = c + Vec2{static_cast<double>(idx % w), static_cast<double>(idx / w)};
    c = c / static_cast<double>(mask->pixels.size());

    std::vector<int> boundary;
    for (int idx : mask->pixels) {
        const int x = idx % w, y = idx / w;
        const bool inner = x > 0 && bin.at(x - 1, y) && x < w - 1 && bin.at(x + 1, y) &&
                           y > 0 && bin.at(x, y - 1) && y < h - 1 && bin.at(x, y + 1);
        if (!inner) boundary.push_back(idx);
    }

    // For each sign of v_min: contact candidate on the side opposite the
    // travel, closest to the centroid line along v_min; keep the sign whose
    // push runs the longer chord through the mask.
    NudgeCommand best_cmd;
    double best_chord = -1.0;
    for (int s = 0; s < 2; ++s) {
        const Vec2 dir = s == 0 ? pick->v_min : -pick->v_min;
        int pick_idx = -1;
        double pick_dist = 1e300;
        for (int idx : boundary) {
            const Vec2 p{static_cast<double>(idx % w), static_cast<double>(idx / w)};
            if ((p - c).dot(dir) >= 0.0) continue;  // wrong side
            const double dline = std::abs(dir.cross(p - c));
            const int py = idx / w, px = idx % w;
            const int by = pick_idx < 0 ? 0 : pick_idx / w;
            const int bx = pick_idx < 0 ? 0 : pick_idx % w;
            if (dline < pick_dist ||
                (dline == pick_dist && (py < by || (py == by && px < bx)))) {
                pick_dist = dline;
                pick_idx = idx;
            }
        }
        if (pick_idx < 0) continue;
        const Vec2 p{static_cast<double>(pick_idx % w), static_cast<double>(pick_idx / w)};
        const double chord = ray_chord_length(bin, p, dir);
        if (chord > best_chord) {
            best_chord = chord;
            best_cmd.point = p;
            best_cmd.direction = dir;
        }
    }
    if (best_chord < 0.0) {
        // Degenerate mask (single row/col); fall back to centroid aim.
        const Vec2 p{static_cast<double>(boundary.front() % w),
                     static_cast<double>(boundary.front() / w)};
        best_cmd.point = p;
        best_cmd.direction = (c - p).norm2() > 0.0 ? (c - p).normalized() : Vec2{1.0, 0.0};
    }
    best_cmd.magnitude = params.nudge_magnitude;
    return best_cmd;
}

} // namespace nudgesim
