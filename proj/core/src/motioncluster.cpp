#include "nudgesim/motioncluster.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace nudgesim {

bool neighbor_predicate(const FlowPoint& a, const FlowPoint& b, const ClusterParams& p) {
    if ((a.pos - b.pos).norm() >= p.tau_d) return false;
    if (std::abs(a.mag - b.mag) >= p.tau_m) return false;
    return wrapped_angle_dist(a.ang, b.ang) <= p.tau_a;
}

namespace {

/// Uniform grid over point positions with cell size tau_d; neighbour
/// candidates live in the 3x3 cell block around a query point.
class PointGrid {
public:
    PointGrid(const std::vector<FlowPoint>& points, double cell)
        : points_(points), cell_(cell) {
        for (size_t i = 0; i < points.size(); ++i)
            cells_[key(points[i].pos)].push_back(static_cast<int>(i));
    }

    /// Indices of all neighbours of point i (including i itself), ascending.
    std::vector<int> neighbors(int i, const ClusterParams& p) const {
        std::vector<int> out;
        const Vec2& pos = points_[i].pos;
        const int cx = static_cast<int>(std::floor(pos.x / cell_));
        const int cy = static_cast<int>(std::floor(pos.y / cell_));
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const auto it = cells_.find(pack(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                for (int j : it->second)
                    if (neighbor_predicate(points_[i], points_[j], p)) out.push_back(j);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static int64_t pack(int x, int y) { return (static_cast<int64_t>(x) << 32) ^ (y & 0xffffffffll); }
    int64_t key(const Vec2& p) const {
        return pack(static_cast<int>(std::floor(p.x / cell_)),
                    static_cast<int>(std::floor(p.y / cell_)));
    }

    const std::vector<FlowPoint>& points_;
    double cell_;
    std::unordered_map<int64_t, std::vector<int>> cells_;
};

} // namespace

ClusterAssignment dbscan(const std::vector<FlowPoint>& points, const ClusterParams& p) {
    const int n = static_cast<int>(points.size());
    ClusterAssignment out;
    out.labels.assign(n, -1);
    if (n == 0) return out;

    const PointGrid grid(points, p.tau_d);
    std::vector<std::vector<int>> nbrs(n);
    std::vector<uint8_t> core(n, 0);
    for (int i = 0; i < n; ++i) {
        nbrs[i] = grid.neighbors(i, p);
        core[i] = nbrs[i].size() >= static_cast<size_t>(p.min_pts) ? 1 : 0;
    }

    // Clusters are connected components of the core-core neighbour graph;
    // expanding in input order fixes the label numbering.
    int next_label = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[i] || out.labels[i] != -1) continue;
        const int label = next_label++;
        std::vector<int> stack{i};
        out.labels[i] = label;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            for (int j : nbrs[cur]) {
                if (!core[j] || out.labels[j] != -1) continue;
                out.labels[j] = label;
                stack.push_back(j);
            }
        }
    }
    out.k = next_label;

    // Border points join the cluster of their lowest-index core neighbour.
    for (int i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (int j : nbrs[i]) {
            if (core[j]) {
                out.labels[i] = out.labels[j];
                break;
            }
        }
    }
    return out;
}

std::vector<FlowPoint> flow_to_points(const FlowField& flow, double min_mag, int stride) {
    std::vector<FlowPoint> points;
    for (int y = 0; y < flow.height; y += stride) {
        for (int x = 0; x < flow.width; x += stride) {
            const size_t i = flow.idx(x, y);
            if (!flow.valid[i]) continue;
            const double mag = flow.magnitude(i);
            if (mag < min_mag) continue;
            points.push_back({{static_cast<double>(x), static_cast<double>(y)}, mag, flow.angle(i)});
        }
    }
    return points;
}

std::vector<FlowPoint> flow_to_points_in_region(const FlowField& flow,
                                                const std::vector<int>& region,
                                                double min_mag) {
    std::vector<FlowPoint> points;
    points.reserve(region.size());
    for (int idx : region) {
        const size_t i = static_cast<size_t>(idx);
        if (!flow.valid[i]) continue;
        const double mag = flow.magnitude(i);
        if (mag < min_mag) continue;
        points.push_back({{static_cast<double>(idx % flow.width), static_cast<double>(idx / flow.width)},
                          mag, flow.angle(i)});
    }
    return points;
}

RawMasks masks_from_assignment(const ClusterAssignment& assign,
                               const std::vector<FlowPoint>& points,
                               int width, int height, int stride) {
    RawMasks out;
    out.width = width;
    out.height = height;
    if (assign.k == 0) return out;

    std::vector<std::vector<int>> pixels(assign.k);
    for (size_t i = 0; i < points.size(); ++i) {
        const int label = assign.labels[i];
        if (label < 0) continue;
        const int px = static_cast<int>(points[i].pos.x);
        const int py = static_cast<int>(points[i].pos.y);
        for (int dy = 0; dy < stride; ++dy) {
            for (int dx = 0; dx < stride; ++dx) {
                const int x = px + dx, y = py + dy;
                if (x >= 0 && x < width && y >= 0 && y < height)
                    pixels[label].push_back(y * width + x);
            }
        }
    }
    for (int label = 0; label < assign.k; ++label) {
        std::sort(pixels[label].begin(), pixels[label].end());
        pixels[label].erase(std::unique(pixels[label].begin(), pixels[label].end()), pixels[label].end());
        if (!pixels[label].empty())
            out.masks.emplace_back(label + 1, std::move(pixels[label]));
    }
    return out;
}

} // namespace nudgesim
