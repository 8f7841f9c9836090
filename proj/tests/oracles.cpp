#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

using namespace nudgesim;

ClusterAssignment dbscan_bruteforce(const std::vector<FlowPoint>& points,
                                    const ClusterParams& params) {
    const int n = static_cast<int>(points.size());
    ClusterAssignment out;
    out.labels.assign(n, -1);

    std::vector<std::vector<uint8_t>> adj(n, std::vector<uint8_t>(n, 0));
    std::vector<int> degree(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            adj[i][j] = neighbor_predicate(points[i], points[j], params) ? 1 : 0;
            degree[i] += adj[i][j];
        }
    std::vector<uint8_t> core(n, 0);
    for (int i = 0; i < n; ++i) core[i] = degree[i] >= params.min_pts ? 1 : 0;

    // Transitive closure over core-core adjacency (repeated sweeps).
    std::vector<int> comp(n, -1);
    int label = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[i] || comp[i] != -1) continue;
        comp[i] = label;
        bool changed = true;
        while (changed) {
            changed = false;
            for (int a = 0; a < n; ++a) {
                if (!core[a] || comp[a] != label) continue;
                for (int b = 0; b < n; ++b) {
                    if (core[b] && comp[b] == -1 && adj[a][b]) {
                        comp[b] = label;
                        changed = true;
                    }
                }
            }
        }
        ++label;
    }
    out.k = label;
    for (int i = 0; i < n; ++i)
        if (core[i]) out.labels[i] = comp[i];
    for (int i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (int j = 0; j < n; ++j) {
            if (adj[i][j] && core[j]) {
                out.labels[i] = comp[j];
                break;
            }
        }
    }
    return out;
}

double convex_intersection_area(const Polygon& a, const Polygon& b) {
    // Clip a against each edge of b (b must be convex; orient CCW first).
    Polygon clip = b;
    if (polygon_area(clip) < 0.0) std::reverse(clip.begin(), clip.end());
    Polygon poly = a;
    if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());

    for (size_t i = 0; i < clip.size() && poly.size() >= 3; ++i) {
        const Vec2 e0 = clip[i];
        const Vec2 e1 = clip[(i + 1) % clip.size()];
        const Vec2 edge = e1 - e0;
        Polygon next;
        for (size_t j = 0; j < poly.size(); ++j) {
            const Vec2 p = poly[j];
            const Vec2 q = poly[(j + 1) % poly.size()];
            const double sp = edge.cross(p - e0);
            const double sq = edge.cross(q - e0);
            if (sp >= 0.0) next.push_back(p);
            if ((sp >= 0.0) != (sq >= 0.0)) {
                const double t = sp / (sp - sq);
                next.push_back(p + (q - p) * t);
            }
        }
        poly = std::move(next);
    }
    return poly.size() >= 3 ? std::abs(polygon_area(poly)) : 0.0;
}

double optimal_assignment_mean_iou(const std::vector<std::vector<int>>& gt,
                                   const std::vector<std::vector<int>>& pred) {
    const size_t ng = gt.size(), np = pred.size();
    if (ng == 0) return 0.0;
    std::vector<std::vector<double>> score(ng, std::vector<double>(np, 0.0));
    for (size_t g = 0; g < ng; ++g)
        for (size_t p = 0; p < np; ++p) score[g][p] = iou(gt[g], pred[p]);

    // Permute the larger side over the smaller.
    std::vector<int> idx(std::max(ng, np));
    std::iota(idx.begin(), idx.end(), 0);
    double best = 0.0;
    do {
        double total = 0.0;
        for (size_t g = 0; g < ng; ++g) {
            const size_t p = static_cast<size_t>(idx[g]);
            if (p < np) total += score[g][p];
        }
        best = std::max(best, total);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best / static_cast<double>(ng);
}

} // namespace oracle
