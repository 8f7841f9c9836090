#pragma once

#include <vector>

#include "nudgesim/flow.hpp"
#include "nudgesim/geometry.hpp"

namespace nudgesim {

/// One flow sample: image position plus flow magnitude and angle.
struct FlowPoint {
    Vec2 pos;
    double mag = 0.0;  // px
    double ang = 0.0;  // rad, in [0, 2*pi)
};

struct ClusterParams {
    double tau_d = 15.0;   // px, spatial radius
    double tau_m = 1.5;    // px, magnitude difference
    double tau_a = 0.35;   // rad, wrapped angle difference
    int min_pts = 10;
};

struct ClusterAssignment {
    std::vector<int> labels;  // per point; -1 = noise
    int k = 0;                // number of clusters
};

/// Two samples are neighbours when position, magnitude and wrapped angle all
/// agree within the thresholds. Strict for position/magnitude, non-strict
/// for angle.
bool neighbor_predicate(const FlowPoint& a, const FlowPoint& b, const ClusterParams& p);

/// DBSCAN over neighbor_predicate. Cluster labels are numbered by ascending
/// first-core-point input index; a border point claimed by several clusters
/// joins the one whose claiming core point has the lowest input index.
ClusterAssignment dbscan(const std::vector<FlowPoint>& points, const ClusterParams& p);

/// Flow samples for clustering. Pixels with magnitude below min_mag or an
/// invalid correspondence are skipped; stride subsamples the grid.
std::vector<FlowPoint> flow_to_points(const FlowField& flow, double min_mag, int stride);

/// Same, restricted to a set of row-major pixel indices (verification pass).
std::vector<FlowPoint> flow_to_points_in_region(const FlowField& flow,
                                                const std::vector<int>& region,
                                                double min_mag);

/// Rasterized cluster masks: one mask per cluster, id = cluster label + 1.
/// With stride > 1 every sample fills its stride x stride block (nearest
/// sample fill); noise points stay unassigned. Masks are pairwise disjoint.
struct RawMasks {
    std::vector<std::pair<int, std::vector<int>>> masks;  // (mask_id, sorted pixel indices)
    int width = 0;
    int height = 0;
};
RawMasks masks_from_assignment(const ClusterAssignment& assign,
                               const std::vector<FlowPoint>& points,
                               int width, int height, int stride = 1);

} // namespace nudgesim
