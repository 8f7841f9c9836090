#pragma once

#include <vector>

#include "nudgesim/flow.hpp"
#include "nudgesim/hypothesis.hpp"
#include "nudgesim/scene.hpp"

namespace nudgesim {

/// High-uncertainty region extracted from rho; pixels are row-major indices.
struct Blob {
    std::vector<int> pixels;  // 8-connected, nonempty
    double mean_rho = 0.0;
};

/// Covariance summary of one mask's flow samples.
struct EigenStats {
    int mask_id = 0;
    double sigma[3] = {0.0, 0.0, 0.0};  // [a, b, c] for [[a, c], [c, b]]
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    Vec2 v_min;
    Vec2 v_max;
    double kappa = 1.0;  // (|l_max| + eps) / (|l_min| + eps), eps = 1e-6
};

struct PolicyParams {
    double thresh_k = 2.0;        // binarization at mean + thresh_k * std
    double min_area = 150.0;      // px^2, blob survival threshold
    double tau_kappa = 3.0;       // fallback threshold on the 2nd-largest kappa
    double nudge_magnitude = 25.0;
    bool first_nudge_farthest = false;  // pick the hull vertex farthest from the blob centroid
};

/// Threshold rho at mean + k*std, open 3x3, 8-connected components, drop
/// small ones. Result ordered by descending mean rho. Throws
/// "no pile detected" when nothing survives.
std::vector<Blob> extract_blobs(const UncertaintyMap& rho, double thresh_k, double min_area);

/// First contact: hull of the union of all blob pixels; the vertex closest
/// to the centroid of the highest-mean-rho blob, aimed at the hull centroid.
NudgeCommand first_nudge(const std::vector<Blob>& blobs, int width, const PolicyParams& params);

/// Population flow covariance per mask with a closed-form 2x2 eigen
/// decomposition. Masks with fewer than two valid flow samples are omitted.
std::vector<EigenStats> cluster_stats(const FlowField& flow, const SegmentationHypothesis& hyp);

/// Pick the cluster with the second-largest kappa (largest when that one is
/// <= tau_kappa or only one exists); poke its rim from the side opposite the
/// intended travel along v_min.
NudgeCommand next_nudge(const std::vector<EigenStats>& stats, const SegmentationHypothesis& hyp,
                        const PolicyParams& params);

} // namespace nudgesim
