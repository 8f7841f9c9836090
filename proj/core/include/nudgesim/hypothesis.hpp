#pragma once

#include <functional>
#include <vector>

#include "nudgesim/flow.hpp"
#include "nudgesim/motioncluster.hpp"
#include "nudgesim/scene.hpp"

namespace nudgesim {

struct Mask {
    int id = 0;
    std::vector<int> pixels;  // sorted row-major indices, nonempty
};

struct SegmentationHypothesis {
    std::vector<Mask> masks;  // pairwise disjoint
    int width = 0;
    int height = 0;
    int time_index = 0;

    const Mask* find(int id) const {
        for (const Mask& m : masks)
            if (m.id == id) return &m;
        return nullptr;
    }
    int max_id() const {
        int v = 0;
        for (const Mask& m : masks) v = std::max(v, m.id);
        return v;
    }
    /// Dense id map, 0 = unassigned.
    LabelImage to_label_image() const;
};

SegmentationHypothesis hypothesis_from_raw(const RawMasks& raw, int time_index);

enum class Phase { Exploring, Verifying, Done };

struct LoopState {
    SegmentationHypothesis hyp;
    std::vector<double> iou_history;  // mean IoU between consecutive hypotheses
    int nudge_count = 0;
    Phase phase = Phase::Exploring;
};

/// Forward-splat every mask pixel along the flow. Label collisions at a
/// target pixel go to the source with the larger flow norm; each mask then
/// gets one pass of 3x3 closing to fill splat holes (claimed pixels are
/// never overwritten). A mask whose pixels all carry exactly zero flow is
/// passed through untouched.
SegmentationHypothesis warp_masks(const SegmentationHypothesis& hyp, const FlowField& flow);

/// Reconcile a propagated hypothesis with a fresh clustering of the same
/// frame. Fresh clusters merge into the propagated mask they mostly overlap
/// (ratio |fresh ∩ prop| / |fresh| > tau_h); extra fresh clusters claiming
/// the same propagated mask split its residual off as new masks; fresh
/// clusters matching nothing become new masks; untouched propagated masks
/// persist. Contested pixels go to the larger claiming mask.
SegmentationHypothesis refine(const SegmentationHypothesis& propagated,
                              const SegmentationHypothesis& fresh,
                              double tau_h);

/// True once the last window_n deltas of the mean-IoU history are all below
/// tau_stable (requires window_n + 1 history entries).
bool check_termination(const LoopState& state, double tau_stable, int window_n);

struct VerifyParams {
    ClusterParams cluster;
    NoiseSpec noise;                // eps bounds; per-nudge seed via noise_seed
    double nudge_magnitude = 25.0;
    double tau_h = 0.5;
    int max_nudges = 1 << 30;       // remaining budget
    double contact_travel = 120.0;  // px the poker may travel to find contact
    double min_split_area = 150.0;  // clusters below this are warp residue, not objects
};

struct VerifyResult {
    SceneState scene;
    SegmentationHypothesis hyp;
    bool split_found = false;
    int nudges_used = 0;
    std::vector<int> split_mask_ids;
    std::vector<int> cleared_mask_ids;  // nudged and did not split
    FlowField last_flow;  // most recent observation, for the follow-up policy
};

/// One verification nudge per mask, aimed from the boundary point farthest
/// from the mask centroid toward the centroid. Flow restricted to the mask is
/// reclustered (no magnitude floor, so a static part shows up as its own
/// cluster); a mask that splits into >= 2 clusters is replaced via refine.
/// With `only_ids` nonempty, just those masks are nudged (re-verification
/// after a split is per-cluster). The observer runs after every nudge.
VerifyResult verification_round(
    const SceneState& scene, const SegmentationHypothesis& hyp, const VerifyParams& params,
    const std::function<double()>& twist_sampler,
    const std::function<uint64_t()>& noise_seed,
    const std::function<void(const SceneState&, const SegmentationHypothesis&)>& observer = nullptr,
    const std::vector<int>& only_ids = {});

} // namespace nudgesim
