#pragma once

#include <string>
#include <vector>

#include "nudgesim/hypothesis.hpp"
#include "nudgesim/image.hpp"
#include "nudgesim/scene.hpp"

namespace nudgesim {

/// |A ∩ B| / |A ∪ B| over sorted pixel-index sets. Both empty -> 1, one
/// empty -> 0.
double iou(const std::vector<int>& a, const std::vector<int>& b);

/// Ground-truth region for scoring: one or more instance labels (a glued
/// group merges into a single region) plus their union of pixels.
struct GtRegion {
    int region_id = 0;
    std::vector<int> labels;
    std::vector<int> pixels;  // sorted
};

/// Regions from a rendered label image. With merge_glued, labels whose
/// objects share a glue_group collapse into one region.
std::vector<GtRegion> gt_regions(const LabelImage& labels, const SceneState& scene,
                                 bool merge_glued);

struct ObjectScore {
    int gt_id = 0;
    int matched_mask_id = 0;  // 0 = unmatched
    double best_iou = 0.0;
    bool success = false;
};

/// Greedy one-to-one matching by descending IoU; unmatched ground truth
/// scores 0. Success at IoU >= tau.
std::vector<ObjectScore> match_and_score(const SegmentationHypothesis& hyp,
                                         const std::vector<GtRegion>& gt, double tau);

/// Mean IoU between two hypotheses under the same greedy matcher; unmatched
/// masks on either side contribute zeros. Both empty -> 1.
double mean_hypothesis_iou(const SegmentationHypothesis& a, const SegmentationHypothesis& b);

struct NudgeMetrics {
    int nudge_index = 0;
    double mean_iou = 0.0;
    double dr50 = 0.0;
    double dr75 = 0.0;
    double iou_s = 0.0;  // mean IoU over successes at tau = 0.5
};

struct TrialRecord {
    uint64_t seed = 0;
    int n_objects = 0;
    std::vector<NudgeMetrics> per_nudge;
    NudgeMetrics final;  // per-metric maxima over the nudges
    int nudges_used = 0;
    bool failed = false;
    std::string failure;
};

/// Metrics of one hypothesis against ground truth regions.
NudgeMetrics score_hypothesis(const SegmentationHypothesis& hyp,
                              const std::vector<GtRegion>& gt, int nudge_index);

/// Element-wise maxima over the per-nudge rows (the trial's final metrics).
NudgeMetrics final_metrics(const std::vector<NudgeMetrics>& per_nudge);

struct SummaryTable {
    double mean_iou = 0.0;
    double dr50 = 0.0;
    double dr75 = 0.0;
    double iou_s = 0.0;
    double n_avg = 0.0;       // mean nudges per trial
    int trials = 0;
    int failed_trials = 0;
};

SummaryTable aggregate(const std::vector<TrialRecord>& trials);

struct SweepCell {
    double eps_m = 0.0;
    double eps_a = 0.0;
    SummaryTable summary;
};
using SweepTable = std::vector<SweepCell>;

/// CSV writers; headers are part of the file contract.
/// trials: seed,n_objects,nudges,iou,dr50,dr75,iou_s
/// sweep:  eps_m,eps_a,mean_iou,dr50,dr75
void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials);
void write_summary_csv(const std::string& path, const SummaryTable& summary);
void write_sweep_csv(const std::string& path, const SweepTable& table);

} // namespace nudgesim
