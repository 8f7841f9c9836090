#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nudgesim/eval.hpp"
#include "nudgesim/hypothesis.hpp"
#include "nudgesim/motioncluster.hpp"
#include "nudgesim/policy.hpp"
#include "nudgesim/scene.hpp"

namespace nudgesim {

struct RunConfig {
    SceneConfig scene;
    ClusterParams cluster;
    double min_mag = 0.5;  // magnitude floor for exploratory clustering
    int stride = 1;
    PolicyParams policy;
    double tau_h = 0.5;
    double tau_stable = 0.05;
    int window_n = 2;
    int budget = 20;
    NoiseSpec noise;
    double cam_shift = 8.0;       // px, active-phase camera move
    double contact_travel = 120.0;
    bool merge_glued = true;      // score glued groups as one region
    int trials = 25;
    uint64_t seed = 42;
    bool write_snapshots = true;
};

/// Parse a JSON config file. Unknown keys are rejected. All keys optional.
RunConfig load_config(const std::string& path);

struct TrialResult {
    TrialRecord record;
    SceneState final_scene;
    SegmentationHypothesis final_hyp;
    Phase final_phase = Phase::Exploring;
    std::vector<int> split_mask_ids;  // masks split during verification
};

/// Callback fired after every scored nudge: (nudge_index, scene, hypothesis).
using SnapshotFn = std::function<void(int, const SceneState&, const SegmentationHypothesis&)>;

/// One full loop: active phase, iterative nudging, verification, metrics
/// after every nudge. Pipeline failures come back as failed records.
TrialResult run_trial(const RunConfig& config, uint64_t seed, const SnapshotFn& snapshot = nullptr);

struct RunOutput {
    std::vector<TrialRecord> records;
    SummaryTable summary;
};

/// `trials` seeded trials (seed, seed+1, ...) over a bounded worker pool;
/// writes trials.csv, summary.csv and per-nudge hyp_<trial>_<nudge>.pgm
/// snapshots under out_dir.
RunOutput run_many(const RunConfig& config, const std::string& out_dir, int jobs);

/// Table-style noise study: each eps_m with eps_a = 0, then each eps_a with
/// eps_m = 0. Trials per cell share seeds. Writes sweep.csv plus a per-cell
/// trials CSV under out_dir.
SweepTable run_sweep(const RunConfig& config, const std::vector<double>& eps_m_values,
                     const std::vector<double>& eps_a_values, const std::string& out_dir,
                     int jobs);

} // namespace nudgesim
