#include "nudgesim/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nudgesim/pgm.hpp"
#include "nudgesim/rng.hpp"

namespace nudgesim {

namespace {

using nlohmann::json;

void check_known_keys(const json& j) {
    static const std::set<std::string> known = {
        "n_min", "n_max", "shape_set", "table_w", "table_h", "twist_max", "seed",
        "glue_pairs", "clutter_threshold", "overlap_cap", "radius_min", "radius_max",
        "tau_d", "tau_m", "tau_a", "min_pts", "min_mag", "stride",
        "thresh_k", "min_area", "tau_kappa", "nudge_magnitude", "first_nudge_farthest",
        "tau_h", "tau_stable", "window_n", "budget",
        "eps_m", "eps_a", "angle_mode",
        "cam_shift", "contact_travel", "merge_glued", "trials", "write_snapshots",
    };
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::runtime_error("unknown config key: " + it.key());
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
    check_known_keys(j);

    RunConfig cfg;
    get_to(j, "n_min", cfg.scene.n_min);
    get_to(j, "n_max", cfg.scene.n_max);
    if (j.contains("shape_set")) cfg.scene.shape_set = parse_shape_set(j.at("shape_set"));
    get_to(j, "table_w", cfg.scene.table_w);
    get_to(j, "table_h", cfg.scene.table_h);
    get_to(j, "twist_max", cfg.scene.twist_max);
    get_to(j, "glue_pairs", cfg.scene.glue_pairs);
    get_to(j, "clutter_threshold", cfg.scene.clutter_threshold);
    get_to(j, "overlap_cap", cfg.scene.overlap_cap);
    get_to(j, "radius_min", cfg.scene.radius_min);
    get_to(j, "radius_max", cfg.scene.radius_max);

    get_to(j, "tau_d", cfg.cluster.tau_d);
    get_to(j, "tau_m", cfg.cluster.tau_m);
    get_to(j, "tau_a", cfg.cluster.tau_a);
    get_to(j, "min_pts", cfg.cluster.min_pts);
    get_to(j, "min_mag", cfg.min_mag);
    get_to(j, "stride", cfg.stride);

    get_to(j, "thresh_k", cfg.policy.thresh_k);
    get_to(j, "min_area", cfg.policy.min_area);
    get_to(j, "tau_kappa", cfg.policy.tau_kappa);
    get_to(j, "nudge_magnitude", cfg.policy.nudge_magnitude);
    get_to(j, "first_nudge_farthest", cfg.policy.first_nudge_farthest);

    get_to(j, "tau_h", cfg.tau_h);
    get_to(j, "tau_stable", cfg.tau_stable);
    get_to(j, "window_n", cfg.window_n);
    get_to(j, "budget", cfg.budget);

    get_to(j, "eps_m", cfg.noise.eps_m);
    get_to(j, "eps_a", cfg.noise.eps_a);
    if (j.contains("angle_mode")) {
        const std::string mode = j.at("angle_mode");
        if (mode == "additive") cfg.noise.angle_mode = AngleNoiseMode::Additive;
        else if (mode == "multiplicative") cfg.noise.angle_mode = AngleNoiseMode::Multiplicative;
        else throw std::runtime_error("angle_mode must be additive or multiplicative");
    }

    get_to(j, "cam_shift", cfg.cam_shift);
    get_to(j, "contact_travel", cfg.contact_travel);
    get_to(j, "merge_glued", cfg.merge_glued);
    get_to(j, "trials", cfg.trials);
    get_to(j, "seed", cfg.seed);
    get_to(j, "write_snapshots", cfg.write_snapshots);

    if (cfg.trials < 1) throw std::runtime_error("trials must be >= 1");
    if (cfg.budget < 0) throw std::runtime_error("budget must be >= 0");
    if (cfg.cluster.tau_d <= 0 || cfg.cluster.tau_m <= 0 || cfg.cluster.tau_a <= 0 ||
        cfg.cluster.min_pts < 1)
        throw std::runtime_error("cluster thresholds must be positive");
    if (cfg.noise.eps_m < 0 || cfg.noise.eps_a < 0)
        throw std::runtime_error("noise bounds must be nonnegative");
    if (cfg.stride < 1) throw std::runtime_error("stride must be >= 1");
    return cfg;
}

namespace {

/// |mask| / area(convex hull of mask). Near 1 for one convex body; a waisted
/// union of two bodies scores noticeably lower.
double mask_solidity(const Mask& mask, int width) {
    std::vector<Vec2> pts;
    pts.reserve(mask.pixels.size());
    for (int idx : mask.pixels)
        pts.push_back({static_cast<double>(idx % width), static_cast<double>(idx / width)});
    const Polygon hull = convex_hull(pts);
    if (hull.size() < 3) return 1.0;
    const double ha = std::abs(polygon_area(hull));
    return ha > 0.0 ? static_cast<double>(mask.pixels.size()) / ha : 1.0;
}

struct TrialEngine {
    const RunConfig& cfg;
    uint64_t seed;
    const SnapshotFn& snapshot;

    Rng twist_rng;
    Rng noise_base;
    Rng rho_base;
    uint64_t noise_counter = 0;
    uint64_t rho_counter = 0;

    TrialEngine(const RunConfig& c, uint64_t s, const SnapshotFn& snap)
        : cfg(c), seed(s), snapshot(snap),
          twist_rng(Rng(s).fork(rng_stream::kTwist)),
          noise_base(Rng(s).fork(rng_stream::kNoise)),
          rho_base(Rng(s).fork(rng_stream::kRho)) {}

    double sample_twist() {
        return cfg.scene.twist_max > 0.0
                   ? twist_rng.uniform(-cfg.scene.twist_max, cfg.scene.twist_max)
                   : 0.0;
    }
    uint64_t next_noise_seed() { return noise_base.fork(noise_counter++).state(); }

    NudgeCommand aim_from_uncertainty(const SceneState& scene) {
        const UncertaintyMap rho = synthesize_uncertainty(
            scene, {cfg.cam_shift, 0.0}, rho_base.fork(rho_counter++));
        const std::vector<Blob> blobs = extract_blobs(rho, cfg.policy.thresh_k, cfg.policy.min_area);
        NudgeCommand cmd = first_nudge(blobs, scene.width, cfg.policy);
        cmd.twist = sample_twist();
        return cmd;
    }

    /// Re-engages uncovered evidence: blob pixels far from every hypothesis
    /// mask point at foreground the loop has not segmented yet. Returns a
    /// nudge aimed there, or nothing when the hypothesis explains the pile.
    std::optional<NudgeCommand> aim_at_uncovered(const SceneState& scene,
                                                 const SegmentationHypothesis& hyp) {
        const UncertaintyMap rho = synthesize_uncertainty(
            scene, {cfg.cam_shift, 0.0}, rho_base.fork(rho_counter++));
        std::vector<Blob> blobs;
        try {
            blobs = extract_blobs(rho, cfg.policy.thresh_k, cfg.policy.min_area);
        } catch (const std::exception&) {
            return std::nullopt;
        }

        // A blob pixel counts as covered when a mask lies within reach px of
        // it (the rho band hugs the silhouette boundary from outside).
        constexpr int kReach = 9;
        BinaryImage near_mask(scene.width, scene.height, 0);
        for (const Mask& m : hyp.masks)
            for (int idx : m.pixels) near_mask.data[idx] = 1;
        for (int pass = 0; pass < kReach / 3; ++pass) near_mask = dilate3x3(near_mask);

        size_t total = 0, uncovered = 0;
        std::vector<Blob> open_blobs;
        for (const Blob& b : blobs) {
            Blob rest;
            for (int idx : b.pixels) {
                ++total;
                const int x = idx % scene.width, y = idx / scene.width;
                bool covered = false;
                for (int dy = -kReach; dy <= kReach && !covered; dy += 3)
                    for (int dx = -kReach; dx <= kReach; dx += 3) {
                        const int nx = x + dx, ny = y + dy;
                        if (near_mask.in_bounds(nx, ny) && near_mask.at(nx, ny)) {
                            covered = true;
                            break;
                        }
                    }
                if (!covered) {
                    ++uncovered;
                    rest.pixels.push_back(idx);
                }
            }
            if (static_cast<double>(rest.pixels.size()) >= cfg.policy.min_area) {
                double sum = 0.0;
                for (int idx : rest.pixels) sum += rho.rho[idx];
                rest.mean_rho = sum / static_cast<double>(rest.pixels.size());
                open_blobs.push_back(std::move(rest));
            }
        }
        if (total == 0 || open_blobs.empty()) return std::nullopt;
        if (static_cast<double>(uncovered) / static_cast<double>(total) < 0.25)
            return std::nullopt;

        try {
            NudgeCommand cmd = first_nudge(open_blobs, scene.width, cfg.policy);
            cmd.twist = sample_twist();
            return cmd;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
};

} // namespace

TrialResult run_trial(const RunConfig& cfg, uint64_t seed, const SnapshotFn& snapshot) {
    TrialResult res;
    res.record.seed = seed;

    TrialEngine eng(cfg, seed, snapshot);
    try {
        SceneState scene = generate_scene(cfg.scene, seed);
        res.record.n_objects = static_cast<int>(scene.objects.size());

        LoopState state;
        state.hyp.width = scene.width;
        state.hyp.height = scene.height;

        auto score_now = [&](const SceneState& s, const SegmentationHypothesis& h, int nudge_idx) {
            const auto gt = gt_regions(render_labels(s), s, cfg.merge_glued);
            res.record.per_nudge.push_back(score_hypothesis(h, gt, nudge_idx));
            if (snapshot) snapshot(nudge_idx, s, h);
        };

        // Initial configuration scores too (empty hypothesis).
        score_now(scene, state.hyp, 0);

        // Active phase: find the pile and the first contact.
        NudgeCommand cmd = eng.aim_from_uncertainty(scene);
        int missed_in_a_row = 0;

        // Cluster the flow, reconcile with the propagated hypothesis (in the
        // post-motion frame), drop sub-object flecks and husks, and replace
        // `hyp` in place. Returns the propagated-vs-refined mean IoU.
        auto observe = [&](SegmentationHypothesis& hyp, const FlowField& flow,
                           bool already_propagated = false) {
            const std::vector<FlowPoint> points = flow_to_points(flow, cfg.min_mag, cfg.stride);
            const ClusterAssignment assign = dbscan(points, cfg.cluster);
            RawMasks raw = masks_from_assignment(assign, points, flow.width, flow.height,
                                                 cfg.stride);
            raw.masks.erase(std::remove_if(raw.masks.begin(), raw.masks.end(),
                                           [&](const auto& m) {
                                               return static_cast<double>(m.second.size()) <
                                                      cfg.policy.min_area;
                                           }),
                            raw.masks.end());

            const SegmentationHypothesis prop = already_propagated ? hyp : warp_masks(hyp, flow);
            SegmentationHypothesis fresh =
                warp_masks(hypothesis_from_raw(raw, hyp.time_index), flow);
            fresh.time_index = prop.time_index;

            SegmentationHypothesis next = refine(prop, fresh, cfg.tau_h);
            // Moving masks shed a thin trail of stale pixels every warp; keep
            // only substantial connected components of each mask.
            for (Mask& m : next.masks) {
                BinaryImage bin(next.width, next.height, 0);
                for (int idx : m.pixels) bin.data[idx] = 1;
                auto comps = connected_components8(bin);
                if (comps.size() <= 1) continue;
                size_t largest = 0;
                for (const auto& c : comps) largest = std::max(largest, c.size());
                std::vector<int> kept;
                for (auto& c : comps) {
                    if (static_cast<double>(c.size()) >=
                        std::max(40.0, 0.1 * static_cast<double>(largest)))
                        kept.insert(kept.end(), c.begin(), c.end());
                }
                std::sort(kept.begin(), kept.end());
                m.pixels = std::move(kept);
            }
            // Re-disjointification can leave sub-object husks behind when a
            // common-fate cluster bulldozes a neighbour; they are not
            // instances and would each cost a verification nudge.
            next.masks.erase(std::remove_if(next.masks.begin(), next.masks.end(),
                                            [&](const Mask& m) {
                                                return static_cast<double>(m.pixels.size()) <
                                                       cfg.policy.min_area;
                                            }),
                             next.masks.end());
            const double stability = mean_hypothesis_iou(prop, next);
            hyp = std::move(next);
            return stability;
        };

        // Masks that survived a verification nudge without splitting; a mask
        // leaves the set when refinement changes it substantially.
        std::set<int> verified;
        std::map<int, int> verify_attempts;
        std::map<int, size_t> last_area;
        auto update_verified = [&](const SegmentationHypothesis& hyp) {
            std::map<int, size_t> area;
            for (const Mask& m : hyp.masks) area[m.id] = m.pixels.size();
            for (auto it = verified.begin(); it != verified.end();) {
                const auto now = area.find(*it);
                const auto before = last_area.find(*it);
                const bool gone = now == area.end();
                // Warp and harvest slop drift a mask's area a little every
                // nudge; only a jump the size of another body means the mask
                // is no longer what was verified.
                const bool changed =
                    !gone && before != last_area.end() &&
                    std::abs(static_cast<double>(now->second) -
                             static_cast<double>(before->second)) >
                        std::max(80.0, 0.25 * static_cast<double>(before->second));
                if (gone || changed) it = verified.erase(it);
                else ++it;
            }
            last_area = std::move(area);
        };

        while (state.nudge_count < cfg.budget && state.phase != Phase::Done) {
            if (state.phase == Phase::Exploring) {
                const auto contact = resolve_contact(scene, cmd, cfg.contact_travel);
                if (!contact) {
                    if (++missed_in_a_row >= 3) throw std::runtime_error("nudge missed pile");
                    cmd = eng.aim_from_uncertainty(scene);
                    continue;
                }
                missed_in_a_row = 0;

                const SceneState after = apply_nudge(scene, *contact);
                FlowField flow = ground_truth_flow(scene, after);
                NoiseSpec noise = cfg.noise;
                noise.rng_seed = eng.next_noise_seed();
                flow = inject_noise(flow, noise);
                ++state.nudge_count;

                const double stability = observe(state.hyp, flow);
                // Consecutive hypotheses compared in the same frame: the
                // previous one enters as its flow-propagated image, so the
                // history tracks how much refinement changed the hypothesis
                // rather than how far the objects moved.
                state.iou_history.push_back(stability);
#ifdef NUDGESIM_TRACE
                std::fprintf(stderr, "[T] n=%d explore stab=%.3f masks=%zu\n",
                             state.nudge_count, stability, state.hyp.masks.size());
#endif
                scene = after;
                update_verified(state.hyp);
                score_now(scene, state.hyp, state.nudge_count);

                if (check_termination(state, cfg.tau_stable, cfg.window_n)) {
                    // The hypothesis stopped changing. If blob evidence sits
                    // far from every mask, there is still unsegmented pile to
                    // poke; otherwise move on to verification.
                    const auto reengage = eng.aim_at_uncovered(scene, state.hyp);
#ifdef NUDGESIM_TRACE
                    std::fprintf(stderr, "[T] n=%d stable, reengage=%d\n", state.nudge_count,
                                 (int)reengage.has_value());
#endif
                    if (reengage) {
                        cmd = *reengage;
                        // Drop one history entry so stability re-arms after
                        // the discovery nudge lands.
                        state.iou_history.pop_back();
                        continue;
                    }
                    state.phase = Phase::Verifying;
                    continue;
                }

                const std::vector<EigenStats> stats = cluster_stats(flow, state.hyp);
                if (stats.empty()) {
                    cmd = eng.aim_from_uncertainty(scene);
                } else {
                    cmd = next_nudge(stats, state.hyp, cfg.policy);
                    cmd.twist = eng.sample_twist();
                }
            } else {  // Phase::Verifying
                // One verification nudge at a time, lowest unverified id
                // first, so each nudge doubles as a global observation.
                int target = -1;
                for (const Mask& m : state.hyp.masks)
                    if (!verified.count(m.id) && (target < 0 || m.id < target)) target = m.id;
                if (target < 0) {
                    state.phase = Phase::Done;
                    continue;
                }

                VerifyParams vp;
                vp.cluster = cfg.cluster;
                vp.noise = cfg.noise;
                vp.nudge_magnitude = cfg.policy.nudge_magnitude;
                vp.tau_h = cfg.tau_h;
                vp.max_nudges = 1;
                vp.contact_travel = cfg.contact_travel;
                vp.min_split_area = cfg.policy.min_area;

                VerifyResult vr = verification_round(
                    scene, state.hyp, vp,
                    [&] { return eng.sample_twist(); },
                    [&] { return eng.next_noise_seed(); },
                    nullptr, {target});
#ifdef NUDGESIM_TRACE
                std::fprintf(stderr, "[T] n=%d verify target=%d used=%d split=%d\n",
                             state.nudge_count, target, vr.nudges_used, (int)vr.split_found);
#endif
                if (vr.nudges_used == 0) {
                    // Unpokeable (stale or sliver) mask: take it off the list.
                    verified.insert(target);
                    continue;
                }
                scene = vr.scene;
                state.hyp = vr.hyp;
                state.nudge_count += vr.nudges_used;
                const bool split_here = vr.split_found;
                for (int id : vr.split_mask_ids) res.split_mask_ids.push_back(id);

                // The same flow is also a full observation: it may reveal a
                // neighbour that this verification poke happened to move.
                observe(state.hyp, vr.last_flow, /*already_propagated=*/true);

                if (!split_here) {
                    // Certify masks shaped like a single body right away; a
                    // low-solidity mask may be an undetected common-fate
                    // merge and gets one more attempt before it passes.
                    const Mask* m = state.hyp.find(target);
                    const int attempts = ++verify_attempts[target];
                    if (m == nullptr || mask_solidity(*m, state.hyp.width) >= 0.8 ||
                        attempts >= 2)
                        verified.insert(target);
                }
                update_verified(state.hyp);
                score_now(scene, state.hyp, state.nudge_count);

                if (split_here && state.nudge_count < cfg.budget) {
                    // Only the affected clusters go back to exploring: aim the
                    // follow-up nudge from the stats of the unverified masks.
                    state.phase = Phase::Exploring;
                    std::vector<EigenStats> stats = cluster_stats(vr.last_flow, state.hyp);
                    std::vector<EigenStats> affected;
                    for (const EigenStats& st : stats)
                        if (!verified.count(st.mask_id)) affected.push_back(st);
                    if (!affected.empty()) stats = std::move(affected);
                    if (stats.empty()) {
                        cmd = eng.aim_from_uncertainty(scene);
                    } else {
                        cmd = next_nudge(stats, state.hyp, cfg.policy);
                        cmd.twist = eng.sample_twist();
                    }
                }
            }
        }

        res.record.nudges_used = state.nudge_count;
        res.record.final = final_metrics(res.record.per_nudge);
        res.final_scene = std::move(scene);
        res.final_hyp = std::move(state.hyp);
        res.final_phase = state.phase;
    } catch (const std::exception& e) {
        res.record.failed = true;
        res.record.failure = e.what();
        res.record.final = final_metrics(res.record.per_nudge);
    }
    return res;
}

namespace {

std::vector<TrialResult> run_pool(const RunConfig& cfg, const std::string& out_dir, int jobs,
                                  bool snapshots) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    std::vector<TrialResult> results(cfg.trials);
    std::atomic<int> next{0};
    const int workers = std::max(1, std::min(jobs, cfg.trials));

    auto work = [&] {
        for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
            SnapshotFn snap;
            if (snapshots && !out_dir.empty()) {
                const int trial_idx = t;
                snap = [&, trial_idx](int nudge, const SceneState&, const SegmentationHypothesis& h) {
                    char name[64];
                    std::snprintf(name, sizeof(name), "hyp_%03d_%03d.pgm", trial_idx, nudge);
                    write_pgm16((fs::path(out_dir) / name).string(), h.to_label_image());
                };
            }
            results[t] = run_trial(cfg, cfg.seed + static_cast<uint64_t>(t), snap);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    return results;
}

} // namespace

RunOutput run_many(const RunConfig& cfg, const std::string& out_dir, int jobs) {
    const std::vector<TrialResult> results = run_pool(cfg, out_dir, jobs, cfg.write_snapshots);
    RunOutput out;
    for (const TrialResult& r : results) out.records.push_back(r.record);
    out.summary = aggregate(out.records);
    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        write_trials_csv((fs::path(out_dir) / "trials.csv").string(), out.records);
        write_summary_csv((fs::path(out_dir) / "summary.csv").string(), out.summary);
    }
    return out;
}

SweepTable run_sweep(const RunConfig& base, const std::vector<double>& eps_m_values,
                     const std::vector<double>& eps_a_values, const std::string& out_dir,
                     int jobs) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    // One axis at a time, as in the noise study: (m, 0) then (0, a).
    std::vector<std::pair<double, double>> cells;
    for (double m : eps_m_values) cells.emplace_back(m, 0.0);
    for (double a : eps_a_values)
        if (a != 0.0 || std::find(eps_m_values.begin(), eps_m_values.end(), 0.0) == eps_m_values.end())
            cells.emplace_back(0.0, a);

    SweepTable table;
    for (const auto& [eps_m, eps_a] : cells) {
        RunConfig cfg = base;
        cfg.noise.eps_m = eps_m;
        cfg.noise.eps_a = eps_a;
        cfg.write_snapshots = false;

        const std::vector<TrialResult> results = run_pool(cfg, "", jobs, false);
        std::vector<TrialRecord> records;
        for (const TrialResult& r : results) records.push_back(r.record);

        SweepCell cell;
        cell.eps_m = eps_m;
        cell.eps_a = eps_a;
        cell.summary = aggregate(records);
        table.push_back(cell);

        if (!out_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "trials_m%g_a%g.csv", eps_m, eps_a);
            write_trials_csv((fs::path(out_dir) / name).string(), records);
        }
    }
    if (!out_dir.empty())
        write_sweep_csv((fs::path(out_dir) / "sweep.csv").string(), table);
    return table;
}

} // namespace nudgesim
