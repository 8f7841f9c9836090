#include "nudgesim/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace nudgesim {

LabelImage SegmentationHypothesis::to_label_image() const {
    LabelImage img(width, height, 0);
    for (const Mask& m : masks)
        for (int idx : m.pixels) img.data[idx] = static_cast<uint16_t>(m.id);
    return img;
}

SegmentationHypothesis hypothesis_from_raw(const RawMasks& raw, int time_index) {
    SegmentationHypothesis hyp;
    hyp.width = raw.width;
    hyp.height = raw.height;
    hyp.time_index = time_index;
    for (const auto& [id, pixels] : raw.masks)
        hyp.masks.push_back({id, pixels});
    return hyp;
}

namespace {

BinaryImage mask_to_binary(const std::vector<int>& pixels, int w, int h) {
    BinaryImage img(w, h, 0);
    for (int idx : pixels) img.data[idx] = 1;
    return img;
}

} // namespace

SegmentationHypothesis warp_masks(const SegmentationHypothesis& hyp, const FlowField& flow) {
    if (flow.width != hyp.width || flow.height != hyp.height)
        throw std::runtime_error("flow dimensions do not match hypothesis");

    const int w = hyp.width, h = hyp.height;
    SegmentationHypothesis out;
    out.width = w;
    out.height = h;
    out.time_index = hyp.time_index + 1;

    // claimed[idx] = mask id; claim_norm[idx] = flow norm of the winning source.
    std::vector<int> claimed(static_cast<size_t>(w) * h, 0);
    std::vector<float> claim_norm(static_cast<size_t>(w) * h, -1.0f);
    std::vector<std::vector<int>> splat(hyp.masks.size());
    std::vector<uint8_t> is_static(hyp.masks.size(), 1);

    for (size_t mi = 0; mi < hyp.masks.size(); ++mi) {
        const Mask& m = hyp.masks[mi];
        for (int idx : m.pixels) {
            const size_t i = static_cast<size_t>(idx);
            if (flow.u[i] != 0.0 || flow.v[i] != 0.0) { is_static[mi] = 0; break; }
        }
    }

    for (size_t mi = 0; mi < hyp.masks.size(); ++mi) {
        const Mask& m = hyp.masks[mi];
        for (int idx : m.pixels) {
            const size_t i = static_cast<size_t>(idx);
            const int x = idx % w, y = idx / w;
            const int tx = x + static_cast<int>(std::lround(flow.u[i]));
            const int ty = y + static_cast<int>(std::lround(flow.v[i]));
            if (tx < 0 || tx >= w || ty < 0 || ty >= h) continue;
            const size_t t = static_cast<size_t>(ty) * w + tx;
            const float norm = static_cast<float>(std::hypot(flow.u[i], flow.v[i]));
            // Faster source wins a contested target (mover occludes static);
            // ties keep the earlier mask.
            if (norm > claim_norm[t]) {
                claimed[t] = m.id;
                claim_norm[t] = norm;
            }
        }
    }
    for (size_t t = 0; t < claimed.size(); ++t)
        if (claimed[t] != 0) {
            for (size_t mi = 0; mi < hyp.masks.size(); ++mi)
                if (hyp.masks[mi].id == claimed[t]) { splat[mi].push_back(static_cast<int>(t)); break; }
        }

    // Per-mask closing; only unclaimed pixels may be filled. Masks that did
    // not move at all keep their exact input pixel set.
    for (size_t mi = 0; mi < hyp.masks.size(); ++mi) {
        const Mask& m = hyp.masks[mi];
        if (is_static[mi]) {
            out.masks.push_back({m.id, m.pixels});
            continue;
        }
        if (splat[mi].empty()) continue;  // fully clipped out of frame
        const BinaryImage closed = close3x3(mask_to_binary(splat[mi], w, h));
        std::vector<int> pixels = splat[mi];
        for (size_t idx = 0; idx < closed.size(); ++idx) {
            if (closed.data[idx] != 0 && claimed[idx] == 0) {
                claimed[idx] = m.id;
                pixels.push_back(static_cast<int>(idx));
            }
        }
        std::sort(pixels.begin(), pixels.end());
        out.masks.push_back({m.id, std::move(pixels)});
    }

    // A static mask's pixels may have been claimed by a mover's splat; drop
    // those to keep the output disjoint (the mover occludes).
    for (Mask& m : out.masks) {
        std::vector<int> kept;
        kept.reserve(m.pixels.size());
        for (int idx : m.pixels)
            if (claimed[idx] == 0 || claimed[idx] == m.id) kept.push_back(idx);
        m.pixels = std::move(kept);
    }
    out.masks.erase(std::remove_if(out.masks.begin(), out.masks.end(),
                                   [](const Mask& m) { return m.pixels.empty(); }),
                    out.masks.end());
    return out;
}

SegmentationHypothesis refine(const SegmentationHypothesis& propagated,
                              const SegmentationHypothesis& fresh,
                              double tau_h) {
    if (propagated.width != fresh.width || propagated.height != fresh.height)
        throw std::runtime_error("refine: frame mismatch");
    const int w = propagated.width, h = propagated.height;

    // Dense map of propagated ids for overlap counting.
    std::vector<int> prop_map(static_cast<size_t>(w) * h, 0);
    for (const Mask& m : propagated.masks)
        for (int idx : m.pixels) prop_map[idx] = m.id;

    // Match every fresh cluster to the propagated mask it overlaps most.
    struct Match {
        int prop_id = 0;      // 0 = unmatched
        double ratio = 0.0;
    };
    std::vector<Match> matches(fresh.masks.size());
    for (size_t fi = 0; fi < fresh.masks.size(); ++fi) {
        std::map<int, int> counts;
        for (int idx : fresh.masks[fi].pixels)
            if (prop_map[idx] != 0) ++counts[prop_map[idx]];
        int best_id = 0, best_count = 0;
        for (const auto& [id, count] : counts)
            if (count > best_count) { best_count = count; best_id = id; }
        matches[fi].ratio = fresh.masks[fi].pixels.empty()
                                ? 0.0
                                : static_cast<double>(best_count) / fresh.masks[fi].pixels.size();
        matches[fi].prop_id = matches[fi].ratio > tau_h ? best_id : 0;
    }

    // Group matched fresh clusters per propagated mask, in fresh order.
    std::map<int, std::vector<size_t>> claims;  // prop_id -> fresh indices
    for (size_t fi = 0; fi < fresh.masks.size(); ++fi)
        if (matches[fi].prop_id != 0) claims[matches[fi].prop_id].push_back(fi);

    int next_id = std::max(propagated.max_id(), fresh.max_id()) + 1;
    std::vector<Mask> result;

    auto set_union = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> out;
        out.reserve(a.size() + b.size());
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    };
    auto set_minus = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> out;
        out.reserve(a.size());
        std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    };
    auto set_inter = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> out;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    };

    for (const Mask& pm : propagated.masks) {
        const auto it = claims.find(pm.id);
        if (it == claims.end()) {
            result.push_back(pm);  // untouched
            continue;
        }
        const std::vector<size_t>& fis = it->second;
        // First claimant merges under the propagated id; the parts of the
        // propagated mask claimed by the other fresh clusters split off.
        std::vector<int> merged = set_union(pm.pixels, fresh.masks[fis[0]].pixels);
        for (size_t k = 1; k < fis.size(); ++k) {
            const Mask& fm = fresh.masks[fis[k]];
            merged = set_minus(merged, fm.pixels);
            merged = set_minus(merged, set_inter(pm.pixels, fm.pixels));
            result.push_back({next_id++, set_union(fm.pixels, set_inter(pm.pixels, fm.pixels))});
        }
        result.push_back({pm.id, std::move(merged)});
    }

    for (size_t fi = 0; fi < fresh.masks.size(); ++fi)
        if (matches[fi].prop_id == 0 && !fresh.masks[fi].pixels.empty())
            result.push_back({next_id++, fresh.masks[fi].pixels});

    // Re-disjointify: a contested pixel goes to the larger claiming mask.
    std::vector<int> owner(static_cast<size_t>(w) * h, -1);
    std::vector<size_t> area(result.size());
    for (size_t mi = 0; mi < result.size(); ++mi) area[mi] = result[mi].pixels.size();
    for (size_t mi = 0; mi < result.size(); ++mi) {
        for (int idx : result[mi].pixels) {
            if (owner[idx] < 0 || area[mi] > area[owner[idx]])
                owner[idx] = static_cast<int>(mi);
        }
    }
    SegmentationHypothesis out;
    out.width = w;
    out.height = h;
    out.time_index = fresh.time_index;
    for (size_t mi = 0; mi < result.size(); ++mi) {
        std::vector<int> pixels;
        pixels.reserve(result[mi].pixels.size());
        for (int idx : result[mi].pixels)
            if (owner[idx] == static_cast<int>(mi)) pixels.push_back(idx);
        if (!pixels.empty()) out.masks.push_back({result[mi].id, std::move(pixels)});
    }
    return out;
}

bool check_termination(const LoopState& state, double tau_stable, int window_n) {
    if (window_n < 1) throw std::runtime_error("window_n must be >= 1");
    const auto& hist = state.iou_history;
    if (hist.size() < static_cast<size_t>(window_n) + 1) return false;
    for (size_t i = hist.size() - window_n; i < hist.size(); ++i)
        if (std::abs(hist[i] - hist[i - 1]) >= tau_stable) return false;
    return true;
}

namespace {

/// Boundary pixels of a mask: members with at least one 4-neighbour outside.
std::vector<int> mask_boundary(const std::vector<int>& pixels, int w, int h) {
    BinaryImage img = mask_to_binary(pixels, w, h);
    std::vector<int> boundary;
    for (int idx : pixels) {
        const int x = idx % w, y = idx / w;
        const bool inner = x > 0 && img.at(x - 1, y) && x < w - 1 && img.at(x + 1, y) &&
                           y > 0 && img.at(x, y - 1) && y < h - 1 && img.at(x, y + 1);
        if (!inner) boundary.push_back(idx);
    }
    return boundary;
}

Vec2 mask_centroid(const std::vector<int>& pixels, int w) {
    double sx = 0.0, sy = 0.0;
    for (int idx : pixels) {
        sx += idx % w;
        sy += idx / w;
    }
    const double n = static_cast<double>(pixels.size());
    return {sx / n, sy / n};
}

} // namespace

VerifyResult verification_round(
    const SceneState& scene, const SegmentationHypothesis& hyp, const VerifyParams& params,
    const std::function<double()>& twist_sampler,
    const std::function<uint64_t()>& noise_seed,
    const std::function<void(const SceneState&, const SegmentationHypothesis&)>& observer,
    const std::vector<int>& only_ids) {
    VerifyResult res;
    res.scene = scene;
    res.hyp = hyp;

    std::vector<int> todo;
    for (const Mask& m : res.hyp.masks) {
        if (only_ids.empty() ||
            std::find(only_ids.begin(), only_ids.end(), m.id) != only_ids.end())
            todo.push_back(m.id);
    }
    std::sort(todo.begin(), todo.end());

    const int w = hyp.width, h = hyp.height;
    for (int mask_id : todo) {
        if (res.nudges_used >= params.max_nudges) break;
        const Mask* mask = res.hyp.find(mask_id);
        if (mask == nullptr || mask->pixels.size() < 4) continue;

        // Poke the far rim of the mask, aiming at its centre.
        const Vec2 c = mask_centroid(mask->pixels, w);
        const std::vector<int> boundary = mask_boundary(mask->pixels, w, h);
        int far_idx = boundary.front();
        double far_d = -1.0;
        for (int idx : boundary) {
            const Vec2 p{static_cast<double>(idx % w), static_cast<double>(idx / w)};
            const double d = (p - c).norm2();
            if (d > far_d) { far_d = d; far_idx = idx; }
        }
        NudgeCommand cmd;
        cmd.point = {static_cast<double>(far_idx % w), static_cast<double>(far_idx / w)};
        cmd.direction = (c - cmd.point).normalized();
        if (cmd.direction.norm2() == 0.0) cmd.direction = {1.0, 0.0};
        cmd.magnitude = params.nudge_magnitude;
        cmd.twist = twist_sampler ? twist_sampler() : 0.0;

        const auto contact = resolve_contact(res.scene, cmd, params.contact_travel);
        if (!contact) continue;  // poke finds nothing; mask is stale air

        const SceneState after = apply_nudge(res.scene, *contact);
        FlowField flow = ground_truth_flow(res.scene, after);
        NoiseSpec noise = params.noise;
        noise.rng_seed = noise_seed ? noise_seed() : noise.rng_seed;
        flow = inject_noise(flow, noise);
        ++res.nudges_used;

        // Recluster the flow under the mask (as it sits before this motion);
        // no magnitude floor, so a static remainder forms its own cluster.
        const std::vector<FlowPoint> points =
            flow_to_points_in_region(flow, mask->pixels, 0.0);
        const ClusterAssignment assign = dbscan(points, params.cluster);

        const SegmentationHypothesis warped = warp_masks(res.hyp, flow);

        RawMasks raw = masks_from_assignment(assign, points, w, h, 1);
        // Clusters below object size are stale warp residue; the real split
        // signal is a second object-sized body under the mask.
        raw.masks.erase(std::remove_if(raw.masks.begin(), raw.masks.end(),
                                       [&](const auto& m) {
                                           return static_cast<double>(m.second.size()) <
                                                  params.min_split_area;
                                       }),
                        raw.masks.end());

        if (raw.masks.size() >= 2) {
            // Offset raw ids above every existing id before refining so the
            // spawned masks cannot collide with the rest of the hypothesis.
            const int base = std::max(res.hyp.max_id(), warped.max_id());
            for (auto& [id, pixels] : raw.masks) id += base;
            SegmentationHypothesis fresh = hypothesis_from_raw(raw, warped.time_index);
            SegmentationHypothesis fresh_w = warp_masks(fresh, flow);
            fresh_w.time_index = warped.time_index;

            SegmentationHypothesis sub;
            sub.width = w;
            sub.height = h;
            sub.time_index = warped.time_index;
            if (const Mask* wm = warped.find(mask_id)) sub.masks.push_back(*wm);

            const SegmentationHypothesis replaced = refine(sub, fresh_w, params.tau_h);
            if (replaced.masks.size() >= 2) {
                res.split_found = true;
                res.split_mask_ids.push_back(mask_id);
            } else {
                res.cleared_mask_ids.push_back(mask_id);
            }
            SegmentationHypothesis next = warped;
            next.masks.erase(std::remove_if(next.masks.begin(), next.masks.end(),
                                            [&](const Mask& m) { return m.id == mask_id; }),
                             next.masks.end());
            for (const Mask& m : replaced.masks) next.masks.push_back(m);
            res.hyp = std::move(next);
        } else {
            res.hyp = warped;
            res.cleared_mask_ids.push_back(mask_id);
        }
        res.scene = after;
        res.last_flow = std::move(flow);
        if (observer) observer(res.scene, res.hyp);
    }
    return res;
}

} // namespace nudgesim
