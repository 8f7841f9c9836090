#include "nudgesim/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace nudgesim {

double iou(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (a[i] > b[j]) ++j;
        else { ++inter; ++i; ++j; }
    }
    const size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<GtRegion> gt_regions(const LabelImage& labels, const SceneState& scene,
                                 bool merge_glued) {
    // region key: glue group (offset) when merging, else the label itself.
    std::map<int, GtRegion> regions;
    std::map<int, int> label_to_key;
    for (const RigidObject& obj : scene.objects) {
        int key = obj.id;
        if (merge_glued && obj.glue_group)
            key = -1 - *obj.glue_group;  // negative keys: merged groups
        label_to_key[obj.id] = key;
        GtRegion& r = regions[key];
        r.labels.push_back(obj.id);
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        const uint16_t label = labels.data[i];
        if (label == 0) continue;
        const auto it = label_to_key.find(label);
        if (it == label_to_key.end()) continue;
        regions[it->second].pixels.push_back(static_cast<int>(i));
    }
    std::vector<GtRegion> out;
    int next_id = 1;
    for (auto& [key, region] : regions) {
        region.region_id = next_id++;
        std::sort(region.labels.begin(), region.labels.end());
        out.push_back(std::move(region));
    }
    return out;
}

namespace {

struct Pair {
    double score;
    int gi;
    int mi;
};

std::vector<Pair> all_pairs_desc(const std::vector<const std::vector<int>*>& gt,
                                 const std::vector<const std::vector<int>*>& pred) {
    std::vector<Pair> pairs;
    for (size_t g = 0; g < gt.size(); ++g)
        for (size_t m = 0; m < pred.size(); ++m) {
            const double s = iou(*gt[g], *pred[m]);
            if (s > 0.0) pairs.push_back({s, static_cast<int>(g), static_cast<int>(m)});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.gi != b.gi) return a.gi < b.gi;
        return a.mi < b.mi;
    });
    return pairs;
}

} // namespace

std::vector<ObjectScore> match_and_score(const SegmentationHypothesis& hyp,
                                         const std::vector<GtRegion>& gt, double tau) {
    if (tau <= 0.0 || tau >= 1.0) throw std::runtime_error("tau must be in (0, 1)");

    std::vector<const std::vector<int>*> gsets, msets;
    for (const GtRegion& r : gt) gsets.push_back(&r.pixels);
    for (const Mask& m : hyp.masks) msets.push_back(&m.pixels);

    std::vector<ObjectScore> out(gt.size());
    for (size_t g = 0; g < gt.size(); ++g) out[g].gt_id = gt[g].region_id;

    std::vector<uint8_t> gused(gt.size(), 0), mused(hyp.masks.size(), 0);
    for (const Pair& p : all_pairs_desc(gsets, msets)) {
        if (gused[p.gi] || mused[p.mi]) continue;
        gused[p.gi] = 1;
        mused[p.mi] = 1;
        out[p.gi].matched_mask_id = hyp.masks[p.mi].id;
        out[p.gi].best_iou = p.score;
        out[p.gi].success = p.score >= tau;
    }
    return out;
}

double mean_hypothesis_iou(const SegmentationHypothesis& a, const SegmentationHypothesis& b) {
    if (a.masks.empty() && b.masks.empty()) return 1.0;
    std::vector<const std::vector<int>*> asets, bsets;
    for (const Mask& m : a.masks) asets.push_back(&m.pixels);
    for (const Mask& m : b.masks) bsets.push_back(&m.pixels);

    std::vector<uint8_t> aused(asets.size(), 0), bused(bsets.size(), 0);
    double total = 0.0;
    for (const Pair& p : all_pairs_desc(asets, bsets)) {
        if (aused[p.gi] || bused[p.mi]) continue;
        aused[p.gi] = 1;
        bused[p.mi] = 1;
        total += p.score;
    }
    // Unmatched masks on either side count as zeros.
    return total / static_cast<double>(std::max(asets.size(), bsets.size()));
}

NudgeMetrics score_hypothesis(const SegmentationHypothesis& hyp,
                              const std::vector<GtRegion>& gt, int nudge_index) {
    NudgeMetrics m;
    m.nudge_index = nudge_index;
    if (gt.empty()) return m;

    const std::vector<ObjectScore> scores = match_and_score(hyp, gt, 0.5);
    int s50 = 0, s75 = 0;
    double iou_sum = 0.0, iou_s_sum = 0.0;
    for (const ObjectScore& s : scores) {
        iou_sum += s.best_iou;
        if (s.best_iou >= 0.5) {
            ++s50;
            iou_s_sum += s.best_iou;
        }
        if (s.best_iou >= 0.75) ++s75;
    }
    const double n = static_cast<double>(gt.size());
    m.mean_iou = iou_sum / n;
    m.dr50 = s50 / n;
    m.dr75 = s75 / n;
    m.iou_s = s50 > 0 ? iou_s_sum / s50 : 0.0;
    return m;
}

NudgeMetrics final_metrics(const std::vector<NudgeMetrics>& per_nudge) {
    NudgeMetrics f;
    for (const NudgeMetrics& m : per_nudge) {
        f.mean_iou = std::max(f.mean_iou, m.mean_iou);
        f.dr50 = std::max(f.dr50, m.dr50);
        f.dr75 = std::max(f.dr75, m.dr75);
        f.iou_s = std::max(f.iou_s, m.iou_s);
        f.nudge_index = std::max(f.nudge_index, m.nudge_index);
    }
    return f;
}

SummaryTable aggregate(const std::vector<TrialRecord>& trials) {
    if (trials.empty()) throw std::runtime_error("aggregate: no trials");
    SummaryTable t;
    t.trials = static_cast<int>(trials.size());
    int with_success = 0;
    for (const TrialRecord& r : trials) {
        t.mean_iou += r.final.mean_iou;
        t.dr50 += r.final.dr50;
        t.dr75 += r.final.dr75;
        t.n_avg += r.nudges_used;
        if (r.failed) ++t.failed_trials;
        if (r.final.iou_s > 0.0) {
            t.iou_s += r.final.iou_s;
            ++with_success;
        }
    }
    const double n = static_cast<double>(t.trials);
    t.mean_iou /= n;
    t.dr50 /= n;
    t.dr75 /= n;
    t.n_avg /= n;
    t.iou_s = with_success > 0 ? t.iou_s / with_success : 0.0;
    return t;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "seed,n_objects,nudges,iou,dr50,dr75,iou_s\n";
    for (const TrialRecord& r : trials) {
        out << r.seed << ',' << r.n_objects << ',' << r.nudges_used << ',' << fmt(r.final.mean_iou)
            << ',' << fmt(r.final.dr50) << ',' << fmt(r.final.dr75) << ',' << fmt(r.final.iou_s)
            << '\n';
    }
}

void write_summary_csv(const std::string& path, const SummaryTable& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "mean_iou,dr50,dr75,iou_s,n_avg,trials,failed_trials\n";
    out << fmt(s.mean_iou) << ',' << fmt(s.dr50) << ',' << fmt(s.dr75) << ',' << fmt(s.iou_s)
        << ',' << fmt(s.n_avg) << ',' << s.trials << ',' << s.failed_trials << '\n';
}

void write_sweep_csv(const std::string& path, const SweepTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "eps_m,eps_a,mean_iou,dr50,dr75\n";
    for (const SweepCell& c : table) {
        out << fmt(c.eps_m) << ',' << fmt(c.eps_a) << ',' << fmt(c.summary.mean_iou) << ','
            << fmt(c.summary.dr50) << ',' << fmt(c.summary.dr75) << '\n';
    }
}

} // namespace nudgesim
