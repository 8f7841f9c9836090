#include <doctest.h>

#include <algorithm>

#include "nudgesim/eval.hpp"
#include "nudgesim/rng.hpp"
#include "oracles.hpp"

using namespace nudgesim;

namespace {

std::vector<int> rect_pixels(int w, int x0, int y0, int rw, int rh) {
    std::vector<int> out;
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) out.push_back(y * w + x);
    return out;
}

std::vector<int> random_mask(Rng& rng, int w, int h) {
    return rect_pixels(w, rng.uniform_int(0, w - 12), rng.uniform_int(0, h - 12),
                       rng.uniform_int(2, 11), rng.uniform_int(2, 11));
}

} // namespace

TEST_CASE("iou basics") {
    const auto a = rect_pixels(64, 10, 10, 10, 10);
    CHECK(iou(a, a) == doctest::Approx(1.0));
    const auto b = rect_pixels(64, 40, 10, 10, 10);
    CHECK(iou(a, b) == doctest::Approx(0.0));
    const auto shifted = rect_pixels(64, 15, 10, 10, 10);
    CHECK(iou(a, shifted) == doctest::Approx(1.0 / 3.0));  // 50 / 150
    CHECK(iou({}, {}) == doctest::Approx(1.0));
    CHECK(iou(a, {}) == doctest::Approx(0.0));
}

TEST_CASE("iou symmetry and bounds on random pairs") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_mask(rng, 64, 64);
        const auto b = random_mask(rng, 64, 64);
        const double ab = iou(a, b);
        CHECK(ab == doctest::Approx(iou(b, a)));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

namespace {

std::vector<GtRegion> regions_from_masks(const std::vector<std::vector<int>>& masks) {
    std::vector<GtRegion> out;
    for (size_t i = 0; i < masks.size(); ++i)
        out.push_back({static_cast<int>(i) + 1, {static_cast<int>(i) + 1}, masks[i]});
    return out;
}

SegmentationHypothesis hyp_from_masks(int w, int h, const std::vector<std::vector<int>>& masks) {
    SegmentationHypothesis hyp;
    hyp.width = w;
    hyp.height = h;
    for (size_t i = 0; i < masks.size(); ++i)
        hyp.masks.push_back({static_cast<int>(i) + 1, masks[i]});
    return hyp;
}

} // namespace

TEST_CASE("match_and_score perfect hypothesis") {
    const std::vector<std::vector<int>> masks{rect_pixels(64, 2, 2, 8, 8),
                                              rect_pixels(64, 30, 20, 10, 6)};
    const auto scores = match_and_score(hyp_from_masks(64, 64, masks),
                                        regions_from_masks(masks), 0.75);
    REQUIRE(scores.size() == 2);
    for (const auto& s : scores) {
        CHECK(s.best_iou == doctest::Approx(1.0));
        CHECK(s.success);
    }
}

TEST_CASE("match_and_score single all-pile mask over five equal objects") {
    // Five disjoint equal squares; the prediction is their union. One-to-one
    // matching gives exactly one object IoU 1/5, the rest score zero, and
    // nothing succeeds at tau = 0.5.
    std::vector<std::vector<int>> gt_masks;
    std::vector<int> unionm;
    for (int i = 0; i < 5; ++i) {
        auto m = rect_pixels(128, 4 + 20 * i, 8, 10, 10);
        unionm.insert(unionm.end(), m.begin(), m.end());
        gt_masks.push_back(std::move(m));
    }
    std::sort(unionm.begin(), unionm.end());
    const auto scores = match_and_score(hyp_from_masks(128, 64, {unionm}),
                                        regions_from_masks(gt_masks), 0.5);
    REQUIRE(scores.size() == 5);
    int matched = 0;
    for (const auto& s : scores) {
        CHECK_FALSE(s.success);
        if (s.matched_mask_id != 0) {
            ++matched;
            CHECK(s.best_iou == doctest::Approx(0.2));
        } else {
            CHECK(s.best_iou == 0.0);
        }
    }
    CHECK(matched == 1);
}

TEST_CASE("match_and_score one-to-one leaves extra objects unmatched") {
    const std::vector<std::vector<int>> gt{rect_pixels(64, 2, 2, 8, 8),
                                           rect_pixels(64, 20, 2, 8, 8),
                                           rect_pixels(64, 40, 2, 8, 8)};
    const std::vector<std::vector<int>> pred{gt[0], gt[1]};
    const auto scores = match_and_score(hyp_from_masks(64, 64, pred),
                                        regions_from_masks(gt), 0.5);
    int matched = 0;
    for (const auto& s : scores) matched += s.matched_mask_id != 0 ? 1 : 0;
    CHECK(matched == 2);
    CHECK(scores[2].best_iou == 0.0);
}

TEST_CASE("DR nesting: success at 0.75 implies success at 0.5") {
    Rng rng(55);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<std::vector<int>> gt, pred;
        for (int i = 0; i < rng.uniform_int(1, 5); ++i) gt.push_back(random_mask(rng, 64, 64));
        for (int i = 0; i < rng.uniform_int(1, 5); ++i) pred.push_back(random_mask(rng, 64, 64));
        const auto hyp = hyp_from_masks(64, 64, pred);
        const auto m = score_hypothesis(hyp, regions_from_masks(gt), 0);
        CHECK(m.dr50 >= m.dr75);
        CHECK(m.mean_iou >= 0.0);
        CHECK(m.mean_iou <= 1.0);
    }
}

TEST_CASE("greedy matcher stays close to the optimal assignment") {
    Rng rng(77);
    for (int iter = 0; iter < 60; ++iter) {
        const int ng = rng.uniform_int(1, 6);
        std::vector<std::vector<int>> gt, pred;
        for (int i = 0; i < ng; ++i) gt.push_back(random_mask(rng, 48, 48));
        // Realistic predictions: jittered copies plus occasional noise masks.
        for (int i = 0; i < ng; ++i) {
            if (rng.uniform01() < 0.2) continue;
            const int dx = rng.uniform_int(-3, 3), dy = rng.uniform_int(-3, 3);
            std::vector<int> m;
            for (int idx : gt[i]) {
                const int x = idx % 48 + dx, y = idx / 48 + dy;
                if (x >= 0 && x < 48 && y >= 0 && y < 48) m.push_back(y * 48 + x);
            }
            std::sort(m.begin(), m.end());
            if (!m.empty()) pred.push_back(std::move(m));
        }
        if (rng.uniform01() < 0.4) pred.push_back(random_mask(rng, 48, 48));
        if (pred.empty()) continue;

        const auto scores = match_and_score(hyp_from_masks(48, 48, pred),
                                            regions_from_masks(gt), 0.5);
        double greedy_mean = 0.0;
        for (const auto& s : scores) greedy_mean += s.best_iou;
        greedy_mean /= static_cast<double>(scores.size());
        const double optimal = oracle::optimal_assignment_mean_iou(gt, pred);
        CHECK(greedy_mean <= optimal + 1e-12);
        CHECK(optimal - greedy_mean <= 0.05);
    }
}

TEST_CASE("gt_regions merges glued groups") {
    SceneState scene;
    scene.width = 64;
    scene.height = 32;
    scene.table_bounds = {0, 0, 64, 32};
    RigidObject a;
    a.id = 1;
    a.vertices = {{-4, -4}, {4, -4}, {4, 4}, {-4, 4}};
    a.pose = {10, 16, 0};
    a.glue_group = 3;
    RigidObject b = a;
    b.id = 2;
    b.pose = {20, 16, 0};
    RigidObject c = a;
    c.id = 3;
    c.pose = {40, 16, 0};
    c.glue_group.reset();
    scene.objects = {a, b, c};

    const LabelImage labels = render_labels(scene);
    const auto merged = gt_regions(labels, scene, true);
    REQUIRE(merged.size() == 2);
    const auto unmerged = gt_regions(labels, scene, false);
    CHECK(unmerged.size() == 3);

    // The merged region contains both glued labels.
    bool found_pair = false;
    for (const auto& r : merged)
        if (r.labels == std::vector<int>{1, 2}) found_pair = true;
    CHECK(found_pair);
}

TEST_CASE("aggregate means and permutation invariance") {
    TrialRecord a;
    a.final = {3, 0.8, 0.9, 0.7, 0.85};
    a.nudges_used = 4;
    TrialRecord b;
    b.final = {5, 0.6, 0.7, 0.5, 0.65};
    b.nudges_used = 8;
    const SummaryTable s1 = aggregate({a, b});
    CHECK(s1.mean_iou == doctest::Approx(0.7));
    CHECK(s1.dr50 == doctest::Approx(0.8));
    CHECK(s1.n_avg == doctest::Approx(6.0));
    const SummaryTable s2 = aggregate({b, a});
    CHECK(s2.mean_iou == doctest::Approx(s1.mean_iou));
    CHECK(s2.dr75 == doctest::Approx(s1.dr75));

    const SummaryTable single = aggregate({a});
    CHECK(single.mean_iou == doctest::Approx(0.8));
    CHECK(single.n_avg == doctest::Approx(4.0));
}

TEST_CASE("final_metrics takes per-metric maxima") {
    std::vector<NudgeMetrics> rows{{0, 0.2, 0.3, 0.1, 0.0},
                                   {1, 0.8, 0.5, 0.4, 0.9},
                                   {2, 0.6, 0.9, 0.2, 0.7}};
    const NudgeMetrics f = final_metrics(rows);
    CHECK(f.mean_iou == doctest::Approx(0.8));
    CHECK(f.dr50 == doctest::Approx(0.9));
    CHECK(f.dr75 == doctest::Approx(0.4));
    CHECK(f.iou_s == doctest::Approx(0.9));

    const NudgeMetrics empty = final_metrics({});
    CHECK(empty.mean_iou == 0.0);
}

TEST_CASE("mean_hypothesis_iou counts unmatched masks as zeros") {
    const std::vector<std::vector<int>> masks{rect_pixels(64, 2, 2, 8, 8),
                                              rect_pixels(64, 30, 20, 10, 6)};
    const auto a = hyp_from_masks(64, 64, masks);
    CHECK(mean_hypothesis_iou(a, a) == doctest::Approx(1.0));

    auto b = a;
    b.masks.push_back({9, rect_pixels(64, 50, 50, 5, 5)});
    CHECK(mean_hypothesis_iou(a, b) == doctest::Approx(2.0 / 3.0));

    SegmentationHypothesis empty;
    empty.width = 64;
    empty.height = 64;
    CHECK(mean_hypothesis_iou(empty, empty) == doctest::Approx(1.0));
    CHECK(mean_hypothesis_iou(a, empty) == doctest::Approx(0.0));
}
