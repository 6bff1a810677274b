#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "json.hpp"
#include "test_support.hpp"
#include "trafficpm/error.hpp"
#include "trafficpm/evaluation.hpp"

using namespace trafficpm;
using namespace trafficpm::evaluation;
using detection::BoundingBox;
using detection::Detection;
using detection::Label;

namespace {

GroundTruthBox gt(double x, double y, double w, double h, Label l = Label::car) {
    return GroundTruthBox{{x, y, w, h}, l};
}

Detection pred(double x, double y, double w, double h, double conf, Label l = Label::car) {
    return Detection{{x, y, w, h}, l, conf};
}

ImageEvaluation evaluate(std::vector<GroundTruthBox> g, std::vector<Detection> p, double thr = 0.5) {
    ImageEvaluation ev{std::move(g), std::move(p), {}};
    ev.matching = match_detections(ev.gt, ev.pred, thr);
    return ev;
}

/// Lexicographically best assignment: predictions visited by descending
/// confidence, each scored by the IoU it obtains (0 when unmatched).
std::vector<std::pair<std::size_t, std::size_t>> exhaustive_match(const std::vector<GroundTruthBox>& g,
                                                                  const std::vector<Detection>& p,
                                                                  double thr) {
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return p[a].confidence > p[b].confidence; });
    std::vector<double> best_score;
    std::vector<std::pair<std::size_t, std::size_t>> best, current;
    std::vector<double> score;
    std::vector<bool> used(g.size(), false);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == order.size()) {
            if (best_score.empty() || score > best_score) {
                best_score = score;
                best = current;
            }
            return;
        }
        auto pi = order[k];
        score.push_back(0);
        rec(k + 1);
        score.pop_back();
        for (std::size_t gi = 0; gi < g.size(); ++gi) {
            if (used[gi]) continue;
            double v = detection::iou(g[gi].bbox, p[pi].bbox);
            if (v < thr) continue;
            used[gi] = true;
            score.push_back(v);
            current.emplace_back(gi, pi);
            rec(k + 1);
            current.pop_back();
            score.pop_back();
            used[gi] = false;
        }
    };
    rec(0);
    std::sort(best.begin(), best.end());
    return best;
}

/// Ground truth on well-separated cells with jittered candidate predictions.
struct RandomScene {
    std::vector<GroundTruthBox> gt;
    std::vector<Detection> pred;
};

RandomScene random_scene(std::mt19937_64& rng, bool same_group_candidates) {
    std::uniform_real_distribution<double> jitter(-8, 8), conf(0.05, 1.0);
    std::uniform_int_distribution<int> lab(0, 4), cands(0, 3);
    RandomScene s;
    for (int c = 0; c < 12; ++c) {
        double x = (c % 4) * 100.0, y = (c / 4) * 100.0;
        int kind = static_cast<int>(rng() % 3);
        if (kind == 0) continue;  // empty cell
        if (kind == 1) {
            // stray prediction, no ground truth
            s.pred.push_back(pred(x + 10, y + 10, 40, 30, conf(rng), detection::kAllLabels[lab(rng)]));
            continue;
        }
        Label gl = rng() % 2 ? Label::car : (rng() % 2 ? Label::truck : Label::bus);
        s.gt.push_back(gt(x + 10, y + 10, 40, 30, gl));
        for (int k = cands(rng); k > 0; --k) {
            Label pl = detection::kAllLabels[lab(rng)];
            if (same_group_candidates)
                pl = gl == Label::car ? Label::car : (rng() % 2 ? Label::truck : Label::bus);
            s.pred.push_back(pred(x + 10 + jitter(rng), y + 10 + jitter(rng), 40 + jitter(rng),
                                  30 + jitter(rng), conf(rng), pl));
        }
    }
    return s;
}

std::size_t sum_field(const EvalMetrics& m, std::size_t GroupMetrics::*f) {
    std::size_t s = 0;
    if (m.car) s += (*m.car).*f;
    if (m.trucks_buses) s += (*m.trucks_buses).*f;
    return s;
}

}  // namespace

TEST(Labels, FifteenImageFixture) {
    auto set = load_labels(std::filesystem::path(TRAFFICPM_TEST_DATA_DIR) / "labels_15.json");
    ASSERT_EQ(set.images.size(), 15u);
    EXPECT_TRUE(set.warnings.empty());
    std::size_t cars = 0, all = 0;
    for (const auto& img : set.images)
        for (const auto& b : img.boxes) {
            ++all;
            cars += b.label == Label::car;
        }
    EXPECT_NEAR(static_cast<double>(cars) / all, 0.75, 1e-9);
}

TEST(Labels, Rejections) {
    EXPECT_THROW(parse_labels(R"({"images":[{"image_ref":"a","boxes":[{"label":"motorcycle","bbox":[0,0,5,5]}]}]})"),
                 ValidationError);
    EXPECT_THROW(parse_labels(R"({"images":[{"image_ref":"a","boxes":[{"label":"van","bbox":[0,0,5,5]}]}]})"),
                 ValidationError);
    EXPECT_THROW(parse_labels(R"({"images":[{"image_ref":"a","width":10,"height":10,)"
                              R"("boxes":[{"label":"car","bbox":[8,0,5,5]}]}]})"),
                 ValidationError);
    EXPECT_THROW(parse_labels(R"({"images":[{"image_ref":"a","boxes":[{"label":"car","bbox":[-1,0,5,5]}]}]})"),
                 ValidationError);
    EXPECT_THROW(parse_labels("{\"images\": [ oops"), ParseError);
    tsup::TempDir dir;
    EXPECT_THROW(load_labels(dir / "missing.json"), IoError);
}

TEST(Labels, EmptyFileWarns) {
    tsup::TempDir dir;
    tsup::write_text(dir / "empty.json", "");
    auto set = load_labels(dir / "empty.json");
    EXPECT_TRUE(set.images.empty());
    EXPECT_EQ(set.warnings.size(), 1u);
    EXPECT_EQ(parse_labels(R"({"images":[]})").warnings.size(), 1u);
}

TEST(Matching, Examples) {
    // 1 GT, 1 pred with iou 0.6
    std::vector<GroundTruthBox> g{gt(0, 0, 10, 10)};
    std::vector<Detection> p{pred(0, 0, 10, 6, 0.9)};
    ASSERT_NEAR(detection::iou(g[0].bbox, p[0].bbox), 0.6, 1e-12);
    auto m = match_detections(g, p, 0.5);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_TRUE(m.unmatched_gt.empty());

    std::vector<Detection> weak{pred(0, 0, 10, 3, 0.9)};
    m = match_detections(g, weak, 0.5);
    EXPECT_TRUE(m.pairs.empty());
    EXPECT_EQ(m.unmatched_gt, (std::vector<std::size_t>{0}));
    EXPECT_EQ(m.unmatched_pred, (std::vector<std::size_t>{0}));

    std::vector<Detection> two{pred(0, 0, 10, 9, 0.7), pred(0, 0, 10, 8, 0.9)};
    m = match_detections(g, two, 0.5);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].pred, 1u);
    EXPECT_EQ(m.unmatched_pred, (std::vector<std::size_t>{0}));
    EXPECT_THROW(match_detections(g, two, 0.0), ArgumentError);
}

TEST(MatchingProperty, GreedyEqualsExhaustiveSearch) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> pos(0, 20), size(5, 20), conf(0, 1);
    for (int trial = 0; trial < 3000; ++trial) {
        std::size_t total = 2 + rng() % 5;
        std::size_t ng = 1 + rng() % (total - 1);
        std::vector<GroundTruthBox> g;
        std::vector<Detection> p;
        for (std::size_t i = 0; i < ng; ++i) g.push_back(gt(pos(rng), pos(rng), size(rng), size(rng)));
        for (std::size_t i = ng; i < total; ++i)
            p.push_back(pred(pos(rng), pos(rng), size(rng), size(rng), conf(rng)));
        double thr = std::uniform_real_distribution<double>(0.1, 0.6)(rng);
        auto m = match_detections(g, p, thr);
        std::vector<std::pair<std::size_t, std::size_t>> got;
        for (const auto& pr : m.pairs) got.emplace_back(pr.gt, pr.pred);
        std::sort(got.begin(), got.end());
        ASSERT_EQ(got, exhaustive_match(g, p, thr)) << "trial " << trial;
    }
}

TEST(MatchingProperty, OneToOneAndPartitioned) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 1000; ++trial) {
        auto s = random_scene(rng, false);
        auto m = match_detections(s.gt, s.pred, 0.5);
        std::vector<int> gseen(s.gt.size()), pseen(s.pred.size());
        for (const auto& pr : m.pairs) {
            ASSERT_EQ(gseen[pr.gt]++, 0);
            ASSERT_EQ(pseen[pr.pred]++, 0);
            ASSERT_GE(pr.iou, 0.5);
        }
        for (auto g : m.unmatched_gt) ASSERT_EQ(gseen[g]++, 0);
        for (auto p : m.unmatched_pred) ASSERT_EQ(pseen[p]++, 0);
        for (int v : gseen) ASSERT_EQ(v, 1);
        for (int v : pseen) ASSERT_EQ(v, 1);
    }
}

TEST(Metrics, UnfilteredFixtureCarRow) {
    auto imgs = tsup::build_group_fixture(tsup::kUnfilteredCar, {});
    auto m = compute_metrics(imgs, 0.5);
    ASSERT_TRUE(m.car);
    EXPECT_FALSE(m.trucks_buses);
    EXPECT_EQ(m.car->gt_count, 1000u);
    EXPECT_EQ(round3(m.car->correctly_identified_rate()), 0.941);
    EXPECT_EQ(round3(m.car->undetected_rate()), 0.039);
    EXPECT_EQ(round3(m.car->misclassified_rate()), 0.020);
    EXPECT_EQ(round3(m.car->falsely_detected_rate()), 0.105);
}

TEST(Metrics, PerfectAndEmptyPredictions) {
    std::vector<GroundTruthBox> g{gt(0, 0, 10, 10), gt(50, 0, 10, 10, Label::bus)};
    std::vector<Detection> perfect{pred(0, 0, 10, 10, 0.9), pred(50, 0, 10, 10, 0.8, Label::bus)};
    std::vector<ImageEvaluation> imgs{evaluate(g, perfect)};
    auto m = compute_metrics(imgs, 0.5);
    EXPECT_EQ(m.car->correctly_identified_rate(), 1.0);
    EXPECT_EQ(m.car->undetected_rate(), 0.0);
    EXPECT_EQ(m.trucks_buses->misclassified_rate(), 0.0);
    EXPECT_EQ(m.trucks_buses->falsely_detected_rate(), 0.0);

    imgs = {evaluate(g, {})};
    m = compute_metrics(imgs, 0.5);
    EXPECT_EQ(m.car->correctly_identified_rate(), 0.0);
    EXPECT_EQ(m.car->undetected_rate(), 1.0);
    EXPECT_EQ(m.car->falsely_detected_rate(), 0.0);

    std::vector<ImageEvaluation> none{evaluate({}, perfect)};
    EXPECT_THROW(compute_metrics(none, 0.5), ArgumentError);
}

TEST(Metrics, GroupRules) {
    // Truck predicted on a bus: same group, correct. Motorcycle unmatched: never false.
    std::vector<GroundTruthBox> g{gt(0, 0, 10, 10, Label::bus), gt(50, 0, 10, 10)};
    std::vector<Detection> p{pred(0, 0, 10, 10, 0.9, Label::truck), pred(50, 0, 10, 10, 0.9, Label::motorcycle),
                             pred(100, 0, 10, 10, 0.9, Label::motorcycle), pred(150, 0, 10, 10, 0.9, Label::bus)};
    std::vector<ImageEvaluation> imgs{evaluate(g, p)};
    auto m = compute_metrics(imgs, 0.5);
    EXPECT_EQ(m.trucks_buses->correct, 1u);
    EXPECT_EQ(m.car->misclassified, 1u);
    EXPECT_EQ(m.car->falsely_detected, 0u);
    EXPECT_EQ(m.trucks_buses->falsely_detected, 1u);
}

TEST(Metrics, JsonShape) {
    auto imgs = tsup::build_group_fixture(tsup::kFilteredCar, {});
    auto j = nlohmann::json::parse(metrics_to_json(compute_metrics(imgs, 0.5)));
    EXPECT_TRUE(j["groups"]["trucks_buses"].is_null());
    EXPECT_EQ(j["groups"]["car"]["gt_count"], 1000);
    EXPECT_EQ(j["groups"]["car"]["counts"]["falsely_detected"], 52);
    EXPECT_EQ(j["groups"]["car"]["rates"]["correctly_identified"].get<double>(), 0.895);
    EXPECT_EQ(j["iou_threshold"], 0.5);
}

TEST(MetricsProperty, RatesDecomposeGroundTruth) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ImageEvaluation> imgs;
        for (int i = 0; i < 3; ++i) {
            auto s = random_scene(rng, false);
            imgs.push_back(evaluate(s.gt, s.pred));
        }
        std::size_t total_gt = 0;
        for (const auto& im : imgs) total_gt += im.gt.size();
        if (total_gt == 0) continue;
        auto m = compute_metrics(imgs, 0.5);
        for (const auto* g : {&m.car, &m.trucks_buses}) {
            if (!*g) continue;
            const auto& gm = **g;
            ASSERT_GT(gm.gt_count, 0u);
            ASSERT_EQ(gm.correct + gm.undetected + gm.misclassified, gm.gt_count);
        }
    }
}

TEST(MetricsProperty, RemovingPredictionsNeverRaisesFalseDetections) {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 1000; ++trial) {
        auto s = random_scene(rng, false);
        if (s.gt.empty()) continue;
        auto kept = s.pred;
        std::erase_if(kept, [&](const Detection&) { return rng() % 3 == 0; });
        std::vector<ImageEvaluation> before{evaluate(s.gt, s.pred)}, after{evaluate(s.gt, kept)};
        auto mb = compute_metrics(before, 0.5), ma = compute_metrics(after, 0.5);
        for (auto g : {ClassGroup::car, ClassGroup::trucks_buses}) {
            if (!mb.group(g)) continue;
            ASSERT_LE(ma.group(g)->falsely_detected, mb.group(g)->falsely_detected) << "trial " << trial;
        }
    }
}

TEST(MetricsProperty, RemovingSameGroupCandidatesNeverRaisesCorrect) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        auto s = random_scene(rng, true);
        if (s.gt.empty()) continue;
        auto kept = s.pred;
        std::erase_if(kept, [&](const Detection&) { return rng() % 3 == 0; });
        std::vector<ImageEvaluation> before{evaluate(s.gt, s.pred)}, after{evaluate(s.gt, kept)};
        auto mb = compute_metrics(before, 0.5), ma = compute_metrics(after, 0.5);
        ASSERT_LE(sum_field(ma, &GroupMetrics::correct), sum_field(mb, &GroupMetrics::correct))
            << "trial " << trial;
    }
}

TEST(MetricsProperty, GreedyCanGainCorrectWhenAWrongLabelIsRemoved) {
    // With mixed-label candidates on one box, dropping the confident wrong
    // label frees the box for the right one. Pins down why the property
    // above restricts candidates to the box's own group.
    std::vector<GroundTruthBox> g{gt(0, 0, 10, 10)};
    std::vector<Detection> p{pred(0, 0, 10, 8, 0.9, Label::truck), pred(0, 0, 10, 9, 0.8, Label::car)};
    std::vector<ImageEvaluation> before{evaluate(g, p)};
    std::vector<ImageEvaluation> after{evaluate(g, {p[1]})};
    EXPECT_EQ(compute_metrics(before, 0.5).car->correct, 0u);
    EXPECT_EQ(compute_metrics(after, 0.5).car->correct, 1u);
}
