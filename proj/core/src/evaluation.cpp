#include "trafficpm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::evaluation {

using detection::Label;
using nlohmann::json;

LabelSet parse_labels(std::string_view text, const std::string& source_name) {
    LabelSet set;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        set.warnings.push_back(source_name + ": label file is empty");
        return set;
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source_name + ": " + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array())
        throw ValidationError(source_name + ": expected {\"images\":[...]}");
    std::size_t i = 0;
    for (const auto& img : doc["images"]) {
        const std::string where = source_name + ": images[" + std::to_string(i++) + "]";
        GroundTruthImage gt;
        try {
            gt.image_ref = img.at("image_ref").get<std::string>();
            if (img.contains("width")) gt.width = img["width"].get<int>();
            if (img.contains("height")) gt.height = img["height"].get<int>();
            std::size_t k = 0;
            for (const auto& box : img.at("boxes")) {
                const std::string bwhere = where + ".boxes[" + std::to_string(k++) + "]";
                auto label_text = box.at("label").get<std::string>();
                auto label = detection::parse_label(label_text);
                if (!label || !group_of(*label))
                    throw ValidationError(bwhere + ": label '" + label_text +
                                          "' is not one of car, truck, bus");
                const auto& b = box.at("bbox");
                if (!b.is_array() || b.size() != 4)
                    throw ValidationError(bwhere + ": bbox must be [x,y,w,h]");
                detection::BoundingBox bb{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                          b[3].get<double>()};
                bool in_bounds = bb.x >= 0 && bb.y >= 0 && bb.w > 0 && bb.h > 0;
                if (gt.width > 0) in_bounds = in_bounds && bb.right() <= gt.width;
                if (gt.height > 0) in_bounds = in_bounds && bb.bottom() <= gt.height;
                if (!in_bounds) throw ValidationError(bwhere + ": box lies outside the image");
                gt.boxes.push_back(GroundTruthBox{bb, *label});
            }
        } catch (const json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
        set.images.push_back(std::move(gt));
    }
    if (set.images.empty()) set.warnings.push_back(source_name + ": no labelled images");
    return set;
}

LabelSet load_labels(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("label file not found: " + path.string());
    return parse_labels(read_text_file(path.string()), path.string());
}

Matching match_detections(std::span<const GroundTruthBox> gt,
                          std::span<const detection::Detection> pred, double iou_threshold) {
    if (!(iou_threshold > 0 && iou_threshold <= 1))
        throw ArgumentError("match iou threshold must lie in (0,1]");
    std::vector<std::size_t> order(pred.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pred[a].confidence > pred[b].confidence;
    });

    Matching m;
    std::vector<bool> claimed(gt.size(), false);
    std::vector<bool> matched_pred(pred.size(), false);
    for (auto p : order) {
        std::size_t best = gt.size();
        double best_iou = 0;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (claimed[g]) continue;
            double v = detection::iou(gt[g].bbox, pred[p].bbox);
            if (v >= iou_threshold && (best == gt.size() || v > best_iou)) {
                best = g;
                best_iou = v;
            }
        }
        if (best != gt.size()) {
            claimed[best] = true;
            matched_pred[p] = true;
            m.pairs.push_back(MatchedPair{best, p, best_iou});
        }
    }
    for (std::size_t g = 0; g < gt.size(); ++g)
        if (!claimed[g]) m.unmatched_gt.push_back(g);
    for (std::size_t p = 0; p < pred.size(); ++p)
        if (!matched_pred[p]) m.unmatched_pred.push_back(p);
    return m;
}

std::optional<ClassGroup> group_of(Label label) {
    switch (label) {
        case Label::car: return ClassGroup::car;
        case Label::truck:
        case Label::bus: return ClassGroup::trucks_buses;
        default: return std::nullopt;
    }
}

const char* to_string(ClassGroup g) { return g == ClassGroup::car ? "car" : "trucks_buses"; }

EvalMetrics compute_metrics(std::span<const ImageEvaluation> images, double iou_threshold) {
    GroupMetrics acc[2];
    auto slot = [&](ClassGroup g) -> GroupMetrics& { return acc[g == ClassGroup::car ? 0 : 1]; };

    for (const auto& img : images) {
        for (const auto& box : img.gt) slot(*group_of(box.label)).gt_count++;
        for (const auto& pair : img.matching.pairs) {
            auto g = *group_of(img.gt.at(pair.gt).label);
            if (group_of(img.pred.at(pair.pred).label) == g)
                slot(g).correct++;
            else
                slot(g).misclassified++;
        }
        for (auto gi : img.matching.unmatched_gt) slot(*group_of(img.gt.at(gi).label)).undetected++;
        for (auto pi : img.matching.unmatched_pred)
            if (auto g = group_of(img.pred.at(pi).label)) slot(*g).falsely_detected++;
    }

    if (acc[0].gt_count + acc[1].gt_count == 0)
        throw ArgumentError("compute_metrics: no ground-truth boxes");
    EvalMetrics m;
    m.iou_threshold = iou_threshold;
    if (acc[0].gt_count) m.car = acc[0];
    if (acc[1].gt_count) m.trucks_buses = acc[1];
    return m;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string metrics_to_json(const EvalMetrics& m) {
    nlohmann::ordered_json out;
    out["iou_threshold"] = m.iou_threshold;
    nlohmann::ordered_json groups;
    for (auto g : {ClassGroup::car, ClassGroup::trucks_buses}) {
        const auto& gm = m.group(g);
        if (!gm) {
            groups[to_string(g)] = nullptr;
            continue;
        }
        groups[to_string(g)] = {
            {"gt_count", gm->gt_count},
            {"counts",
             {{"correctly_identified", gm->correct},
              {"undetected", gm->undetected},
              {"misclassified", gm->misclassified},
              {"falsely_detected", gm->falsely_detected}}},
            {"rates",
             {{"correctly_identified", round3(gm->correctly_identified_rate())},
              {"undetected", round3(gm->undetected_rate())},
              {"misclassified", round3(gm->misclassified_rate())},
              {"falsely_detected", round3(gm->falsely_detected_rate())}}}};
    }
    out["groups"] = std::move(groups);
    return out.dump(2) + "\n";
}

}  // namespace trafficpm::evaluation
