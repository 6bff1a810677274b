#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafficpm/detection.hpp"

namespace trafficpm::evaluation {

struct GroundTruthBox {
    detection::BoundingBox bbox;
    detection::Label label = detection::Label::car;
};

struct GroundTruthImage {
    std::string image_ref;
    std::vector<GroundTruthBox> boxes;
    /// Optional frame size; when given, boxes are bounds-checked against it.
    int width = 0;
    int height = 0;
};

struct LabelSet {
    std::vector<GroundTruthImage> images;
    std::vector<std::string> warnings;
};

/// Label JSON: {"images":[{"image_ref","width"?,"height"?,"boxes":[{"label","bbox":[x,y,w,h]}]}]}.
/// Labels must be car, truck or bus. An empty file yields no images and a
/// warning.
LabelSet load_labels(const std::filesystem::path& path);
LabelSet parse_labels(std::string_view text, const std::string& source_name = "<memory>");

struct MatchedPair {
    std::size_t gt = 0;
    std::size_t pred = 0;
    double iou = 0;
};

struct Matching {
    std::vector<MatchedPair> pairs;
    std::vector<std::size_t> unmatched_gt;
    std::vector<std::size_t> unmatched_pred;
};

inline constexpr double kDefaultMatchIou = 0.5;

/// Greedy one-to-one: predictions by descending confidence (stable), each
/// claiming the free ground-truth box of highest IoU at or above the
/// threshold. Indices refer to the input spans.
Matching match_detections(std::span<const GroundTruthBox> gt,
                          std::span<const detection::Detection> pred,
                          double iou_threshold = kDefaultMatchIou);

/// Cars alone, and trucks pooled with buses.
enum class ClassGroup { car, trucks_buses };

std::optional<ClassGroup> group_of(detection::Label label);
const char* to_string(ClassGroup g);

struct GroupMetrics {
    std::size_t gt_count = 0;
    std::size_t correct = 0;
    std::size_t undetected = 0;
    std::size_t misclassified = 0;
    std::size_t falsely_detected = 0;

    double correctly_identified_rate() const { return ratio(correct); }
    double undetected_rate() const { return ratio(undetected); }
    double misclassified_rate() const { return ratio(misclassified); }
    double falsely_detected_rate() const { return ratio(falsely_detected); }

private:
    double ratio(std::size_t k) const {
        return static_cast<double>(k) / static_cast<double>(gt_count);
    }
};

struct EvalMetrics {
    std::optional<GroupMetrics> car;
    std::optional<GroupMetrics> trucks_buses;
    double iou_threshold = kDefaultMatchIou;

    const std::optional<GroupMetrics>& group(ClassGroup g) const {
        return g == ClassGroup::car ? car : trucks_buses;
    }
};

/// Inputs for one image after matching.
struct ImageEvaluation {
    std::vector<GroundTruthBox> gt;
    std::vector<detection::Detection> pred;
    Matching matching;
};

/// A matched prediction is correct when its label falls in the same group
/// as the ground truth. False detections are unmatched predictions whose
/// label belongs to the group; motorcycle and other predictions never count
/// as false. A group without ground truth is absent. Throws ArgumentError
/// when there is no ground truth at all.
EvalMetrics compute_metrics(std::span<const ImageEvaluation> images, double iou_threshold);

/// Rounds to three decimals for reporting.
double round3(double v);

std::string metrics_to_json(const EvalMetrics& m);

}  // namespace trafficpm::evaluation
