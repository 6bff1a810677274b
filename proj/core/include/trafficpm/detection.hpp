#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trafficpm::detection {

/// Closed label set. Declaration order is the tie-break order used when
/// resolving cross-class overlaps.
enum class Label { car, truck, bus, motorcycle, other };

inline constexpr std::array<Label, 5> kAllLabels{Label::car, Label::truck, Label::bus,
                                                  Label::motorcycle, Label::other};

std::string_view to_string(Label label);

/// Maps a backend's label text into the closed set; unknown text is `other`.
Label label_from_string(std::string_view text);

/// Strict variant for ground truth files: nullopt on unknown text.
std::optional<Label> parse_label(std::string_view text);

/// Axis-aligned box, top-left corner plus extent, in pixels.
struct BoundingBox {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection over union, 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Clips `box` to [0,w]x[0,h]; nullopt when nothing of it remains.
std::optional<BoundingBox> clamp_to_image(const BoundingBox& box, int image_w, int image_h);

struct Detection {
    BoundingBox bbox;
    Label label = Label::other;
    double confidence = 0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct FilterConfig {
    double min_confidence = 0.30;
    double min_area_frac = 0.0005;
    double max_area_frac = 0.25;
    double min_aspect = 0.3;
    double max_aspect = 4.0;
    double cross_class_iou = 0.5;
    /// Same-label NMS threshold; disabled unless set.
    std::optional<double> same_label_nms_iou;

    friend bool operator==(const FilterConfig&, const FilterConfig&) = default;
};

/// Throws ArgumentError naming the offending field.
void validate(const FilterConfig& cfg);

std::vector<Detection> filter_by_confidence(std::span<const Detection> dets, double min_confidence);

std::vector<Detection> filter_by_size(std::span<const Detection> dets, const FilterConfig& cfg,
                                      int image_w, int image_h);

/// Collapses each connected group of cross-label overlaps (iou >= threshold)
/// to its single best detection: highest confidence, then lowest label, then
/// earliest input position. Survivors keep their input order.
std::vector<Detection> resolve_multiclass(std::span<const Detection> dets, double cross_class_iou);

/// Greedy same-label suppression by descending confidence.
std::vector<Detection> suppress_same_label(std::span<const Detection> dets, double iou_threshold);

/// confidence -> size -> [same-label NMS] -> cross-class resolution.
std::vector<Detection> run_filter_pipeline(std::span<const Detection> dets, const FilterConfig& cfg,
                                           int image_w, int image_h);

}  // namespace trafficpm::detection
