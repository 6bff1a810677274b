#include "trafficpm/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trafficpm/error.hpp"

namespace trafficpm::detection {

std::string_view to_string(Label label) {
    switch (label) {
        case Label::car: return "car";
        case Label::truck: return "truck";
        case Label::bus: return "bus";
        case Label::motorcycle: return "motorcycle";
        case Label::other: return "other";
    }
    return "other";
}

std::optional<Label> parse_label(std::string_view text) {
    for (auto l : kAllLabels)
        if (to_string(l) == text) return l;
    return std::nullopt;
}

Label label_from_string(std::string_view text) { return parse_label(text).value_or(Label::other); }

double iou(const BoundingBox& a, const BoundingBox& b) {
    double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0 || ih <= 0) return 0.0;
    // Areas from the same corner arithmetic as the overlap, so iou(a, a) == 1.
    auto span_area = [](const BoundingBox& r) { return (r.right() - r.x) * (r.bottom() - r.y); };
    double inter = iw * ih;
    double uni = span_area(a) + span_area(b) - inter;
    if (uni <= 0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<BoundingBox> clamp_to_image(const BoundingBox& box, int image_w, int image_h) {
    double x0 = std::clamp(box.x, 0.0, static_cast<double>(image_w));
    double y0 = std::clamp(box.y, 0.0, static_cast<double>(image_h));
    double x1 = std::clamp(box.right(), 0.0, static_cast<double>(image_w));
    double y1 = std::clamp(box.bottom(), 0.0, static_cast<double>(image_h));
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

void validate(const FilterConfig& cfg) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ArgumentError("filter config field '" + field + "' " + why);
    };
    if (!(cfg.min_confidence >= 0 && cfg.min_confidence <= 1))
        fail("min_confidence", "must lie in [0,1]");
    if (!(cfg.min_area_frac > 0)) fail("min_area_frac", "must be positive");
    if (!(cfg.max_area_frac > cfg.min_area_frac && cfg.max_area_frac <= 1))
        fail("max_area_frac", "must lie in (min_area_frac, 1]");
    if (!(cfg.min_aspect > 0)) fail("min_aspect", "must be positive");
    if (!(cfg.max_aspect > cfg.min_aspect)) fail("max_aspect", "must exceed min_aspect");
    if (!(cfg.cross_class_iou > 0 && cfg.cross_class_iou <= 1))
        fail("cross_class_iou", "must lie in (0,1]");
    if (cfg.same_label_nms_iou && !(*cfg.same_label_nms_iou > 0 && *cfg.same_label_nms_iou <= 1))
        fail("same_label_nms_iou", "must lie in (0,1]");
}

std::vector<Detection> filter_by_confidence(std::span<const Detection> dets, double min_confidence) {
    std::vector<Detection> out;
    std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
                 [&](const Detection& d) { return d.confidence >= min_confidence; });
    return out;
}

std::vector<Detection> filter_by_size(std::span<const Detection> dets, const FilterConfig& cfg,
                                      int image_w, int image_h) {
    const double image_area = static_cast<double>(image_w) * image_h;
    std::vector<Detection> out;
    for (const auto& d : dets) {
        double frac = d.bbox.area() / image_area;
        double aspect = d.bbox.w / d.bbox.h;
        if (frac >= cfg.min_area_frac && frac <= cfg.max_area_frac && aspect >= cfg.min_aspect &&
            aspect <= cfg.max_aspect)
            out.push_back(d);
    }
    return out;
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i) {
        while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

/// True when detection `a` (at index ia) should win over `b` (at index ib).
bool preferred(const Detection& a, std::size_t ia, const Detection& b, std::size_t ib) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.label != b.label) return a.label < b.label;
    return ia < ib;
}

}  // namespace

std::vector<Detection> resolve_multiclass(std::span<const Detection> dets, double cross_class_iou) {
    const std::size_t n = dets.size();
    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (dets[i].label != dets[j].label && iou(dets[i].bbox, dets[j].bbox) >= cross_class_iou)
                sets.unite(i, j);

    std::vector<std::size_t> best(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto root = sets.find(i);
        if (best[root] == n || preferred(dets[i], i, dets[best[root]], best[root])) best[root] = i;
    }
    std::vector<Detection> out;
    for (std::size_t i = 0; i < n; ++i)
        if (best[sets.find(i)] == i) out.push_back(dets[i]);
    return out;
}

std::vector<Detection> suppress_same_label(std::span<const Detection> dets, double iou_threshold) {
    const std::size_t n = dets.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });
    std::vector<bool> keep(n, false);
    std::vector<std::size_t> kept;
    for (auto i : order) {
        bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return dets[k].label == dets[i].label && iou(dets[k].bbox, dets[i].bbox) >= iou_threshold;
        });
        if (!suppressed) {
            keep[i] = true;
            kept.push_back(i);
        }
    }
    std::vector<Detection> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(dets[i]);
    return out;
}

std::vector<Detection> run_filter_pipeline(std::span<const Detection> dets, const FilterConfig& cfg,
                                           int image_w, int image_h) {
    auto out = filter_by_confidence(dets, cfg.min_confidence);
    out = filter_by_size(out, cfg, image_w, image_h);
    if (cfg.same_label_nms_iou) out = suppress_same_label(out, *cfg.same_label_nms_iou);
    return resolve_multiclass(out, cfg.cross_class_iou);
}

}  // namespace trafficpm::detection
