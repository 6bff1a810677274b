#pragma once

#include <cstddef>
#include <vector>

#include "trafficpm/evaluation.hpp"

namespace trafficpm::tsup {

/// Raw outcome counts for one class group of a matching fixture.
struct GroupPlan {
    std::size_t correct = 0;
    std::size_t undetected = 0;
    std::size_t misclassified = 0;
    std::size_t false_preds = 0;
};

/// Lays out ground truth and predictions on a grid, 100 cells per image,
/// so that matching produces exactly the planned outcome counts. Correct
/// predictions coincide with their box and carry a label of the same group;
/// misclassified ones coincide but carry the other group's label; false
/// predictions sit in empty cells.
inline std::vector<evaluation::ImageEvaluation> build_group_fixture(const GroupPlan& car,
                                                                    const GroupPlan& trucks_buses,
                                                                    double iou_threshold = 0.5) {
    using detection::BoundingBox;
    using detection::Detection;
    using detection::Label;
    std::vector<evaluation::ImageEvaluation> images;
    std::size_t cell = 0;
    auto next_box = [&]() -> BoundingBox {
        if (cell % 100 == 0) images.emplace_back();
        std::size_t c = cell++ % 100;
        return BoundingBox{static_cast<double>(c % 10) * 40.0, static_cast<double>(c / 10) * 40.0, 30, 20};
    };
    auto plant = [&](const GroupPlan& plan, bool is_car) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < plan.correct; ++i) {
            auto b = next_box();
            Label gl = is_car ? Label::car : (k++ % 4 == 3 ? Label::bus : Label::truck);
            images.back().gt.push_back({b, gl});
            images.back().pred.push_back(Detection{b, is_car ? Label::car : gl, 0.9});
        }
        for (std::size_t i = 0; i < plan.undetected; ++i) {
            auto b = next_box();
            images.back().gt.push_back({b, is_car ? Label::car : Label::truck});
        }
        for (std::size_t i = 0; i < plan.misclassified; ++i) {
            auto b = next_box();
            images.back().gt.push_back({b, is_car ? Label::car : Label::bus});
            images.back().pred.push_back(Detection{b, is_car ? Label::truck : Label::car, 0.8});
        }
        for (std::size_t i = 0; i < plan.false_preds; ++i) {
            auto b = next_box();
            images.back().pred.push_back(Detection{b, is_car ? Label::car : Label::truck, 0.7});
        }
    };
    plant(car, true);
    plant(trucks_buses, false);
    for (auto& img : images) img.matching = evaluation::match_detections(img.gt, img.pred, iou_threshold);
    return images;
}

inline constexpr GroupPlan kUnfilteredCar{941, 39, 20, 105};
inline constexpr GroupPlan kUnfilteredTrucksBuses{808, 154, 38, 226};
inline constexpr GroupPlan kFilteredCar{895, 78, 27, 52};
inline constexpr GroupPlan kFilteredTrucksBuses{769, 154, 77, 77};

}  // namespace trafficpm::tsup
