#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "trafficpm/aggregation.hpp"
#include "trafficpm/analysis.hpp"
#include "trafficpm/backend.hpp"
#include "trafficpm/detection.hpp"
#include "trafficpm/evaluation.hpp"
#include "trafficpm/imaging.hpp"
#include "trafficpm/ingest.hpp"

namespace trafficpm::pipeline {

/// Detector output for one archived image, before and after filtering.
struct ImageDetections {
    std::string image_ref;
    std::string camera_id;
    Timestamp image_timestamp;
    int width = 0;
    int height = 0;
    std::vector<detection::Detection> raw;
    std::vector<detection::Detection> filtered;
};

using ProgressFn = std::function<void(const std::string& image_ref, const std::string& error)>;

struct DetectOptions {
    detection::FilterConfig filter;
    std::chrono::seconds bin_interval{300};
    /// Only these cameras; empty means all.
    std::vector<std::string> camera_ids;
    std::map<std::string, imaging::RoiMask> masks;
    /// Masked frames are written under `<work_dir>/masked/` for the detector.
    std::filesystem::path work_dir;
    std::size_t threads = 1;
};

struct DetectResult {
    std::vector<ImageDetections> images;
    std::vector<aggregation::VehicleCountRecord> counts;
    std::size_t failed = 0;
};

/// Archive -> mask -> detector -> filters -> per-bin counts. Images are
/// processed in (camera, timestamp, ref) order and results do not depend on
/// the thread count. Images whose detection fails are reported and left out.
DetectResult run_detect(const std::filesystem::path& archive_root,
                        const std::vector<ingest::ArchiveRecord>& records,
                        detection::DetectorBackend& backend, const DetectOptions& options,
                        const ProgressFn& progress = {});

std::string detections_to_json(const std::vector<ImageDetections>& images);
void write_detections(const std::filesystem::path& path, const std::vector<ImageDetections>& images);
std::vector<ImageDetections> read_detections(const std::filesystem::path& path);

struct AnalyzeOptions {
    std::chrono::seconds bin_interval{300};
    double min_coverage = aggregation::kDefaultMinCoverage;
    std::vector<Date> excluded_dates;
};

struct AnalyzeResult {
    analysis::DayTable days;
    analysis::CorrelationResult correlation;
    std::size_t pm_dropped = 0;
    std::size_t pm_flagged = 0;
    std::vector<std::filesystem::path> written;
};

/// Counts + PM samples -> daily summaries -> correlation -> report files.
AnalyzeResult run_analyze(const std::vector<aggregation::VehicleCountRecord>& counts,
                          const std::vector<aggregation::PmSample>& pm_samples,
                          const AnalyzeOptions& options, const std::filesystem::path& out_dir);

enum class EvalStage { raw, filtered };

/// Matches each labelled image against the detections recorded for the
/// same image_ref. Labelled images with no detections record count as
/// having no predictions.
evaluation::EvalMetrics run_eval(const evaluation::LabelSet& labels,
                                 const std::vector<ImageDetections>& detections, EvalStage stage,
                                 double iou_threshold);

}  // namespace trafficpm::pipeline
