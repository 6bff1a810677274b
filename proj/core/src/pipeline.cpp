#include "trafficpm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "json.hpp"

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Task>
void parallel_for(std::size_t n, std::size_t width, Task&& task) {
    width = std::max<std::size_t>(1, std::min(width, n));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) task(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace

DetectResult run_detect(const fs::path& archive_root,
                        const std::vector<ingest::ArchiveRecord>& records,
                        detection::DetectorBackend& backend, const DetectOptions& options,
                        const ProgressFn& progress) {
    detection::validate(options.filter);
    require_interval_divides_hour(options.bin_interval);

    std::vector<ingest::ArchiveRecord> todo;
    for (const auto& r : records) {
        if (options.camera_ids.empty() ||
            std::find(options.camera_ids.begin(), options.camera_ids.end(), r.camera_id) !=
                options.camera_ids.end())
            todo.push_back(r);
    }
    std::sort(todo.begin(), todo.end(), [](const auto& a, const auto& b) {
        return std::tie(a.camera_id, a.image_timestamp, a.content_hash) <
               std::tie(b.camera_id, b.image_timestamp, b.content_hash);
    });

    std::vector<std::optional<ImageDetections>> slots(todo.size());
    std::vector<std::string> errors(todo.size());
    parallel_for(todo.size(), options.threads, [&](std::size_t i) {
        const auto& rec = todo[i];
        const auto ref = ingest::Archive::relative_image_path(rec);
        try {
            auto original = archive_root / ref;
            auto image = make_traffic_image(rec.camera_id, rec.image_timestamp,
                                            read_file_bytes(original.string()));
            fs::path sent = original;
            if (auto m = options.masks.find(rec.camera_id); m != options.masks.end()) {
                image = imaging::apply_mask(image, m->second);
                sent = options.work_dir / "masked" / ref;
                std::string_view bytes(reinterpret_cast<const char*>(image.encoded->data()),
                                       image.encoded->size());
                write_file_atomic(sent.string(), bytes);
            }
            ImageDetections out;
            out.image_ref = ref;
            out.camera_id = rec.camera_id;
            out.image_timestamp = rec.image_timestamp;
            out.width = image.width();
            out.height = image.height();
            out.raw = detection::detect(image, fs::absolute(sent).string(), backend);
            out.filtered =
                detection::run_filter_pipeline(out.raw, options.filter, out.width, out.height);
            slots[i] = std::move(out);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    DetectResult result;
    std::vector<aggregation::CountSample> samples;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        const auto ref = ingest::Archive::relative_image_path(todo[i]);
        if (!slots[i]) {
            ++result.failed;
            if (progress) progress(ref, errors[i]);
            continue;
        }
        if (progress) progress(ref, "");
        samples.push_back(aggregation::CountSample{slots[i]->camera_id, slots[i]->image_timestamp,
                                                   aggregation::count_vehicles(slots[i]->filtered)});
        result.images.push_back(std::move(*slots[i]));
    }
    result.counts = aggregation::bin_counts(samples, options.bin_interval);
    return result;
}

namespace {

json detections_json(const std::vector<detection::Detection>& dets) {
    json arr = json::array();
    for (const auto& d : dets)
        arr.push_back({{"label", detection::to_string(d.label)},
                       {"confidence", d.confidence},
                       {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}}});
    return arr;
}

std::vector<detection::Detection> parse_detections(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ValidationError(where + " must be an array");
    std::vector<detection::Detection> out;
    for (const auto& d : arr) {
        const auto& b = d.at("bbox");
        out.push_back(detection::Detection{
            detection::BoundingBox{b.at(0).get<double>(), b.at(1).get<double>(),
                                   b.at(2).get<double>(), b.at(3).get<double>()},
            detection::label_from_string(d.at("label").get<std::string>()),
            d.at("confidence").get<double>()});
    }
    return out;
}

}  // namespace

std::string detections_to_json(const std::vector<ImageDetections>& images) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& img : images) {
        nlohmann::ordered_json o;
        o["image_ref"] = img.image_ref;
        o["camera_id"] = img.camera_id;
        o["image_timestamp"] = format_timestamp(img.image_timestamp);
        o["width"] = img.width;
        o["height"] = img.height;
        o["raw"] = detections_json(img.raw);
        o["filtered"] = detections_json(img.filtered);
        arr.push_back(std::move(o));
    }
    nlohmann::ordered_json doc;
    doc["images"] = std::move(arr);
    return doc.dump(1) + "\n";
}

void write_detections(const fs::path& path, const std::vector<ImageDetections>& images) {
    write_file_atomic(path.string(), detections_to_json(images));
}

std::vector<ImageDetections> read_detections(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("detections file not found: " + path.string());
    json doc;
    try {
        doc = json::parse(read_text_file(path.string()));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    std::vector<ImageDetections> out;
    try {
        for (const auto& o : doc.at("images")) {
            ImageDetections img;
            img.image_ref = o.at("image_ref").get<std::string>();
            img.camera_id = o.value("camera_id", "");
            if (o.contains("image_timestamp"))
                img.image_timestamp = parse_timestamp(o["image_timestamp"].get<std::string>());
            img.width = o.value("width", 0);
            img.height = o.value("height", 0);
            img.raw = parse_detections(o.at("raw"), path.string() + ": " + img.image_ref + ".raw");
            img.filtered =
                parse_detections(o.at("filtered"), path.string() + ": " + img.image_ref + ".filtered");
            out.push_back(std::move(img));
        }
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return out;
}

AnalyzeResult run_analyze(const std::vector<aggregation::VehicleCountRecord>& counts,
                          const std::vector<aggregation::PmSample>& pm_samples,
                          const AnalyzeOptions& options, const fs::path& out_dir) {
    using aggregation::Location;
    AnalyzeResult result;
    auto l1 = aggregation::select_location(pm_samples, Location::L1);
    auto l2 = aggregation::select_location(pm_samples, Location::L2);
    for (const auto& s : pm_samples) result.pm_flagged += s.flagged ? 1 : 0;
    auto bins_l1 = aggregation::bin_pm(l1, options.bin_interval, options.min_coverage);
    auto bins_l2 = aggregation::bin_pm(l2, options.bin_interval, options.min_coverage);
    result.days = analysis::summarize_days(counts, bins_l1, bins_l2, options.bin_interval);
    if (result.days.summaries.empty())
        throw InsufficientDataError("no day has counts plus both L1 and L2 readings");
    result.correlation = analysis::correlate_days(result.days.summaries, options.excluded_dates);
    result.written = analysis::emit_report(result.days.summaries, result.correlation, out_dir);
    return result;
}

evaluation::EvalMetrics run_eval(const evaluation::LabelSet& labels,
                                 const std::vector<ImageDetections>& detections, EvalStage stage,
                                 double iou_threshold) {
    std::map<std::string, const ImageDetections*> by_ref;
    for (const auto& d : detections) by_ref.emplace(d.image_ref, &d);
    std::vector<evaluation::ImageEvaluation> evals;
    for (const auto& img : labels.images) {
        evaluation::ImageEvaluation ev;
        ev.gt = img.boxes;
        if (auto it = by_ref.find(img.image_ref); it != by_ref.end())
            ev.pred = stage == EvalStage::raw ? it->second->raw : it->second->filtered;
        ev.matching = evaluation::match_detections(ev.gt, ev.pred, iou_threshold);
        evals.push_back(std::move(ev));
    }
    return evaluation::compute_metrics(evals, iou_threshold);
}

}  // namespace trafficpm::pipeline
