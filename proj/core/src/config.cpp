#include "trafficpm/config.hpp"

#include "json.hpp"

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path PipelineConfig::resolve(const std::string& p) const {
    fs::path path(p);
    if (path.is_absolute() || base_dir.empty()) return path;
    return base_dir / path;
}

std::string PipelineConfig::resolved_backend() const {
    if (backend.rfind("mock:", 0) == 0) return "mock:" + resolve(backend.substr(5)).string();
    return backend;
}

namespace {

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field '") + key + "': " + e.what());
    }
}

}  // namespace

void validate_config(const PipelineConfig& c, bool check_files) {
    try {
        detection::validate(c.filter);
    } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
    }
    try {
        require_interval_divides_hour(c.bin_interval);
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("config field 'bin_interval_s': ") + e.what());
    }
    if (c.fetch_interval < std::chrono::seconds{60})
        throw ValidationError("config field 'fetch_interval_s' must be at least 60");
    if (!(c.min_coverage >= 0 && c.min_coverage <= 1))
        throw ValidationError("config field 'min_coverage' must lie in [0,1]");
    if (!(c.match_iou > 0 && c.match_iou <= 1))
        throw ValidationError("config field 'match_iou' must lie in (0,1]");
    if (c.max_in_flight == 0) throw ValidationError("config field 'max_in_flight' must be positive");
    if (!c.backend.empty() && c.backend.rfind("mock:", 0) != 0 &&
        c.backend.rfind("process:", 0) != 0 && c.backend.rfind("http://", 0) != 0 &&
        c.backend.rfind("https://", 0) != 0)
        throw ValidationError("config field 'backend': unrecognised spec '" + c.backend + "'");
    if (!check_files) return;
    for (const auto& [cam, path] : c.masks)
        if (!fs::exists(c.resolve(path)))
            throw IoError("mask for camera " + cam + " not found: " + c.resolve(path).string());
    if (c.backend.rfind("mock:", 0) == 0 && !fs::exists(c.resolve(c.backend.substr(5))))
        throw IoError("mock fixture not found: " + c.resolve(c.backend.substr(5)).string());
    for (const auto& p : c.pm_files)
        if (!fs::exists(c.resolve(p))) throw IoError("PM file not found: " + c.resolve(p).string());
}

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir, bool check_files) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) throw ValidationError("config must be a JSON object");

    PipelineConfig c;
    c.base_dir = base_dir;
    if (auto it = doc.find("api"); it != doc.end() && it->is_object()) {
        read_opt(*it, "endpoint", c.api_endpoint);
        read_opt(*it, "key_header", c.api_key_header);
        read_opt(*it, "key_env", c.api_key_env);
    }
    read_opt(doc, "camera_ids", c.camera_ids);
    read_opt(doc, "masks", c.masks);
    if (auto it = doc.find("filter"); it != doc.end() && it->is_object()) {
        auto& f = c.filter;
        read_opt(*it, "min_confidence", f.min_confidence);
        read_opt(*it, "min_area_frac", f.min_area_frac);
        read_opt(*it, "max_area_frac", f.max_area_frac);
        read_opt(*it, "min_aspect", f.min_aspect);
        read_opt(*it, "max_aspect", f.max_aspect);
        read_opt(*it, "cross_class_iou", f.cross_class_iou);
        if (auto nms = it->find("same_label_nms_iou"); nms != it->end() && !nms->is_null()) {
            double v = 0;
            read_opt(*it, "same_label_nms_iou", v);
            f.same_label_nms_iou = v;
        }
    }
    long long bin_s = c.bin_interval.count(), fetch_s = c.fetch_interval.count();
    read_opt(doc, "bin_interval_s", bin_s);
    read_opt(doc, "fetch_interval_s", fetch_s);
    c.bin_interval = std::chrono::seconds{bin_s};
    c.fetch_interval = std::chrono::seconds{fetch_s};
    read_opt(doc, "min_coverage", c.min_coverage);
    read_opt(doc, "match_iou", c.match_iou);
    read_opt(doc, "max_in_flight", c.max_in_flight);
    std::vector<std::string> dates;
    read_opt(doc, "excluded_dates", dates);
    for (const auto& d : dates) {
        try {
            c.excluded_dates.push_back(parse_date(d));
        } catch (const ParseError& e) {
            throw ValidationError(std::string("config field 'excluded_dates': ") + e.what());
        }
    }
    read_opt(doc, "pm_files", c.pm_files);
    read_opt(doc, "backend", c.backend);
    read_opt(doc, "archive_dir", c.archive_dir);
    read_opt(doc, "output_dir", c.output_dir);

    validate_config(c, check_files);
    return c;
}

PipelineConfig load_config(const fs::path& path, bool check_files) {
    if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
    auto base = fs::absolute(path).parent_path();
    try {
        return parse_config(read_text_file(path.string()), base, check_files);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string serialize_config(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["api"] = {{"endpoint", c.api_endpoint}, {"key_header", c.api_key_header},
                {"key_env", c.api_key_env}};
    j["camera_ids"] = c.camera_ids;
    j["masks"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.masks) j["masks"][k] = v;
    j["filter"] = {{"min_confidence", c.filter.min_confidence},
                   {"min_area_frac", c.filter.min_area_frac},
                   {"max_area_frac", c.filter.max_area_frac},
                   {"min_aspect", c.filter.min_aspect},
                   {"max_aspect", c.filter.max_aspect},
                   {"cross_class_iou", c.filter.cross_class_iou},
                   {"same_label_nms_iou", c.filter.same_label_nms_iou
                                              ? nlohmann::ordered_json(*c.filter.same_label_nms_iou)
                                              : nlohmann::ordered_json(nullptr)}};
    j["bin_interval_s"] = c.bin_interval.count();
    j["fetch_interval_s"] = c.fetch_interval.count();
    j["min_coverage"] = c.min_coverage;
    j["match_iou"] = c.match_iou;
    j["max_in_flight"] = c.max_in_flight;
    j["excluded_dates"] = nlohmann::ordered_json::array();
    for (auto d : c.excluded_dates) j["excluded_dates"].push_back(format_date(d));
    j["pm_files"] = c.pm_files;
    j["backend"] = c.backend;
    j["archive_dir"] = c.archive_dir;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

}  // namespace trafficpm
