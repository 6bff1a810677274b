#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trafficpm/detection.hpp"
#include "trafficpm/time.hpp"

namespace trafficpm {

/// Everything a pipeline run needs, loaded from one JSON file. Relative
/// paths are kept as written and resolved against the config file's
/// directory through `resolve`.
struct PipelineConfig {
    std::string api_endpoint;
    std::string api_key_header = "api-key";
    /// Name of the environment variable holding the key value.
    std::string api_key_env = "TRAFFICPM_API_KEY";

    std::vector<std::string> camera_ids;
    std::map<std::string, std::string> masks;
    detection::FilterConfig filter;

    std::chrono::seconds bin_interval{300};
    std::chrono::seconds fetch_interval{300};
    double min_coverage = 0.5;
    double match_iou = 0.5;
    std::size_t max_in_flight = 4;

    std::vector<Date> excluded_dates;
    std::vector<std::string> pm_files;

    /// `mock:<fixture>`, `process:<command>` or an http(s) URL.
    std::string backend;
    std::string archive_dir = "archive";
    std::string output_dir = "out";

    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& p) const;

    /// Backend spec with a relative mock fixture path made absolute.
    std::string resolved_backend() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses and validates. Throws ValidationError naming the field, IoError
/// naming any referenced file (mask, mock fixture, PM file) that is missing.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            bool check_files = true);
PipelineConfig load_config(const std::filesystem::path& path, bool check_files = true);

/// Canonical JSON form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const PipelineConfig& config);

/// Re-checks invariants after command-line overrides.
void validate_config(const PipelineConfig& config, bool check_files = true);

}  // namespace trafficpm
