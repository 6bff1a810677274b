#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trafficpm/detection.hpp"
#include "trafficpm/time.hpp"

namespace trafficpm::aggregation {

/// Counted vehicle classes only; motorcycles and `other` never appear.
struct ClassCounts {
    long long car = 0;
    long long truck = 0;
    long long bus = 0;
    long long total = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts count_vehicles(std::span<const detection::Detection> dets);

/// Counts from a single image.
struct CountSample {
    std::string camera_id;
    Timestamp timestamp;
    ClassCounts counts;
};

/// Per-camera, per-bin traffic density. The per-class and total figures are
/// means over the images that fell in the bin; `counts` holds those means
/// rounded half-up for reporting.
struct VehicleCountRecord {
    std::string camera_id;
    Timestamp bin_start;
    std::size_t n_images = 0;
    double mean_car = 0;
    double mean_truck = 0;
    double mean_bus = 0;
    double mean_total = 0;
    ClassCounts counts;
    std::vector<long long> image_totals;

    friend bool operator==(const VehicleCountRecord&, const VehicleCountRecord&) = default;
};

long long round_half_up(double v);

/// Groups by (camera, floor(epoch / interval)); empty bins are omitted.
/// Output sorted by camera then bin start.
std::vector<VehicleCountRecord> bin_counts(std::span<const CountSample> samples,
                                           std::chrono::seconds interval);

inline constexpr std::string_view kCountsHeader =
    "camera_id,bin_start,n_images,car,truck,bus,total_mean";

std::string format_counts_csv(std::span<const VehicleCountRecord> records);
void write_counts_csv(const std::filesystem::path& path, std::span<const VehicleCountRecord> records);

/// Reads back what write_counts_csv produced. Per-class means come back as
/// the rounded values; `mean_total` is exact.
std::vector<VehicleCountRecord> read_counts_csv(const std::filesystem::path& path);

enum class Location { L1, L2 };

std::string_view to_string(Location loc);

struct PmSample {
    Location location = Location::L1;
    Timestamp timestamp;
    double pm1 = 0;
    double pm25 = 0;
    double rh = 0;
    double temp = 0;
    /// pm25 < pm1: physically odd but kept.
    bool flagged = false;
};

inline constexpr std::string_view kPmHeader = "timestamp,location_id,pm1_ugm3,pm25_ugm3,rh_pct,temp_c";

struct PmParseResult {
    std::vector<PmSample> samples;
    std::size_t dropped = 0;
    std::size_t flagged = 0;
};

/// Rows with negative PM, humidity outside [0,100], an unknown location,
/// or an unparseable field are dropped and tallied. Throws IoError when the
/// file is missing and ValidationError on a wrong header or no valid rows.
PmParseResult parse_pm_csv(const std::filesystem::path& path);
PmParseResult parse_pm_text(std::string_view text, const std::string& source_name = "<memory>");

struct PmBin {
    Location location = Location::L1;
    Timestamp bin_start;
    std::size_t n_samples = 0;
    double mean_pm1 = 0;
    double mean_pm25 = 0;
    double mean_rh = 0;
    double mean_temp = 0;
    bool low_coverage = false;

    friend bool operator==(const PmBin&, const PmBin&) = default;
};

inline constexpr double kDefaultMinCoverage = 0.5;

/// Samples needed for a bin to count as covered at 1 Hz.
std::size_t coverage_threshold(std::chrono::seconds interval, double min_coverage);

/// Floor-aligned means of every channel. All samples must share one
/// location (ArgumentError otherwise). Output sorted by bin start.
std::vector<PmBin> bin_pm(std::span<const PmSample> samples, std::chrono::seconds interval,
                          double min_coverage = kDefaultMinCoverage);

/// Splits samples by location, preserving order.
std::vector<PmSample> select_location(std::span<const PmSample> samples, Location loc);

}  // namespace trafficpm::aggregation
