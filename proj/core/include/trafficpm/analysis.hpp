#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trafficpm/aggregation.hpp"
#include "trafficpm/time.hpp"

namespace trafficpm::analysis {

/// One calendar day reduced to a single (traffic, PM increase) point.
struct DailySummary {
    Date date;
    double mean_count = 0;
    double mean_pm1_L1 = 0;
    double mean_pm1_L2 = 0;
    double delta_pm1 = 0;
    std::size_t n_bins_count = 0;
    std::size_t n_bins_L1 = 0;
    std::size_t n_bins_L2 = 0;

    /// The bins behind the means, kept for the per-day distributions.
    std::vector<double> bin_counts;
    std::vector<aggregation::PmBin> bins_L1;
    std::vector<aggregation::PmBin> bins_L2;
};

struct SkippedDay {
    Date date;
    std::string reason;
};

using DayOutcome = std::variant<DailySummary, SkippedDay>;

inline constexpr const char* kNoBaseline = "no baseline";
inline constexpr const char* kNoRoadside = "no roadside";
inline constexpr const char* kNoCounts = "no counts";

/// Means over usable bins (low-coverage PM bins are ignored). A side with no
/// usable bins yields a SkippedDay; baseline is reported first, then
/// roadside, then counts. Bins from another date are an ArgumentError.
DayOutcome daily_summary(std::span<const aggregation::VehicleCountRecord> count_bins,
                         std::span<const aggregation::PmBin> pm_bins_L1,
                         std::span<const aggregation::PmBin> pm_bins_L2, Date date);

struct DayTable {
    std::vector<DailySummary> summaries;
    std::vector<SkippedDay> skipped;
};

/// Groups every input by UTC date and summarizes each day that has any
/// data. Count bins are restricted to the span covered by that day's usable
/// PM bins before averaging.
DayTable summarize_days(std::span<const aggregation::VehicleCountRecord> count_bins,
                        std::span<const aggregation::PmBin> pm_bins_L1,
                        std::span<const aggregation::PmBin> pm_bins_L2,
                        std::chrono::seconds interval);

/// Product-moment correlation. Throws ArgumentError on length mismatch or
/// fewer than three points, UndefinedCorrelationError on a constant series.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationRow {
    Date date;
    double mean_count = 0;
    double delta_pm1 = 0;
};

struct CorrelationResult {
    double r = 0;
    /// Present only when some dates were excluded; nullopt there too if the
    /// all-days correlation is itself undefined.
    std::optional<double> r_all_days;
    std::size_t n_days = 0;
    std::vector<Date> excluded_dates;
    std::vector<CorrelationRow> table;
};

/// Correlates mean_count with delta_pm1 over the days not excluded.
/// Throws InsufficientDataError if fewer than three remain.
CorrelationResult correlate_days(std::span<const DailySummary> summaries,
                                 std::span<const Date> excluded_dates);

struct FiveNumber {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    std::size_t n = 0;
};

/// Quartiles by linear interpolation between order statistics.
FiveNumber five_number_summary(std::vector<double> values);

/// Writes report.json, scatter.csv and one boxplot_<location>_<channel>.csv
/// per channel. Refuses (ArgumentError, nothing written) on empty input.
/// Returns the paths written, in a fixed order.
std::vector<std::filesystem::path> emit_report(std::span<const DailySummary> summaries,
                                               const CorrelationResult& result,
                                               const std::filesystem::path& out_dir);

inline constexpr const char* kBoxplotHeader = "date,location_id,channel,min,q1,median,q3,max,n";
inline constexpr const char* kScatterHeader = "date,mean_count,delta_pm1_ugm3";

}  // namespace trafficpm::analysis
