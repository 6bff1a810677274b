#include "trafficpm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::analysis {

using aggregation::PmBin;
using aggregation::VehicleCountRecord;

namespace {

std::vector<PmBin> usable(std::span<const PmBin> bins) {
    std::vector<PmBin> out;
    std::copy_if(bins.begin(), bins.end(), std::back_inserter(out),
                 [](const PmBin& b) { return !b.low_coverage; });
    return out;
}

double mean_pm1(const std::vector<PmBin>& bins) {
    double sum = 0;
    for (const auto& b : bins) sum += b.mean_pm1;
    return sum / static_cast<double>(bins.size());
}

}  // namespace

DayOutcome daily_summary(std::span<const VehicleCountRecord> count_bins,
                         std::span<const PmBin> pm_bins_L1, std::span<const PmBin> pm_bins_L2,
                         Date date) {
    auto check_date = [&](Timestamp t, const char* what) {
        if (date_of(t) != date)
            throw ArgumentError(std::string(what) + " bin at " + format_timestamp(t) +
                                " does not belong to " + format_date(date));
    };
    for (const auto& r : count_bins) check_date(r.bin_start, "count");
    for (const auto& b : pm_bins_L1) check_date(b.bin_start, "L1");
    for (const auto& b : pm_bins_L2) check_date(b.bin_start, "L2");

    auto l1 = usable(pm_bins_L1);
    auto l2 = usable(pm_bins_L2);
    if (l2.empty()) return SkippedDay{date, kNoBaseline};
    if (l1.empty()) return SkippedDay{date, kNoRoadside};
    if (count_bins.empty()) return SkippedDay{date, kNoCounts};

    DailySummary s;
    s.date = date;
    double total = 0;
    for (const auto& r : count_bins) {
        total += r.mean_total;
        s.bin_counts.push_back(r.mean_total);
    }
    s.n_bins_count = count_bins.size();
    s.mean_count = total / static_cast<double>(count_bins.size());
    s.mean_pm1_L1 = mean_pm1(l1);
    s.mean_pm1_L2 = mean_pm1(l2);
    s.delta_pm1 = s.mean_pm1_L1 - s.mean_pm1_L2;
    s.n_bins_L1 = l1.size();
    s.n_bins_L2 = l2.size();
    s.bins_L1 = std::move(l1);
    s.bins_L2 = std::move(l2);
    return s;
}

DayTable summarize_days(std::span<const VehicleCountRecord> count_bins,
                        std::span<const PmBin> pm_bins_L1, std::span<const PmBin> pm_bins_L2,
                        std::chrono::seconds interval) {
    struct Day {
        std::vector<VehicleCountRecord> counts;
        std::vector<PmBin> l1, l2;
    };
    std::map<Date, Day> days;
    for (const auto& r : count_bins) days[date_of(r.bin_start)].counts.push_back(r);
    for (const auto& b : pm_bins_L1) days[date_of(b.bin_start)].l1.push_back(b);
    for (const auto& b : pm_bins_L2) days[date_of(b.bin_start)].l2.push_back(b);

    DayTable table;
    for (auto& [date, day] : days) {
        std::optional<Timestamp> lo, hi;
        for (const auto* side : {&day.l1, &day.l2}) {
            for (const auto& b : *side) {
                if (b.low_coverage) continue;
                if (!lo || b.bin_start < *lo) lo = b.bin_start;
                if (!hi || b.bin_start + interval > *hi) hi = b.bin_start + interval;
            }
        }
        std::vector<VehicleCountRecord> windowed;
        for (auto& r : day.counts)
            if (!lo || (r.bin_start >= *lo && r.bin_start < *hi)) windowed.push_back(std::move(r));

        auto outcome = daily_summary(windowed, day.l1, day.l2, date);
        if (auto* s = std::get_if<DailySummary>(&outcome))
            table.summaries.push_back(std::move(*s));
        else
            table.skipped.push_back(std::get<SkippedDay>(outcome));
    }
    return table;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ArgumentError("pearson: series lengths differ (" + std::to_string(x.size()) + " vs " +
                            std::to_string(y.size()) + ")");
    if (x.size() < 3) throw ArgumentError("pearson: need at least 3 points");

    // Corrected two-pass: centred sums, minus the residual left by rounding
    // in the means.
    const double n = static_cast<double>(x.size());
    double mean_x = 0, mean_y = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double sx = 0, sy = 0, m2_x = 0, m2_y = 0, c_xy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sx += dx;
        sy += dy;
        m2_x += dx * dx;
        m2_y += dy * dy;
        c_xy += dx * dy;
    }
    m2_x -= sx * sx / n;
    m2_y -= sy * sy / n;
    c_xy -= sx * sy / n;
    if (m2_x <= 0 || m2_y <= 0) throw UndefinedCorrelationError("pearson: a series is constant");
    return std::clamp(c_xy / std::sqrt(m2_x * m2_y), -1.0, 1.0);
}

CorrelationResult correlate_days(std::span<const DailySummary> summaries,
                                 std::span<const Date> excluded_dates) {
    std::set<Date> excluded(excluded_dates.begin(), excluded_dates.end());
    CorrelationResult result;
    result.excluded_dates.assign(excluded.begin(), excluded.end());

    std::vector<const DailySummary*> ordered;
    for (const auto& s : summaries) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const DailySummary* a, const DailySummary* b) { return a->date < b->date; });

    std::vector<double> xs, ys, all_x, all_y;
    for (const auto* s : ordered) {
        all_x.push_back(s->mean_count);
        all_y.push_back(s->delta_pm1);
        if (excluded.count(s->date)) continue;
        xs.push_back(s->mean_count);
        ys.push_back(s->delta_pm1);
        result.table.push_back(CorrelationRow{s->date, s->mean_count, s->delta_pm1});
    }
    if (xs.size() < 3)
        throw InsufficientDataError("correlation needs at least 3 days after exclusions, have " +
                                    std::to_string(xs.size()));
    result.n_days = xs.size();
    result.r = pearson(xs, ys);
    if (!excluded.empty()) {
        try {
            result.r_all_days = pearson(all_x, all_y);
        } catch (const UndefinedCorrelationError&) {
            result.r_all_days.reset();
        }
    }
    return result;
}

FiveNumber five_number_summary(std::vector<double> values) {
    FiveNumber f;
    f.n = values.size();
    if (values.empty()) return f;
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        double pos = p * static_cast<double>(values.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, values.size() - 1);
        double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    f.min = values.front();
    f.q1 = quantile(0.25);
    f.median = quantile(0.5);
    f.q3 = quantile(0.75);
    f.max = values.back();
    return f;
}

namespace {

struct Channel {
    const char* location;
    const char* channel;
    std::vector<double> (*values)(const DailySummary&);
};

template <double PmBin::*Field, bool Roadside>
std::vector<double> pm_values(const DailySummary& s) {
    std::vector<double> out;
    for (const auto& b : Roadside ? s.bins_L1 : s.bins_L2) out.push_back(b.*Field);
    return out;
}

std::vector<double> count_values(const DailySummary& s) { return s.bin_counts; }

const Channel kChannels[] = {
    {"traffic", "count", &count_values},
    {"L1", "pm1", &pm_values<&PmBin::mean_pm1, true>},
    {"L1", "pm25", &pm_values<&PmBin::mean_pm25, true>},
    {"L1", "rh", &pm_values<&PmBin::mean_rh, true>},
    {"L1", "temp", &pm_values<&PmBin::mean_temp, true>},
    {"L2", "pm1", &pm_values<&PmBin::mean_pm1, false>},
    {"L2", "pm25", &pm_values<&PmBin::mean_pm25, false>},
    {"L2", "rh", &pm_values<&PmBin::mean_rh, false>},
    {"L2", "temp", &pm_values<&PmBin::mean_temp, false>},
};

}  // namespace

std::vector<std::filesystem::path> emit_report(std::span<const DailySummary> summaries,
                                               const CorrelationResult& result,
                                               const std::filesystem::path& out_dir) {
    if (summaries.empty()) throw ArgumentError("emit_report: no daily summaries to report");

    std::vector<const DailySummary*> ordered;
    for (const auto& s : summaries) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const DailySummary* a, const DailySummary* b) { return a->date < b->date; });
    std::set<Date> excluded(result.excluded_dates.begin(), result.excluded_dates.end());

    std::vector<std::pair<std::filesystem::path, std::string>> files;

    nlohmann::ordered_json report;
    report["r"] = result.r;
    report["r_all_days"] = result.r_all_days ? nlohmann::ordered_json(*result.r_all_days)
                                             : nlohmann::ordered_json(nullptr);
    report["n_days"] = result.n_days;
    report["excluded_dates"] = nlohmann::ordered_json::array();
    for (auto d : result.excluded_dates) report["excluded_dates"].push_back(format_date(d));
    report["days"] = nlohmann::ordered_json::array();
    for (const auto* s : ordered) {
        report["days"].push_back({{"date", format_date(s->date)},
                                  {"mean_count", s->mean_count},
                                  {"mean_pm1_L1", s->mean_pm1_L1},
                                  {"mean_pm1_L2", s->mean_pm1_L2},
                                  {"delta_pm1", s->delta_pm1},
                                  {"n_bins_count", s->n_bins_count},
                                  {"n_bins_L1", s->n_bins_L1},
                                  {"n_bins_L2", s->n_bins_L2},
                                  {"excluded", excluded.count(s->date) > 0}});
    }
    files.emplace_back(out_dir / "report.json", report.dump(2) + "\n");

    std::string scatter = std::string(kScatterHeader) + "\n";
    for (const auto& row : result.table)
        scatter += format_date(row.date) + "," + format_double(row.mean_count) + "," +
                   format_double(row.delta_pm1) + "\n";
    files.emplace_back(out_dir / "scatter.csv", std::move(scatter));

    for (const auto& ch : kChannels) {
        std::string body = std::string(kBoxplotHeader) + "\n";
        for (const auto* s : ordered) {
            auto f = five_number_summary(ch.values(*s));
            body += join_csv({format_date(s->date), ch.location, ch.channel, format_double(f.min),
                              format_double(f.q1), format_double(f.median), format_double(f.q3),
                              format_double(f.max), std::to_string(f.n)});
            body += "\n";
        }
        files.emplace_back(out_dir / (std::string("boxplot_") + ch.location + "_" + ch.channel + ".csv"),
                           std::move(body));
    }

    std::vector<std::filesystem::path> written;
    for (auto& [path, body] : files) {
        write_file_atomic(path.string(), body);
        written.push_back(path);
    }
    return written;
}

}  // namespace trafficpm::analysis
