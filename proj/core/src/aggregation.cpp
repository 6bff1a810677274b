#include "trafficpm/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::aggregation {

using detection::Label;

ClassCounts count_vehicles(std::span<const detection::Detection> dets) {
    ClassCounts c;
    for (const auto& d : dets) {
        switch (d.label) {
            case Label::car: ++c.car; break;
            case Label::truck: ++c.truck; break;
            case Label::bus: ++c.bus; break;
            case Label::motorcycle:
            case Label::other: break;
        }
    }
    c.total = c.car + c.truck + c.bus;
    return c;
}

long long round_half_up(double v) { return static_cast<long long>(std::floor(v + 0.5)); }

std::vector<VehicleCountRecord> bin_counts(std::span<const CountSample> samples,
                                           std::chrono::seconds interval) {
    require_interval_divides_hour(interval);
    struct Acc {
        long long car = 0, truck = 0, bus = 0, total = 0;
        std::vector<long long> totals;
    };
    std::map<std::pair<std::string, Timestamp>, Acc> bins;
    for (const auto& s : samples) {
        auto& a = bins[{s.camera_id, floor_to_interval(s.timestamp, interval)}];
        a.car += s.counts.car;
        a.truck += s.counts.truck;
        a.bus += s.counts.bus;
        a.total += s.counts.total;
        a.totals.push_back(s.counts.total);
    }
    std::vector<VehicleCountRecord> out;
    out.reserve(bins.size());
    for (auto& [key, a] : bins) {
        VehicleCountRecord r;
        r.camera_id = key.first;
        r.bin_start = key.second;
        r.n_images = a.totals.size();
        const double n = static_cast<double>(r.n_images);
        r.mean_car = static_cast<double>(a.car) / n;
        r.mean_truck = static_cast<double>(a.truck) / n;
        r.mean_bus = static_cast<double>(a.bus) / n;
        r.mean_total = static_cast<double>(a.total) / n;
        r.counts.car = round_half_up(r.mean_car);
        r.counts.truck = round_half_up(r.mean_truck);
        r.counts.bus = round_half_up(r.mean_bus);
        r.counts.total = r.counts.car + r.counts.truck + r.counts.bus;
        r.image_totals = std::move(a.totals);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_counts_csv(std::span<const VehicleCountRecord> records) {
    std::string out(kCountsHeader);
    out += '\n';
    for (const auto& r : records) {
        out += join_csv({r.camera_id, format_timestamp(r.bin_start), std::to_string(r.n_images),
                         std::to_string(r.counts.car), std::to_string(r.counts.truck),
                         std::to_string(r.counts.bus), format_double(r.mean_total)});
        out += '\n';
    }
    return out;
}

void write_counts_csv(const std::filesystem::path& path, std::span<const VehicleCountRecord> records) {
    write_file_atomic(path.string(), format_counts_csv(records));
}

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

}  // namespace

std::vector<VehicleCountRecord> read_counts_csv(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("counts file not found: " + path.string());
    auto text = read_text_file(path.string());
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kCountsHeader)
        throw ValidationError(path.string() + ": expected header '" + std::string(kCountsHeader) + "'");
    std::vector<VehicleCountRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto where = path.string() + ":" + std::to_string(i + 1);
        auto f = split_csv_line(lines[i]);
        if (f.size() != 7) throw ValidationError(where + ": expected 7 fields");
        VehicleCountRecord r;
        long long n = 0;
        r.camera_id = f[0];
        try {
            r.bin_start = parse_timestamp(f[1]);
        } catch (const ParseError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (!parse_int(f[2], n) || n < 1) throw ValidationError(where + ": bad n_images");
        r.n_images = static_cast<std::size_t>(n);
        if (!parse_int(f[3], r.counts.car) || !parse_int(f[4], r.counts.truck) ||
            !parse_int(f[5], r.counts.bus))
            throw ValidationError(where + ": bad class count");
        if (!parse_double(f[6], r.mean_total) || r.mean_total < 0)
            throw ValidationError(where + ": bad total_mean");
        r.counts.total = r.counts.car + r.counts.truck + r.counts.bus;
        r.mean_car = static_cast<double>(r.counts.car);
        r.mean_truck = static_cast<double>(r.counts.truck);
        r.mean_bus = static_cast<double>(r.counts.bus);
        out.push_back(std::move(r));
    }
    return out;
}

std::string_view to_string(Location loc) { return loc == Location::L1 ? "L1" : "L2"; }

PmParseResult parse_pm_text(std::string_view text, const std::string& source_name) {
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kPmHeader)
        throw ValidationError(source_name + ": expected header '" + std::string(kPmHeader) + "'");
    PmParseResult result;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = split_csv_line(lines[i]);
        PmSample s;
        bool ok = f.size() == 6;
        if (ok) {
            try {
                s.timestamp = parse_timestamp(f[0]);
            } catch (const ParseError&) {
                ok = false;
            }
        }
        if (ok) {
            if (f[1] == "L1")
                s.location = Location::L1;
            else if (f[1] == "L2")
                s.location = Location::L2;
            else
                ok = false;
        }
        ok = ok && parse_double(f[2], s.pm1) && parse_double(f[3], s.pm25) &&
             parse_double(f[4], s.rh) && parse_double(f[5], s.temp);
        ok = ok && std::isfinite(s.pm1) && std::isfinite(s.pm25) && std::isfinite(s.rh) &&
             std::isfinite(s.temp) && s.pm1 >= 0 && s.pm25 >= 0 && s.rh >= 0 && s.rh <= 100;
        if (!ok) {
            ++result.dropped;
            continue;
        }
        if (s.pm25 < s.pm1) {
            s.flagged = true;
            ++result.flagged;
        }
        result.samples.push_back(s);
    }
    if (result.samples.empty())
        throw ValidationError(source_name + ": no valid PM rows (" + std::to_string(result.dropped) +
                              " dropped)");
    return result;
}

PmParseResult parse_pm_csv(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("PM file not found: " + path.string());
    return parse_pm_text(read_text_file(path.string()), path.string());
}

std::size_t coverage_threshold(std::chrono::seconds interval, double min_coverage) {
    return static_cast<std::size_t>(std::ceil(min_coverage * static_cast<double>(interval.count())));
}

std::vector<PmBin> bin_pm(std::span<const PmSample> samples, std::chrono::seconds interval,
                          double min_coverage) {
    require_interval_divides_hour(interval);
    if (!(min_coverage >= 0 && min_coverage <= 1))
        throw ArgumentError("min_coverage must lie in [0,1]");
    if (samples.empty()) return {};
    const auto loc = samples.front().location;
    // Sums plus per-channel extremes; the extremes pin each mean inside
    // [min, max] against last-bit rounding of sum / n.
    struct Channel {
        double sum = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        void add(double v) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double mean(std::size_t n) const { return std::clamp(sum / static_cast<double>(n), lo, hi); }
    };
    struct Acc {
        std::size_t n = 0;
        Channel pm1, pm25, rh, temp;
    };
    std::map<Timestamp, Acc> bins;
    for (const auto& s : samples) {
        if (s.location != loc)
            throw ArgumentError("bin_pm given samples from both L1 and L2");
        auto& a = bins[floor_to_interval(s.timestamp, interval)];
        ++a.n;
        a.pm1.add(s.pm1);
        a.pm25.add(s.pm25);
        a.rh.add(s.rh);
        a.temp.add(s.temp);
    }
    const auto needed = coverage_threshold(interval, min_coverage);
    std::vector<PmBin> out;
    out.reserve(bins.size());
    for (const auto& [start, a] : bins) {
        out.push_back(PmBin{loc, start, a.n, a.pm1.mean(a.n), a.pm25.mean(a.n), a.rh.mean(a.n),
                            a.temp.mean(a.n), a.n < needed});
    }
    return out;
}

std::vector<PmSample> select_location(std::span<const PmSample> samples, Location loc) {
    std::vector<PmSample> out;
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
                 [&](const PmSample& s) { return s.location == loc; });
    return out;
}

}  // namespace trafficpm::aggregation
