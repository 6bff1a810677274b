// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "scenario.hpp"
#include "test_support.hpp"
#include "trafficpm/aggregation.hpp"
#include "trafficpm/analysis.hpp"
#include "trafficpm/detection.hpp"
#include "trafficpm/evaluation.hpp"
#include "trafficpm/ingest.hpp"

using namespace trafficpm;
namespace fs = std::filesystem;
using detection::BoundingBox;
using detection::Detection;
using detection::Label;

namespace {

// Tolerances and budgets.
constexpr double kPearsonTol = 1e-12;
constexpr int kPearsonTrials = 1000;
constexpr double kPearsonBudget = 5.0;
constexpr double kTableBudget = 1.0;
constexpr double kMinFalseReduction = 2.0;
constexpr double kMaxValidLoss = 0.10;
constexpr double kFilterBudget = 1.0;
constexpr double kDedupBudget = 2.0;
constexpr double kE2eTargetR = 0.93;
constexpr double kE2eMinR = 0.9;
constexpr double kE2eTol = 1e-12;
constexpr double kE2eBudget = 30.0;
constexpr int kMulticlassTrials = 2000;

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail.clear();
        pass = false;
        detail += (detail.empty() ? "" : "; ") + why;
    }
};

std::string fmt(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

// ---------------------------------------------------------------- pearson

Outcome pearson_oracle() {
    Outcome o;
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> len(3, 500);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0, worst_affine = 0;
    int checked = 0;
    for (int trial = 0; trial < kPearsonTrials; ++trial) {
        const int n = len(rng);
        const double mx = 100 * u(rng), my = 100 * u(rng);
        const double sx = std::pow(10.0, 2 * u(rng)), sy = std::pow(10.0, 2 * u(rng));
        const double rho = u(rng);
        std::normal_distribution<double> g(0, 1);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            double z1 = g(rng), z2 = g(rng);
            x[i] = mx + sx * z1;
            y[i] = my + sy * (rho * z1 + std::sqrt(1 - rho * rho) * z2);
        }
        const double r = analysis::pearson(x, y);
        worst = std::max(worst, std::abs(r - acceptance::oracle_pearson(x, y)));

        const double a = (u(rng) < 0 ? -1 : 1) * std::pow(10.0, u(rng)), b = 100 * u(rng);
        const double c = std::pow(10.0, u(rng)), d = 100 * u(rng);
        std::vector<double> xa(n), ya(n);
        for (int i = 0; i < n; ++i) {
            xa[i] = a * x[i] + b;
            ya[i] = c * y[i] + d;
        }
        worst_affine = std::max(worst_affine, std::abs(analysis::pearson(xa, ya) - (a < 0 ? -r : r)));
        ++checked;
    }
    o.detail = std::to_string(checked) + " series, max |r - oracle| = " + fmt(worst, 3) +
               ", max affine drift = " + fmt(worst_affine, 3) + " (tol " + fmt(kPearsonTol, 3) + ")";
    if (worst > kPearsonTol) o.fail("oracle deviation " + fmt(worst, 3));
    if (worst_affine > kPearsonTol) o.fail("affine drift " + fmt(worst_affine, 3));
    return o;
}

// ----------------------------------------------------------------- tables

Outcome table_fixtures() {
    Outcome o;
    struct Row {
        const char* name;
        tsup::GroupPlan car, tb;
        double expect[2][3];  // correct, undetected, false per group
    };
    const Row rows[] = {
        {"unfiltered", tsup::kUnfilteredCar, tsup::kUnfilteredTrucksBuses, {{0.941, 0.039, 0.105}, {0.808, 0.154, 0.226}}},
        {"filtered", tsup::kFilteredCar, tsup::kFilteredTrucksBuses, {{0.895, 0.078, 0.052}, {0.769, 0.154, 0.077}}},
    };
    std::ostringstream detail;
    for (const auto& row : rows) {
        auto images = tsup::build_group_fixture(row.car, row.tb);
        auto m = evaluation::compute_metrics(images, 0.5);
        const evaluation::ClassGroup groups[] = {evaluation::ClassGroup::car, evaluation::ClassGroup::trucks_buses};
        for (int gi = 0; gi < 2; ++gi) {
            const auto& g = m.group(groups[gi]);
            if (!g) {
                o.fail(std::string(row.name) + ": group missing");
                continue;
            }
            const double got[3] = {evaluation::round3(g->correctly_identified_rate()),
                                   evaluation::round3(g->undetected_rate()),
                                   evaluation::round3(g->falsely_detected_rate())};
            for (int k = 0; k < 3; ++k)
                if (got[k] != row.expect[gi][k])
                    o.fail(std::string(row.name) + " " + evaluation::to_string(groups[gi]) + " rate " +
                           std::to_string(k) + ": " + fmt(got[k]) + " != " + fmt(row.expect[gi][k]));
            detail << row.name << " " << evaluation::to_string(groups[gi]) << " " << fmt(got[0]) << "/"
                   << fmt(got[1]) << "/" << fmt(got[2]) << "  ";
        }
    }
    if (o.pass) o.detail = detail.str();
    return o;
}

// ----------------------------------------------------------------- filter

Outcome filter_efficacy() {
    Outcome o;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 1);
    const int W = 640, H = 480;
    const detection::FilterConfig cfg;
    std::size_t planted = 0, kept_valid = 0, false_before = 0, false_after = 0;
    const Label vehicle[] = {Label::car, Label::car, Label::car, Label::truck, Label::bus};

    for (int image = 0; image < 300; ++image) {
        // 8x6 grid of 80x80 cells; every box lives inside its own cell.
        std::vector<int> cells(48);
        std::iota(cells.begin(), cells.end(), 0);
        std::shuffle(cells.begin(), cells.end(), rng);
        auto cell_box = [&](int cell, double w, double h) {
            return BoundingBox{(cell % 8) * 80.0 + 5 + u(rng) * (70 - w), (cell / 8) * 80.0 + 5 + u(rng) * (70 - h), w,
                               h};
        };
        std::vector<evaluation::GroundTruthBox> gt;
        std::vector<Detection> dets;
        std::size_t next = 0;
        const int n_valid = 3 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n_valid; ++i) {
            double w = 20 + u(rng) * 45, h = std::clamp(w / (0.6 + u(rng) * 1.8), 12.0, 68.0);
            auto box = cell_box(cells[next++], w, h);
            Label l = vehicle[rng() % 5];
            double conf = 0.35 + u(rng) * 0.6;
            gt.push_back({box, l});
            dets.push_back({box, l, conf});
            // Coincident duplicate under another class, less confident.
            if (u(rng) < 0.6) {
                Label other = l == Label::car ? (u(rng) < 0.7 ? Label::truck : Label::bus) : Label::car;
                BoundingBox jit{box.x + (u(rng) - 0.5) * 2, box.y + (u(rng) - 0.5) * 2, box.w, box.h};
                dets.push_back({jit, other, conf * (0.4 + 0.55 * u(rng))});
            }
        }
        // Oversized boxes spanning much of the frame.
        for (int i = 0, n = 1 + static_cast<int>(rng() % 2); i < n; ++i) {
            double w = 360 + u(rng) * 270, h = 280 + u(rng) * 190;
            dets.push_back({{u(rng) * (W - w), u(rng) * (H - h), w, h}, vehicle[rng() % 5], 0.3 + u(rng) * 0.6});
        }
        // Low-confidence clutter.
        if (u(rng) < 0.7) dets.push_back({cell_box(cells[next++], 30, 25), Label::car, u(rng) * 0.25});
        // Plausible false positives the filters cannot tell from vehicles.
        if (u(rng) < 0.35) dets.push_back({cell_box(cells[next++], 35, 25), vehicle[rng() % 5], 0.35 + u(rng) * 0.4});

        auto count = [&](const std::vector<Detection>& pred, std::size_t& false_count) {
            auto m = evaluation::match_detections(gt, pred, 0.5);
            std::size_t correct = 0;
            for (const auto& p : m.pairs) {
                if (gt[p.gt].label == pred[p.pred].label)
                    ++correct;
                else
                    ++false_count;
            }
            false_count += m.unmatched_pred.size();
            return correct;
        };
        planted += gt.size();
        count(dets, false_before);
        kept_valid += count(detection::run_filter_pipeline(dets, cfg, W, H), false_after);
    }
    const double reduction = false_after == 0 ? INFINITY : double(false_before) / double(false_after);
    const double loss = 1.0 - double(kept_valid) / double(planted);
    o.detail = "false " + std::to_string(false_before) + " -> " + std::to_string(false_after) + " (" +
               fmt(reduction, 3) + "x), valid lost " + fmt(100 * loss, 3) + "% of " + std::to_string(planted);
    if (!(reduction >= kMinFalseReduction)) o.fail("reduction " + fmt(reduction, 3) + "x below 2x");
    if (loss > kMaxValidLoss) o.fail("lost " + fmt(100 * loss, 3) + "% of valid boxes");
    if (false_after == 0) o.fail("fixture degenerate: no surviving false positives");
    return o;
}

// ------------------------------------------------------------------ dedup

Outcome dedup_count() {
    Outcome o;
    tsup::TempDir dir;
    const auto t0 = parse_timestamp("2022-02-24T05:00:00Z");
    const char* cams[] = {"1001", "1002", "1003"};
    std::vector<ingest::LoggedResponse> log;
    std::mt19937_64 rng(5);
    std::map<std::string, std::vector<fs::path>> served;
    auto entry = [&](const char* cam, int k, const fs::path& body) {
        auto ts = t0 + std::chrono::seconds{60 * k};
        return ingest::LoggedResponse{cam, ts, ts, "https://r/" + std::to_string(k), body, 32, 24};
    };
    for (int i = 0; i < 287; ++i) {
        const char* cam = cams[i % 3];
        auto body = dir / ("u" + std::to_string(i) + ".jpg");
        tsup::write_bytes(body, tsup::noise_jpeg(32, 24, 9000 + i));
        served[cam].push_back(body);
        log.push_back(entry(cam, i, body));
    }
    // 40 repeats: a separate file holding the same bytes as an earlier
    // frame from that camera, slotted in at random positions.
    for (int i = 0; i < 40; ++i) {
        const char* cam = cams[rng() % 3];
        const auto& pool = served[cam];
        const auto& src = pool[rng() % pool.size()];
        auto copy = dir / ("r" + std::to_string(i) + ".jpg");
        fs::copy_file(src, copy);
        auto pos = log.begin() + static_cast<long>(rng() % log.size() + 1);
        auto it = std::find_if(log.begin(), log.end(), [&](const auto& r) { return r.body_path == src; });
        if (pos <= it) pos = it + 1;
        log.insert(pos, entry(cam, 1000 + i, copy));
    }
    ingest::write_fetch_log(dir / "log.json", log);
    ingest::Archive archive(dir / "archive");
    auto stats = ingest::replay_fetch_log(ingest::load_fetch_log(dir / "log.json"), archive);
    o.detail = std::to_string(log.size()) + " responses -> " + std::to_string(archive.size()) + " records, " +
               std::to_string(stats.duplicates) + " duplicates";
    if (log.size() != 327) o.fail("fixture has " + std::to_string(log.size()) + " responses");
    if (archive.size() != 287) o.fail("archive holds " + std::to_string(archive.size()));
    if (stats.duplicates != 40 || stats.failed != 0) o.fail("stats " + std::to_string(stats.duplicates) + "/" +
                                                            std::to_string(stats.failed));
    if (ingest::read_ledger(dir / "archive" / std::string(ingest::kLedgerFile)).size() != 287)
        o.fail("ledger line count");
    return o;
}

// ---------------------------------------------------------------- binning

Outcome binning_conservation() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    const int intervals[] = {60, 300, 600, 900, 3600};
    std::size_t trials = 0, samples_seen = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto interval = std::chrono::seconds{intervals[rng() % 5]};
        const auto start = parse_timestamp("2022-03-01T00:00:00Z") + std::chrono::seconds{rng() % 86400};
        const int len = 200 + static_cast<int>(rng() % 5000);
        // 1 Hz with gaps and invalid rows mixed in.
        std::string csv = "timestamp,location_id,pm1_ugm3,pm25_ugm3,rh_pct,temp_c\n";
        std::map<std::pair<int, long long>, std::pair<double, double>> range;  // (loc, bin) -> min, max
        std::map<std::pair<int, long long>, std::size_t> expected_n;
        std::size_t valid = 0;
        char line[160];
        for (int s = 0; s < len; ++s) {
            if (u(rng) < 0.1) continue;
            const auto t = start + std::chrono::seconds{s};
            const int loc = static_cast<int>(rng() % 2);
            const bool bad = u(rng) < 0.05;
            const double pm1 = std::pow(10.0, 3 * u(rng) - 1);
            std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%s,%.3f\n", format_timestamp(t).c_str(),
                          loc ? "L2" : "L1", pm1, pm1 * 1.3, bad ? "140" : "55", 10 * u(rng));
            csv += line;
            if (bad) continue;
            ++valid;
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
            std::pair<int, long long> key{loc, secs - (secs % interval.count())};
            auto [it, fresh] = range.try_emplace(key, pm1, pm1);
            it->second.first = std::min(it->second.first, pm1);
            it->second.second = std::max(it->second.second, pm1);
            ++expected_n[key];
        }
        auto parsed = aggregation::parse_pm_text(csv);
        std::size_t binned = 0;
        std::vector<aggregation::PmBin> all_bins;
        for (auto loc : {aggregation::Location::L1, aggregation::Location::L2}) {
            auto at = aggregation::select_location(parsed.samples, loc);
            auto bins = aggregation::bin_pm(at, interval);
            for (const auto& b : bins) {
                binned += b.n_samples;
                const auto secs = std::chrono::duration_cast<std::chrono::seconds>(b.bin_start.time_since_epoch()).count();
                std::pair<int, long long> key{loc == aggregation::Location::L1 ? 0 : 1, secs};
                auto r = range.find(key);
                if (r == range.end() || expected_n[key] != b.n_samples) {
                    o.fail("bin membership differs at trial " + std::to_string(trial));
                    continue;
                }
                if (b.mean_pm1 < r->second.first || b.mean_pm1 > r->second.second)
                    o.fail("mean outside [min,max] at trial " + std::to_string(trial));
            }
            // Shifting every timestamp by whole intervals shifts the bins and nothing else.
            const auto shift = interval * static_cast<int>(1 + rng() % 50);
            auto moved = at;
            for (auto& s : moved) s.timestamp += shift;
            auto moved_bins = aggregation::bin_pm(moved, interval);
            if (moved_bins.size() != bins.size()) {
                o.fail("translation changed bin count");
                continue;
            }
            for (std::size_t i = 0; i < bins.size(); ++i) {
                auto expect = bins[i];
                expect.bin_start += shift;
                if (!(moved_bins[i] == expect)) o.fail("translation changed bin " + std::to_string(i));
            }
        }
        if (binned != valid) o.fail("sum n_samples " + std::to_string(binned) + " != " + std::to_string(valid));
        samples_seen += valid;
        ++trials;
    }
    if (o.pass)
        o.detail = std::to_string(trials) + " streams, " + std::to_string(samples_seen) +
                   " valid samples conserved; means bounded; translation exact";
    return o;
}

// ------------------------------------------------------------ end to end

struct CliRun {
    int code;
    std::string log;
};

CliRun cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, log;
    int code = cli::run(args, out, log);
    return {code, log.str()};
}

/// Every file below `dir`, by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = tsup::read_all(e.path());
    return files;
}

struct E2eState {
    std::unique_ptr<tsup::TempDir> dir;
    acceptance::Campaign campaign;
    bool ran = false;
};

E2eState& e2e_state() {
    static E2eState s;
    return s;
}

Outcome end_to_end() {
    Outcome o;
    auto& s = e2e_state();
    s.dir = std::make_unique<tsup::TempDir>();
    s.campaign = acceptance::build_campaign(s.dir->path(), kE2eTargetR, 7);
    const auto& c = s.campaign;
    const std::string cfg = c.config.string();

    for (const auto& args : std::vector<std::vector<std::string>>{
             {"fetch", "--config", cfg, "--replay", c.fetch_log.string()},
             {"detect", "--config", cfg, "--threads", "2"},
             {"analyze", "--config", cfg}}) {
        auto r = cli_run(args);
        if (r.code != 0) {
            o.fail(args[0] + " exited " + std::to_string(r.code) + ": " + r.log.substr(0, 400));
            return o;
        }
    }
    s.ran = true;
    const fs::path out = s.dir->path() / "out";
    auto report = nlohmann::json::parse(tsup::read_all(out / "report.json"));
    const double r = report.at("r").get<double>();
    const auto archived = ingest::read_ledger(s.dir->path() / "archive" / std::string(ingest::kLedgerFile)).size();

    // Daily means straight from the pipeline's counts file.
    auto counts = aggregation::read_counts_csv(out / "counts.csv");
    std::map<Date, std::pair<long double, int>> per_day;
    for (const auto& rec : counts) {
        auto& [sum, n] = per_day[date_of(rec.bin_start)];
        sum += rec.mean_total;
        ++n;
    }
    double worst_count = 0;
    for (std::size_t d = 0; d < c.days.size(); ++d) {
        auto [sum, n] = per_day[c.days[d]];
        worst_count = std::max(worst_count, std::abs(static_cast<double>(sum / n) - c.oracle_mean_count[d]));
    }

    o.detail = std::to_string(c.responses) + " responses, " + std::to_string(archived) + " archived, " +
               std::to_string(report.at("n_days").get<int>()) + " days, r = " + fmt(r, 15) + ", oracle r = " +
               fmt(c.oracle_r, 15) + ", |diff| = " + fmt(std::abs(r - c.oracle_r), 3);
    if (archived != c.unique_images) o.fail("archive holds " + std::to_string(archived));
    if (worst_count != 0) o.fail("daily vehicle means differ from the script by " + fmt(worst_count, 3));
    if (report.at("n_days").get<std::size_t>() != c.days.size()) o.fail("day count");
    if (!(r >= kE2eMinR)) o.fail("r = " + fmt(r) + " below " + fmt(kE2eMinR));
    if (!(std::abs(r - c.oracle_r) <= kE2eTol)) o.fail("r differs from oracle by " + fmt(std::abs(r - c.oracle_r), 3));
    return o;
}

Outcome determinism() {
    Outcome o;
    auto& s = e2e_state();
    if (!s.ran) {
        o.fail("end-to-end run did not complete");
        return o;
    }
    const std::string cfg = s.campaign.config.string();
    const fs::path first = s.dir->path() / "out";
    const fs::path second = s.dir->path() / "rerun";
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"detect", "--config", cfg, "--threads", "4", "--out", second.string()},
             {"analyze", "--config", cfg, "--out", second.string()}}) {
        auto r = cli_run(args);
        if (r.code != 0) {
            o.fail(args[0] + " exited " + std::to_string(r.code));
            return o;
        }
    }
    auto a = snapshot(first), b = snapshot(second);
    std::size_t same = 0;
    for (const auto& [name, bytes] : a) {
        auto it = b.find(name);
        if (it == b.end())
            o.fail("missing on rerun: " + name);
        else if (it->second != bytes)
            o.fail("differs: " + name);
        else
            ++same;
    }
    if (b.size() != a.size()) o.fail("file sets differ");
    if (a.count("counts.csv") == 0 || a.count("detections.json") == 0 || a.count("report.json") == 0)
        o.fail("expected outputs missing");
    if (o.pass) o.detail = std::to_string(same) + " output files byte-identical across reruns (threads 2 vs 4)";
    return o;
}

// ------------------------------------------------------------- multiclass

/// Components of the cross-label overlap graph found by depth-first search;
/// each component keeps only its most confident member.
std::vector<Detection> brute_force_multiclass(const std::vector<Detection>& d, double thr) {
    const std::size_t n = d.size();
    auto overlaps = [&](std::size_t i, std::size_t j) {
        if (d[i].label == d[j].label) return false;
        const auto &a = d[i].bbox, &b = d[j].bbox;
        double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
        double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
        if (iw <= 0 || ih <= 0) return false;
        double inter = iw * ih;
        return inter / (a.w * a.h + b.w * b.h - inter) >= thr;
    };
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<std::size_t> stack{s};
        comp[s] = n_comp;
        while (!stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j)
                if (comp[j] < 0 && overlaps(i, j)) {
                    comp[j] = n_comp;
                    stack.push_back(j);
                }
        }
        ++n_comp;
    }
    std::vector<std::size_t> best(n_comp, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& b = best[comp[i]];
        if (b == n) {
            b = i;
            continue;
        }
        // Ties: higher confidence, then lower label ordinal, then input order.
        const bool wins = d[i].confidence != d[b].confidence ? d[i].confidence > d[b].confidence
                          : d[i].label != d[b].label         ? static_cast<int>(d[i].label) < static_cast<int>(d[b].label)
                                                             : false;
        if (wins) b = i;
    }
    std::vector<Detection> out;
    for (std::size_t i = 0; i < n; ++i)
        if (best[comp[i]] == i) out.push_back(d[i]);
    return out;
}

Outcome multiclass_oracle() {
    Outcome o;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t dets_total = 0;
    for (int trial = 0; trial < kMulticlassTrials; ++trial) {
        const int n = static_cast<int>(rng() % 13);
        const double thr = 0.2 + 0.6 * u(rng);
        std::vector<Detection> d;
        for (int i = 0; i < n; ++i) {
            BoundingBox b;
            if (!d.empty() && u(rng) < 0.5) {  // near an earlier box so chains form
                const auto& p = d[rng() % d.size()].bbox;
                b = {p.x + (u(rng) - 0.5) * 10, p.y + (u(rng) - 0.5) * 10, p.w * (0.8 + 0.4 * u(rng)),
                     p.h * (0.8 + 0.4 * u(rng))};
            } else {
                b = {u(rng) * 80, u(rng) * 80, 10 + u(rng) * 30, 10 + u(rng) * 30};
            }
            // Coarse confidences make ties common.
            d.push_back({b, detection::kAllLabels[rng() % detection::kAllLabels.size()], std::round(u(rng) * 10) / 10});
        }
        dets_total += d.size();
        if (detection::resolve_multiclass(d, thr) != brute_force_multiclass(d, thr)) {
            o.fail("mismatch at trial " + std::to_string(trial) + " (" + std::to_string(n) + " detections)");
            return o;
        }
    }
    o.detail = std::to_string(kMulticlassTrials) + " instances (" + std::to_string(dets_total) +
               " detections, n <= 12) agree with component-max enumeration";
    return o;
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // 0 = no runtime bound
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"pearson_oracle_equivalence", pearson_oracle, kPearsonBudget},
        {"rate_fixture_reproduction", table_fixtures, kTableBudget},
        {"filter_efficacy", filter_efficacy, kFilterBudget},
        {"dedup_count_327_to_287", dedup_count, kDedupBudget},
        {"binning_conservation", binning_conservation, 0},
        {"end_to_end_mock_campaign", end_to_end, kE2eBudget},
        {"rerun_determinism", determinism, 0},
        {"multiclass_bruteforce_oracle", multiclass_oracle, 0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) o.fail("took " + fmt(secs, 3) + " s, budget " + fmt(c.budget_s) + " s");
        if (!o.pass) ++failed;
        std::printf("[%s] %-30s %8.3f s  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
