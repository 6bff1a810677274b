#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "trafficpm/config.hpp"
#include "trafficpm/error.hpp"
#include "trafficpm/pipeline.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::cli {

namespace fs = std::filesystem;

namespace {

/// Bad combination of flags; maps to the usage exit code.
class UsageError : public Error {
public:
    using Error::Error;
};

/// One JSON object per line on the log stream.
class Log {
public:
    explicit Log(std::ostream& os) : os_(os) {}

    void info(const std::string& event, nlohmann::ordered_json fields = {}) { emit("info", event, std::move(fields)); }
    void warn(const std::string& event, nlohmann::ordered_json fields = {}) { emit("warn", event, std::move(fields)); }
    void error(const std::string& event, nlohmann::ordered_json fields = {}) { emit("error", event, std::move(fields)); }

private:
    void emit(const char* level, const std::string& event, nlohmann::ordered_json fields) {
        nlohmann::ordered_json line;
        line["ts"] = format_timestamp(
            std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
        line["level"] = level;
        line["event"] = event;
        if (fields.is_object())
            for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
        os_ << line.dump() << '\n';
        os_.flush();
    }

    std::ostream& os_;
};

/// Values given on the command line; unset ones fall back to the config.
struct Overrides {
    std::string config_path;
    std::string backend;
    std::string archive_dir;
    std::string out_dir;
    std::optional<long long> interval_s;
    std::optional<double> min_coverage;
    std::vector<std::string> excluded;
    std::size_t threads = 0;

    // fetch
    std::string from, to, replay;
    // analyze
    std::string counts;
    std::vector<std::string> pm_files;
    // eval
    std::string labels, detections, metrics_out;
    std::optional<double> iou;
    std::string stage = "filtered";
};

struct Context {
    PipelineConfig config;
    fs::path archive;
    fs::path out;
};

Context make_context(const Overrides& o, bool need_config) {
    Context ctx;
    if (!o.config_path.empty()) {
        ctx.config = load_config(o.config_path);
    } else if (need_config) {
        throw UsageError("--config is required");
    } else {
        ctx.config.base_dir = fs::current_path();
    }
    auto& c = ctx.config;
    if (!o.backend.empty()) c.backend = o.backend;
    if (o.interval_s) c.bin_interval = std::chrono::seconds{*o.interval_s};
    if (o.min_coverage) c.min_coverage = *o.min_coverage;
    if (o.iou) c.match_iou = *o.iou;
    if (o.threads) c.max_in_flight = o.threads;
    for (const auto& d : o.excluded) c.excluded_dates.push_back(parse_date(d));
    // Flag paths are relative to the working directory, config paths to the config.
    ctx.archive = o.archive_dir.empty() ? c.resolve(c.archive_dir) : fs::path(o.archive_dir);
    ctx.out = o.out_dir.empty() ? c.resolve(c.output_dir) : fs::path(o.out_dir);
    validate_config(c, false);
    return ctx;
}

int do_fetch(const Overrides& o, Log& log) {
    auto ctx = make_context(o, true);
    ingest::Archive archive(ctx.archive);
    ingest::FetchStats stats;
    auto observer = [&](const std::string& cam, const std::string& err) {
        if (!err.empty()) log.warn("fetch_failed", {{"camera_id", cam}, {"error", err}});
    };
    if (!o.replay.empty()) {
        auto responses = ingest::load_fetch_log(o.replay);
        log.info("replay_start", {{"log", o.replay}, {"responses", responses.size()}});
        stats = ingest::replay_fetch_log(responses, archive, observer);
    } else {
        if (o.from.empty() || o.to.empty()) throw UsageError("fetch needs --from and --to, or --replay");
        if (ctx.config.api_endpoint.empty()) throw ValidationError("config field 'api.endpoint' is empty");
        ingest::Endpoint ep;
        ep.url = ctx.config.api_endpoint;
        ep.key_header = ctx.config.api_key_header;
        if (const char* key = std::getenv(ctx.config.api_key_env.c_str())) ep.key_value = key;
        auto interval = o.interval_s ? std::chrono::seconds{*o.interval_s} : ctx.config.fetch_interval;
        auto schedule = ingest::plan_schedule(parse_timestamp(o.from), parse_timestamp(o.to), interval);
        log.info("fetch_start", {{"polls", schedule.size()}, {"endpoint", ep.url}});
        ingest::CampaignOptions opts;
        opts.camera_ids = ctx.config.camera_ids;
        opts.max_in_flight = ctx.config.max_in_flight;
        stats = ingest::run_campaign(ep, schedule, opts, archive, observer);
    }
    log.info("fetch_done", {{"archive", ctx.archive.string()},
                            {"fetched", stats.fetched},
                            {"inserted", stats.inserted},
                            {"duplicates", stats.duplicates},
                            {"failed", stats.failed},
                            {"index_warnings", stats.index_warnings},
                            {"archive_size", archive.size()}});
    return kExitOk;
}

int do_detect(const Overrides& o, Log& log) {
    auto ctx = make_context(o, true);
    const auto& c = ctx.config;
    if (c.backend.empty()) throw ValidationError("no detector backend configured (use --backend)");
    auto ledger = ctx.archive / ingest::kLedgerFile;
    if (!fs::exists(ledger)) throw IoError("archive ledger not found: " + ledger.string());
    auto records = ingest::read_ledger(ledger);

    pipeline::DetectOptions opts;
    opts.filter = c.filter;
    opts.bin_interval = c.bin_interval;
    opts.camera_ids = c.camera_ids;
    opts.work_dir = ctx.out;
    opts.threads = c.max_in_flight;
    for (const auto& [cam, path] : c.masks) opts.masks.emplace(cam, imaging::load_mask(c.resolve(path)));

    auto backend = detection::make_backend(o.backend.empty() ? c.resolved_backend() : o.backend);
    log.info("detect_start", {{"images", records.size()}, {"backend", backend->describe()}});
    auto result = pipeline::run_detect(ctx.archive, records, *backend, opts,
                                       [&](const std::string& ref, const std::string& err) {
                                           if (!err.empty())
                                               log.warn("detect_failed", {{"image", ref}, {"error", err}});
                                       });
    pipeline::write_detections(ctx.out / "detections.json", result.images);
    aggregation::write_counts_csv(ctx.out / "counts.csv", result.counts);
    log.info("detect_done", {{"images", result.images.size()},
                             {"failed", result.failed},
                             {"bins", result.counts.size()},
                             {"counts", (ctx.out / "counts.csv").string()}});
    return result.failed ? kExitFailure : kExitOk;
}

int do_analyze(const Overrides& o, Log& log) {
    auto ctx = make_context(o, false);
    const auto& c = ctx.config;
    fs::path counts_path = o.counts.empty() ? ctx.out / "counts.csv" : fs::path(o.counts);
    std::vector<fs::path> pm_paths;
    for (const auto& p : o.pm_files) pm_paths.emplace_back(p);
    if (pm_paths.empty())
        for (const auto& p : c.pm_files) pm_paths.push_back(c.resolve(p));
    if (pm_paths.empty()) throw UsageError("analyze needs at least one --pm file");

    std::vector<aggregation::PmSample> samples;
    for (const auto& p : pm_paths) {
        auto parsed = aggregation::parse_pm_csv(p);
        log.info("pm_loaded", {{"file", p.string()},
                               {"samples", parsed.samples.size()},
                               {"dropped", parsed.dropped},
                               {"flagged", parsed.flagged}});
        samples.insert(samples.end(), parsed.samples.begin(), parsed.samples.end());
    }
    auto counts = aggregation::read_counts_csv(counts_path);

    pipeline::AnalyzeOptions opts{c.bin_interval, c.min_coverage, c.excluded_dates};
    auto result = pipeline::run_analyze(counts, samples, opts, ctx.out);
    for (const auto& s : result.days.skipped)
        log.warn("day_skipped", {{"date", format_date(s.date)}, {"reason", s.reason}});
    nlohmann::ordered_json done{{"days", result.correlation.n_days}, {"r", result.correlation.r}};
    done["r_all_days"] = result.correlation.r_all_days ? nlohmann::ordered_json(*result.correlation.r_all_days)
                                                      : nlohmann::ordered_json(nullptr);
    done["report"] = (ctx.out / "report.json").string();
    log.info("analyze_done", std::move(done));
    return kExitOk;
}

int do_eval(const Overrides& o, Log& log) {
    auto ctx = make_context(o, false);
    if (o.labels.empty()) throw UsageError("eval needs --labels");
    fs::path det_path = o.detections.empty() ? ctx.out / "detections.json" : fs::path(o.detections);
    auto labels = evaluation::load_labels(o.labels);
    for (const auto& w : labels.warnings) log.warn("labels", {{"message", w}});
    auto dets = pipeline::read_detections(det_path);
    auto stage = o.stage == "raw" ? pipeline::EvalStage::raw : pipeline::EvalStage::filtered;
    auto metrics = pipeline::run_eval(labels, dets, stage, ctx.config.match_iou);
    fs::path out = o.metrics_out.empty() ? ctx.out / "metrics.json" : fs::path(o.metrics_out);
    write_file_atomic(out.string(), evaluation::metrics_to_json(metrics));
    log.info("eval_done", {{"images", labels.images.size()}, {"stage", o.stage}, {"metrics", out.string()}});
    return kExitOk;
}

int do_run(const Overrides& o, Log& log) {
    if (!o.replay.empty() || (!o.from.empty() && !o.to.empty())) {
        int rc = do_fetch(o, log);
        if (rc != kExitOk) return rc;
    }
    int rc = do_detect(o, log);
    if (rc != kExitOk) return rc;
    return do_analyze(o, log);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log_stream) {
    Log log(log_stream);
    Overrides o;

    CLI::App app{"Traffic-camera vehicle counts fused with roadside PM measurements", "trafficpm"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Pipeline config JSON");
        sub->add_option("--out", o.out_dir, "Output directory (overrides config)");
        sub->add_option("--archive", o.archive_dir, "Archive directory (overrides config)");
    };

    auto* fetch = app.add_subcommand("fetch", "Poll the image repository (or replay a fetch log) into the archive");
    common(fetch);
    fetch->add_option("--from", o.from, "Schedule start, ISO-8601");
    fetch->add_option("--to", o.to, "Schedule end (exclusive), ISO-8601");
    fetch->add_option("--interval", o.interval_s, "Polling interval in seconds (>= 60)");
    fetch->add_option("--replay", o.replay, "Fetch log to replay instead of polling");

    auto* detect = app.add_subcommand("detect", "Run the detector and filters over the archive; write counts");
    common(detect);
    detect->add_option("--backend", o.backend, "mock:<fixture>, process:<cmd> or http URL");
    detect->add_option("--threads", o.threads, "Concurrent detector requests");
    detect->add_option("--interval", o.interval_s, "Bin width in seconds");

    auto* analyze = app.add_subcommand("analyze", "Fuse counts with PM data and correlate per day");
    common(analyze);
    analyze->add_option("--counts", o.counts, "Counts CSV (default <out>/counts.csv)");
    analyze->add_option("--pm", o.pm_files, "PM CSV file; repeatable");
    analyze->add_option("--exclude", o.excluded, "Date (YYYY-MM-DD) to leave out of r; repeatable");
    analyze->add_option("--min-coverage", o.min_coverage, "Fraction of 1 Hz samples a PM bin needs");
    analyze->add_option("--interval", o.interval_s, "Bin width in seconds");

    auto* eval = app.add_subcommand("eval", "Score detections against hand labels");
    common(eval);
    eval->add_option("--labels", o.labels, "Ground-truth label JSON")->required();
    eval->add_option("--detections", o.detections, "Detections JSON (default <out>/detections.json)");
    eval->add_option("--iou", o.iou, "IoU threshold for a match");
    eval->add_option("--stage", o.stage, "Which detections to score")->check(CLI::IsMember({"raw", "filtered"}));
    eval->add_option("--metrics", o.metrics_out, "Metrics output path (default <out>/metrics.json)");

    auto* all = app.add_subcommand("run", "fetch (when requested), detect and analyze in one go");
    common(all);
    all->add_option("--from", o.from, "Schedule start, ISO-8601");
    all->add_option("--to", o.to, "Schedule end (exclusive), ISO-8601");
    all->add_option("--replay", o.replay, "Fetch log to replay");
    all->add_option("--backend", o.backend, "mock:<fixture>, process:<cmd> or http URL");
    all->add_option("--threads", o.threads, "Concurrent detector requests");
    all->add_option("--pm", o.pm_files, "PM CSV file; repeatable");
    all->add_option("--exclude", o.excluded, "Date to leave out of r; repeatable");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        log_stream << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "fetch") return do_fetch(o, log);
        if (sub == "detect") return do_detect(o, log);
        if (sub == "analyze") return do_analyze(o, log);
        if (sub == "eval") return do_eval(o, log);
        return do_run(o, log);
    } catch (const UsageError& e) {
        log.error("usage", {{"command", sub}, {"message", e.what()}});
        return kExitUsage;
    } catch (const Error& e) {
        log.error("failed", {{"command", sub}, {"message", e.what()}});
        return kExitFailure;
    } catch (const std::exception& e) {
        log.error("failed", {{"command", sub}, {"message", e.what()}});
        return kExitFailure;
    }
}

}  // namespace trafficpm::cli
