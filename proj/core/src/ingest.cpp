#include "trafficpm/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "http_client.hpp"
#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Timestamp> plan_schedule(Timestamp from, Timestamp to, std::chrono::seconds interval) {
    if (!(from < to)) throw ArgumentError("schedule range is empty or inverted");
    if (interval < kMinInterval)
        throw ArgumentError("schedule interval " + std::to_string(interval.count()) +
                            " s is below the 60 s floor");
    std::vector<Timestamp> out;
    for (Timestamp t = from; t < to; t += interval) out.push_back(t);
    return out;
}

namespace {

template <typename T>
bool get_field(const json& obj, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return false;
    try {
        out = it->get<T>();
        return true;
    } catch (const json::exception&) {
        return false;
    }
}

}  // namespace

CameraIndex parse_camera_index(std::string_view payload, Timestamp fallback_retrieved_at) {
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("camera index is not valid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array())
        throw ParseError("camera index lacks an \"items\" array", 0);

    CameraIndex index;
    index.retrieved_at = fallback_retrieved_at;
    std::set<std::string> seen;
    bool have_retrieved = false;
    for (const auto& item : doc["items"]) {
        if (!item.is_object()) {
            ++index.warnings;
            continue;
        }
        std::string item_ts;
        if (!have_retrieved && get_field(item, "timestamp", item_ts)) {
            try {
                index.retrieved_at = parse_timestamp(item_ts);
                have_retrieved = true;
            } catch (const ParseError&) {
            }
        }
        auto cams = item.find("cameras");
        if (cams == item.end() || !cams->is_array()) continue;
        for (const auto& cam : *cams) {
            IndexEntry entry;
            std::string ts;
            const json* meta = nullptr;
            if (cam.is_object()) {
                auto m = cam.find("image_metadata");
                if (m != cam.end() && m->is_object()) meta = &*m;
            }
            bool ok = cam.is_object() && get_field(cam, "camera_id", entry.camera_id) &&
                      !entry.camera_id.empty() && get_field(cam, "timestamp", ts) &&
                      get_field(cam, "image", entry.image_url) && !entry.image_url.empty() &&
                      meta && get_field(*meta, "width", entry.width) &&
                      get_field(*meta, "height", entry.height) && entry.width > 0 &&
                      entry.height > 0;
            if (ok) {
                try {
                    entry.image_timestamp = parse_timestamp(ts);
                } catch (const ParseError&) {
                    ok = false;
                }
            }
            if (!ok || !seen.insert(entry.camera_id).second) {
                ++index.warnings;
                continue;
            }
            index.entries.push_back(std::move(entry));
        }
    }
    return index;
}

namespace {

net::Headers auth_headers(const Endpoint& ep) {
    net::Headers h;
    if (!ep.key_header.empty() && !ep.key_value.empty()) h.emplace_back(ep.key_header, ep.key_value);
    return h;
}

Timestamp now_utc() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace

HttpResponse http_get(const std::string& url, const Endpoint& auth) {
    auto reply = net::get(url, auth_headers(auth), auth.timeout);
    return HttpResponse{reply.status, std::move(reply.body)};
}

namespace {

void require_ok(const HttpResponse& res, const std::string& url) {
    if (res.status == 200) return;
    bool retryable = res.status == 429 || res.status >= 500;
    throw TransportError("GET " + url + " returned HTTP " + std::to_string(res.status), retryable);
}

}  // namespace

CameraIndex fetch_index(const Endpoint& endpoint, Timestamp at) {
    std::string url = endpoint.url;
    url += url.find('?') == std::string::npos ? '?' : '&';
    url += "date_time=" + format_timestamp(at);
    auto res = http_get(url, endpoint);
    require_ok(res, url);
    return parse_camera_index(res.body, at);
}

FetchedImage fetch_image(const IndexEntry& entry, const Endpoint& auth) {
    auto res = http_get(entry.image_url, auth);
    require_ok(res, entry.image_url);
    std::vector<std::uint8_t> bytes(res.body.begin(), res.body.end());
    FetchedImage out{make_traffic_image(entry.camera_id, entry.image_timestamp, std::move(bytes),
                                        entry.width, entry.height),
                     now_utc(), entry.image_url};
    return out;
}

// --- archive ---------------------------------------------------------------

namespace {

std::string ledger_line(const ArchiveRecord& r) {
    return join_csv({r.camera_id, format_timestamp(r.image_timestamp), r.content_hash.hex(),
                     format_timestamp(r.fetched_at), r.source_url});
}

}  // namespace

std::vector<ArchiveRecord> read_ledger(const fs::path& ledger_path) {
    std::ifstream in(ledger_path);
    if (!in) throw IoError("cannot open archive ledger " + ledger_path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(ledger_path.string() + ": empty ledger");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kLedgerHeader)
        throw ValidationError(ledger_path.string() + ": unexpected ledger header '" + line + "'");
    std::vector<ArchiveRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 5)
            throw ValidationError(ledger_path.string() + ":" + std::to_string(line_no) +
                                  ": expected 5 fields");
        try {
            out.push_back(ArchiveRecord{f[0], parse_timestamp(f[1]), ContentHash::from_hex(f[2]),
                                        parse_timestamp(f[3]), f[4]});
        } catch (const ParseError& e) {
            throw ValidationError(ledger_path.string() + ":" + std::to_string(line_no) + ": " +
                                  e.what());
        }
    }
    return out;
}

Archive::Archive(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError("cannot create archive at " + root_.string() + ": " + ec.message());
    auto ledger = root_ / kLedgerFile;
    if (fs::exists(ledger)) {
        for (auto& r : read_ledger(ledger)) {
            if (keys_.emplace(r.camera_id, r.content_hash).second) records_.push_back(std::move(r));
        }
    } else {
        std::ofstream out(ledger, std::ios::binary);
        out << kLedgerHeader << '\n';
        if (!out) throw IoError("cannot create ledger " + ledger.string());
    }
}

std::string Archive::relative_image_path(const ArchiveRecord& record) {
    return record.camera_id + "/" + format_timestamp_compact(record.image_timestamp) + "_" +
           record.content_hash.hex().substr(0, 12) + ".jpg";
}

fs::path Archive::image_path(const ArchiveRecord& record) const {
    return root_ / relative_image_path(record);
}

void Archive::append_ledger_line(const ArchiveRecord& record) {
    std::ofstream out(root_ / kLedgerFile, std::ios::binary | std::ios::app);
    out << ledger_line(record) << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to ledger in " + root_.string());
}

InsertOutcome Archive::insert(const FetchedImage& fetched) {
    const auto& img = fetched.image;
    if (!img.encoded) throw ArgumentError("image has no encoded bytes to archive");
    std::lock_guard lock(mutex_);
    if (keys_.count({img.camera_id, img.content_hash})) return InsertOutcome::duplicate;

    ArchiveRecord record{img.camera_id, img.image_timestamp, img.content_hash, fetched.fetched_at,
                         fetched.source_url};
    auto path = image_path(record);
    bool existed = fs::exists(path);
    std::string_view bytes(reinterpret_cast<const char*>(img.encoded->data()), img.encoded->size());
    write_file_atomic(path.string(), bytes);
    try {
        append_ledger_line(record);
    } catch (...) {
        std::error_code ec;
        if (!existed) fs::remove(path, ec);
        throw;
    }
    keys_.emplace(record.camera_id, record.content_hash);
    records_.push_back(std::move(record));
    return InsertOutcome::inserted;
}

std::vector<ArchiveRecord> Archive::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t Archive::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

bool Archive::contains(const std::string& camera_id, const ContentHash& hash) const {
    std::lock_guard lock(mutex_);
    return keys_.count({camera_id, hash}) > 0;
}

// --- campaigns -------------------------------------------------------------

namespace {

/// Runs `task(i)` for i in [0, n) on at most `width` threads.
template <typename Task>
void bounded_for(std::size_t n, std::size_t width, Task&& task) {
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

FetchStats run_campaign(const Endpoint& endpoint, const std::vector<Timestamp>& schedule,
                        const CampaignOptions& options, Archive& archive,
                        const FetchObserver& observer) {
    FetchStats stats;
    std::mutex stats_mutex;
    auto report = [&](const std::string& cam, const std::string& err) {
        if (observer) observer(cam, err);
    };
    for (auto at : schedule) {
        CameraIndex index;
        try {
            index = fetch_index(endpoint, at);
        } catch (const Error& e) {
            ++stats.failed;
            report("", e.what());
            continue;
        }
        stats.index_warnings += index.warnings;
        std::vector<IndexEntry> wanted;
        for (auto& e : index.entries) {
            if (options.camera_ids.empty() ||
                std::find(options.camera_ids.begin(), options.camera_ids.end(), e.camera_id) !=
                    options.camera_ids.end())
                wanted.push_back(e);
        }
        bounded_for(wanted.size(), options.max_in_flight, [&](std::size_t i) {
            const auto& entry = wanted[i];
            try {
                auto fetched = fetch_image(entry, endpoint);
                auto outcome = archive.insert(fetched);
                std::lock_guard lock(stats_mutex);
                ++stats.fetched;
                if (outcome == InsertOutcome::inserted)
                    ++stats.inserted;
                else
                    ++stats.duplicates;
            } catch (const Error& e) {
                {
                    std::lock_guard lock(stats_mutex);
                    ++stats.failed;
                }
                report(entry.camera_id, e.what());
                return;
            }
            report(entry.camera_id, "");
        });
    }
    return stats;
}

std::vector<LoggedResponse> load_fetch_log(const fs::path& path) {
    std::string text = read_text_file(path.string());
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_array())
        throw ParseError(path.string() + ": fetch log lacks a \"responses\" array", 0);
    std::vector<LoggedResponse> out;
    auto base = path.parent_path();
    std::size_t i = 0;
    for (const auto& r : doc["responses"]) {
        LoggedResponse lr;
        std::string ts, fetched, body;
        if (!r.is_object() || !get_field(r, "camera_id", lr.camera_id) ||
            !get_field(r, "image_timestamp", ts) || !get_field(r, "body", body))
            throw ParseError(path.string() + ": response " + std::to_string(i) +
                                 " needs camera_id, image_timestamp and body",
                             0);
        lr.image_timestamp = parse_timestamp(ts);
        lr.fetched_at = get_field(r, "fetched_at", fetched) ? parse_timestamp(fetched)
                                                            : lr.image_timestamp;
        get_field(r, "source_url", lr.source_url);
        get_field(r, "width", lr.width);
        get_field(r, "height", lr.height);
        lr.body_path = fs::path(body).is_absolute() ? fs::path(body) : base / body;
        out.push_back(std::move(lr));
        ++i;
    }
    return out;
}

void write_fetch_log(const fs::path& path, const std::vector<LoggedResponse>& responses) {
    json arr = json::array();
    auto base = path.parent_path();
    for (const auto& r : responses) {
        json o{{"camera_id", r.camera_id},
               {"image_timestamp", format_timestamp(r.image_timestamp)},
               {"fetched_at", format_timestamp(r.fetched_at)},
               {"source_url", r.source_url},
               {"body", fs::relative(r.body_path, base.empty() ? fs::path(".") : base).generic_string()}};
        if (r.width > 0) o["width"] = r.width;
        if (r.height > 0) o["height"] = r.height;
        arr.push_back(std::move(o));
    }
    write_file_atomic(path.string(), json{{"responses", arr}}.dump(1) + "\n");
}

FetchStats replay_fetch_log(const std::vector<LoggedResponse>& responses, Archive& archive,
                            const FetchObserver& observer) {
    FetchStats stats;
    for (const auto& r : responses) {
        try {
            auto bytes = read_file_bytes(r.body_path.string());
            FetchedImage fetched{
                make_traffic_image(r.camera_id, r.image_timestamp, std::move(bytes), r.width,
                                   r.height),
                r.fetched_at, r.source_url};
            ++stats.fetched;
            if (archive.insert(fetched) == InsertOutcome::inserted)
                ++stats.inserted;
            else
                ++stats.duplicates;
        } catch (const Error& e) {
            ++stats.failed;
            if (observer) observer(r.camera_id, e.what());
            continue;
        }
        if (observer) observer(r.camera_id, "");
    }
    return stats;
}

}  // namespace trafficpm::ingest
