#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trafficpm/image.hpp"
#include "trafficpm/time.hpp"

namespace trafficpm::ingest {

inline constexpr std::chrono::seconds kDefaultInterval{300};
inline constexpr std::chrono::seconds kMinInterval{60};

/// Request times from + k*interval inside [from, to).
std::vector<Timestamp> plan_schedule(Timestamp from, Timestamp to,
                                     std::chrono::seconds interval = kDefaultInterval);

struct IndexEntry {
    std::string camera_id;
    Timestamp image_timestamp;
    std::string image_url;
    int width = 0;
    int height = 0;

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct CameraIndex {
    Timestamp retrieved_at;
    std::vector<IndexEntry> entries;
    /// Entries dropped for missing fields, bad dimensions or repeated ids.
    std::size_t warnings = 0;
};

/// Parses the repository's camera-index payload. Syntax errors carry the
/// byte offset; a payload without an `items` array is a ParseError at 0.
CameraIndex parse_camera_index(std::string_view payload, Timestamp fallback_retrieved_at);

/// Where the image repository lives and how to authenticate.
struct Endpoint {
    std::string url;
    /// Header to carry the key, e.g. `api-key`. Empty disables auth.
    std::string key_header;
    std::string key_value;
    std::chrono::seconds timeout{30};
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// GET `url`. Throws TransportError when no response arrives.
HttpResponse http_get(const std::string& url, const Endpoint& auth);

/// Asks the repository for the camera index as of `at`.
CameraIndex fetch_index(const Endpoint& endpoint, Timestamp at);

struct FetchedImage {
    TrafficImage image;
    Timestamp fetched_at;
    std::string source_url;
};

/// Downloads one entry's image. The hash covers the raw response body.
FetchedImage fetch_image(const IndexEntry& entry, const Endpoint& auth);

struct ArchiveRecord {
    std::string camera_id;
    Timestamp image_timestamp;
    ContentHash content_hash;
    Timestamp fetched_at;
    std::string source_url;

    friend bool operator==(const ArchiveRecord&, const ArchiveRecord&) = default;
};

enum class InsertOutcome { inserted, duplicate };

inline constexpr std::string_view kLedgerHeader =
    "camera_id,image_timestamp,content_hash,fetched_at,source_url";
inline constexpr std::string_view kLedgerFile = "archive.csv";

/// Directory-backed image archive: an append-only ledger plus one JPEG per
/// unique (camera, content hash). Inserts are serialized internally.
class Archive {
public:
    /// Opens (creating if needed) the archive rooted at `root`, replaying
    /// the ledger to rebuild the dedup index.
    explicit Archive(std::filesystem::path root);

    Archive(const Archive&) = delete;
    Archive& operator=(const Archive&) = delete;

    InsertOutcome insert(const FetchedImage& fetched);

    std::vector<ArchiveRecord> records() const;
    std::size_t size() const;
    bool contains(const std::string& camera_id, const ContentHash& hash) const;

    const std::filesystem::path& root() const { return root_; }

    /// `<camera_id>/<compact timestamp>_<first 12 hash digits>.jpg`
    static std::string relative_image_path(const ArchiveRecord& record);
    std::filesystem::path image_path(const ArchiveRecord& record) const;

private:
    void append_ledger_line(const ArchiveRecord& record);

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::vector<ArchiveRecord> records_;
    std::set<std::pair<std::string, ContentHash>> keys_;
};

std::vector<ArchiveRecord> read_ledger(const std::filesystem::path& ledger_path);

struct FetchStats {
    std::size_t fetched = 0;
    std::size_t inserted = 0;
    std::size_t duplicates = 0;
    std::size_t failed = 0;
    std::size_t index_warnings = 0;

    friend bool operator==(const FetchStats&, const FetchStats&) = default;
};

/// Called once per completed or failed item; `error` is empty on success.
using FetchObserver = std::function<void(const std::string& camera_id, const std::string& error)>;

struct CampaignOptions {
    std::vector<std::string> camera_ids;  // empty means every camera in the index
    std::size_t max_in_flight = 4;
};

/// Polls the index at each scheduled time and archives every camera's
/// image. Failures of single cameras or single polls are counted, not
/// thrown.
FetchStats run_campaign(const Endpoint& endpoint, const std::vector<Timestamp>& schedule,
                        const CampaignOptions& options, Archive& archive,
                        const FetchObserver& observer = {});

/// One recorded repository response, as stored in a fetch log.
struct LoggedResponse {
    std::string camera_id;
    Timestamp image_timestamp;
    Timestamp fetched_at;
    std::string source_url;
    std::filesystem::path body_path;
    int width = 0;
    int height = 0;
};

/// Fetch log JSON: {"responses":[{"camera_id","image_timestamp","fetched_at",
/// "source_url","body","width","height"}]}; `body` is relative to the log
/// file, width/height optional.
std::vector<LoggedResponse> load_fetch_log(const std::filesystem::path& path);

void write_fetch_log(const std::filesystem::path& path, const std::vector<LoggedResponse>& responses);

/// Feeds recorded responses through the same decode/verify/dedup path as a
/// live fetch.
FetchStats replay_fetch_log(const std::vector<LoggedResponse>& responses, Archive& archive,
                            const FetchObserver& observer = {});

}  // namespace trafficpm::ingest
