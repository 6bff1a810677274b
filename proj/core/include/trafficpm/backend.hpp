#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "trafficpm/detection.hpp"
#include "trafficpm/image.hpp"

namespace trafficpm::detection {

/// One detector request: which file to look at and its declared size.
struct DetectRequest {
    std::string image_path;
    int width = 0;
    int height = 0;
};

/// `{"image_path":"...","width":W,"height":H}` on a single line.
std::string encode_request(const DetectRequest& req);
DetectRequest decode_request(std::string_view line);

/// A transport that carries one protocol line out and one back.
class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;

    /// Sends a request line and returns the raw response line. Throws
    /// TransportError when the backend cannot be reached.
    virtual std::string exchange(const std::string& request_line) = 0;

    virtual std::string describe() const = 0;
};

/// Parses and validates a response line against the request's image.
/// Confidence outside [0,1], non-positive extents or a wrong shape raise
/// ProtocolError naming the field; unknown labels become `other`; boxes are
/// clipped to the image and dropped when nothing remains.
std::vector<Detection> decode_response(std::string_view line, int image_w, int image_h);

std::vector<Detection> detect(const DetectRequest& req, DetectorBackend& backend);

/// Convenience overload: the image supplies the declared size.
std::vector<Detection> detect(const TrafficImage& image, const std::string& image_path,
                              DetectorBackend& backend);

/// Scripted backend. The fixture maps image paths to response objects:
/// {"<path>": {"detections":[...]}, ...}. A request path matches a key when
/// equal to it or when the key is a trailing run of whole path components,
/// so fixtures can use archive-relative keys. Immutable after construction.
class MockBackend final : public DetectorBackend {
public:
    explicit MockBackend(std::map<std::string, std::string> responses);

    static MockBackend from_fixture_text(std::string_view json_text);
    static MockBackend from_fixture_file(const std::filesystem::path& path);

    std::string exchange(const std::string& request_line) override;
    std::string describe() const override { return "mock"; }

private:
    const std::string* lookup(const std::string& path) const;

    std::map<std::string, std::string> responses_;
};

/// Child process speaking newline-delimited JSON on stdin/stdout. One
/// request is in flight at a time.
class ProcessBackend final : public DetectorBackend {
public:
    explicit ProcessBackend(std::string command);
    ~ProcessBackend() override;

    ProcessBackend(const ProcessBackend&) = delete;
    ProcessBackend& operator=(const ProcessBackend&) = delete;

    std::string exchange(const std::string& request_line) override;
    std::string describe() const override { return "process:" + command_; }

private:
    void start();
    void stop();

    std::string command_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
};

/// POSTs each request to `<base_url>/detect`.
class HttpBackend final : public DetectorBackend {
public:
    explicit HttpBackend(std::string base_url,
                         std::chrono::seconds timeout = std::chrono::seconds{120});

    std::string exchange(const std::string& request_line) override;
    std::string describe() const override { return base_url_; }

private:
    std::string base_url_;
    std::chrono::seconds timeout_;
};

/// `mock:<fixture.json>`, `process:<shell command>`, or an http(s) URL.
/// Relative mock paths resolve against `base_dir`.
std::unique_ptr<DetectorBackend> make_backend(const std::string& spec,
                                              const std::filesystem::path& base_dir = {});

}  // namespace trafficpm::detection
