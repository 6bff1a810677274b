#include "trafficpm/backend.hpp"

#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "json.hpp"

#include "http_client.hpp"
#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::detection {

using nlohmann::json;

std::string encode_request(const DetectRequest& req) {
    json j{{"image_path", req.image_path}, {"width", req.width}, {"height", req.height}};
    return j.dump();
}

DetectRequest decode_request(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("detector request is not valid JSON: ") + e.what(), e.byte);
    }
    DetectRequest req;
    try {
        req.image_path = j.at("image_path").get<std::string>();
        req.width = j.at("width").get<int>();
        req.height = j.at("height").get<int>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("bad detector request: ") + e.what(), "request");
    }
    return req;
}

namespace {

double number_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ProtocolError(where + "." + key + " must be a number", where + "." + key);
    return it->get<double>();
}

}  // namespace

std::vector<Detection> decode_response(std::string_view line, int image_w, int image_h) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("detector response is not valid JSON: ") + e.what(),
                            "response");
    }
    if (j.is_object() && j.contains("error")) {
        auto msg = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
        throw ProtocolError("detector reported error: " + msg, "error");
    }
    if (!j.is_object() || !j.contains("detections") || !j["detections"].is_array())
        throw ProtocolError("detector response lacks a \"detections\" array", "detections");

    std::vector<Detection> out;
    std::size_t i = 0;
    for (const auto& d : j["detections"]) {
        const std::string where = "detections[" + std::to_string(i++) + "]";
        if (!d.is_object()) throw ProtocolError(where + " must be an object", where);
        auto label = d.find("label");
        if (label == d.end() || !label->is_string())
            throw ProtocolError(where + ".label must be a string", where + ".label");
        double conf = number_field(d, "confidence", where);
        if (!(conf >= 0.0 && conf <= 1.0))
            throw ProtocolError(where + ".confidence " + format_double(conf) + " outside [0,1]",
                                where + ".confidence");
        auto bbox = d.find("bbox");
        if (bbox == d.end() || !bbox->is_array() || bbox->size() != 4)
            throw ProtocolError(where + ".bbox must be [x,y,w,h]", where + ".bbox");
        double v[4];
        for (int k = 0; k < 4; ++k) {
            if (!(*bbox)[k].is_number() || !std::isfinite((*bbox)[k].get<double>()))
                throw ProtocolError(where + ".bbox entries must be finite numbers", where + ".bbox");
            v[k] = (*bbox)[k].get<double>();
        }
        if (v[2] <= 0 || v[3] <= 0)
            throw ProtocolError(where + ".bbox width and height must be positive", where + ".bbox");
        auto clipped = clamp_to_image(BoundingBox{v[0], v[1], v[2], v[3]}, image_w, image_h);
        if (!clipped) continue;
        out.push_back(Detection{*clipped, label_from_string(label->get<std::string>()), conf});
    }
    return out;
}

std::vector<Detection> detect(const DetectRequest& req, DetectorBackend& backend) {
    auto reply = backend.exchange(encode_request(req));
    return decode_response(reply, req.width, req.height);
}

std::vector<Detection> detect(const TrafficImage& image, const std::string& image_path,
                              DetectorBackend& backend) {
    return detect(DetectRequest{image_path, image.width(), image.height()}, backend);
}

// --- mock ------------------------------------------------------------------

MockBackend::MockBackend(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

MockBackend MockBackend::from_fixture_text(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("mock fixture is not valid JSON: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("mock fixture must map image paths to responses", 0);
    std::map<std::string, std::string> responses;
    for (auto it = j.begin(); it != j.end(); ++it) responses.emplace(it.key(), it.value().dump());
    return MockBackend(std::move(responses));
}

MockBackend MockBackend::from_fixture_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("mock fixture not found: " + path.string());
    return from_fixture_text(read_text_file(path.string()));
}

const std::string* MockBackend::lookup(const std::string& path) const {
    if (auto it = responses_.find(path); it != responses_.end()) return &it->second;
    const std::string* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, value] : responses_) {
        if (key.size() >= path.size() || key.size() <= best_len) continue;
        if (path.compare(path.size() - key.size(), key.size(), key) == 0 &&
            path[path.size() - key.size() - 1] == '/') {
            best = &value;
            best_len = key.size();
        }
    }
    return best;
}

std::string MockBackend::exchange(const std::string& request_line) {
    auto req = decode_request(request_line);
    if (const auto* r = lookup(req.image_path)) return *r;
    return R"({"detections":[]})";
}

// --- child process ---------------------------------------------------------

ProcessBackend::ProcessBackend(std::string command) : command_(std::move(command)) {}

ProcessBackend::~ProcessBackend() { stop(); }

void ProcessBackend::start() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw TransportError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    pid_ = pid;
    to_child_ = from_child_ = sv[0];
    pending_.clear();
}

void ProcessBackend::stop() {
    if (pid_ < 0) return;
    ::shutdown(to_child_, SHUT_WR);
    ::close(to_child_);
    to_child_ = from_child_ = -1;
    int status = 0;
    for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            pid_ = -1;
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
}

std::string ProcessBackend::exchange(const std::string& request_line) {
    std::lock_guard lock(mutex_);
    if (pid_ < 0) start();
    std::string out = request_line + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
        auto n = ::send(to_child_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            stop();
            throw TransportError("detector process '" + command_ + "' stopped accepting requests");
        }
        sent += static_cast<std::size_t>(n);
    }
    for (;;) {
        if (auto nl = pending_.find('\n'); nl != std::string::npos) {
            std::string line = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return line;
        }
        char buf[4096];
        auto n = ::recv(from_child_, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            stop();
            throw TransportError("detector process '" + command_ + "' closed its output");
        }
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

// --- http ------------------------------------------------------------------

HttpBackend::HttpBackend(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    net::split_url(base_url_);
}

std::string HttpBackend::exchange(const std::string& request_line) {
    auto reply = net::post(base_url_ + "/detect", request_line, "application/json", timeout_);
    if (reply.status != 200) {
        // Error objects still travel as protocol replies when the body is JSON.
        if (!reply.body.empty() && reply.body.front() == '{') return reply.body;
        throw TransportError("detector service returned HTTP " + std::to_string(reply.status),
                             reply.status >= 500);
    }
    return reply.body;
}

std::unique_ptr<DetectorBackend> make_backend(const std::string& spec,
                                              const std::filesystem::path& base_dir) {
    if (spec.rfind("mock:", 0) == 0) {
        std::filesystem::path p = spec.substr(5);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return std::make_unique<MockBackend>(MockBackend::from_fixture_file(p));
    }
    if (spec.rfind("process:", 0) == 0) {
        auto cmd = spec.substr(8);
        if (cmd.empty()) throw ArgumentError("process backend needs a command");
        return std::make_unique<ProcessBackend>(cmd);
    }
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
        return std::make_unique<HttpBackend>(spec);
    throw ArgumentError("unrecognised backend spec '" + spec +
                        "' (expected mock:<file>, process:<cmd> or an http URL)");
}

}  // namespace trafficpm::detection
