#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "http_client.hpp"

#include "trafficpm/error.hpp"

namespace trafficpm::net {

std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ArgumentError("URL lacks a scheme: " + url);
    auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ArgumentError("unsupported URL scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

httplib::Client make_client(const std::string& origin, std::chrono::seconds timeout) {
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_follow_location(true);
    return client;
}

[[noreturn]] void transport_failure(const std::string& url, httplib::Error err) {
    throw TransportError("request to " + url + " failed: " + httplib::to_string(err));
}

}  // namespace

Reply get(const std::string& url, const Headers& headers, std::chrono::seconds timeout) {
    auto [origin, path] = split_url(url);
    auto client = make_client(origin, timeout);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Get(path, hdrs);
    if (!res) transport_failure(url, res.error());
    return Reply{res->status, std::move(res->body)};
}

Reply post(const std::string& url, const std::string& body, const std::string& content_type,
           std::chrono::seconds timeout) {
    auto [origin, path] = split_url(url);
    auto client = make_client(origin, timeout);
    auto res = client.Post(path, body, content_type);
    if (!res) transport_failure(url, res.error());
    return Reply{res->status, std::move(res->body)};
}

}  // namespace trafficpm::net
