#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace trafficpm::net {

struct Reply {
    int status = 0;
    std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// Both throw TransportError when the request cannot complete at all; HTTP
/// error statuses come back in the Reply.
Reply get(const std::string& url, const Headers& headers, std::chrono::seconds timeout);
Reply post(const std::string& url, const std::string& body, const std::string& content_type,
           std::chrono::seconds timeout);

/// Splits `scheme://host[:port]/path?query` into origin and path+query.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace trafficpm::net
