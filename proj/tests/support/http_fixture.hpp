#pragma once

// Must match the library's build of httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <string>
#include <thread>

namespace trafficpm::tsup {

/// httplib server on an ephemeral loopback port. Register handlers on
/// `server` before calling start().
class LocalServer {
public:
    LocalServer() = default;
    ~LocalServer() {
        server.stop();
        if (thread_.joinable()) thread_.join();
    }
    LocalServer(const LocalServer&) = delete;
    LocalServer& operator=(const LocalServer&) = delete;

    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

}  // namespace trafficpm::tsup
