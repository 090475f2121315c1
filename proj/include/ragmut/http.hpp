#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>

#include <httplib.h>

#include "ragmut/error.hpp"

namespace ragmut::http {

/// Error raised when a request cannot be completed at the transport level
/// or returns a non-success status.
class HttpError : public Error {
public:
    HttpError(const std::string& what, int status) : Error(what), status_(status) {}

    /// HTTP status, or 0 when no response was received.
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct Url {
    std::string origin; // scheme://host[:port]
    std::string path;   // always starts with '/'
};

inline Url parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint URL needs a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error("unsupported URL scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    Url u;
    u.origin = url.substr(0, path_start);
    u.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (u.origin.size() <= scheme_end + 3) throw Error("endpoint URL has no host: " + url);
    return u;
}

/// Joins a base path and a relative route, avoiding doubled slashes.
inline std::string join_path(std::string base, const std::string& route) {
    while (!base.empty() && base.back() == '/') base.pop_back();
    return base + (route.empty() || route.front() == '/' ? route : "/" + route);
}

struct Response {
    int status = 0;
    std::string body;
};

/// POSTs a JSON body. Transport failures raise HttpError with status 0; any
/// HTTP status is returned to the caller.
inline Response post_json(const std::string& url, const std::string& body, std::chrono::milliseconds timeout,
                          const std::optional<std::string>& bearer = std::nullopt) {
    const auto u = parse_url(url);
    httplib::Client client(u.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (bearer && !bearer->empty()) headers.emplace("Authorization", "Bearer " + *bearer);
    auto res = client.Post(u.path, headers, body, "application/json");
    if (!res) throw HttpError("request to " + url + " failed: " + httplib::to_string(res.error()), 0);
    return {res->status, res->body};
}

} // namespace ragmut::http
