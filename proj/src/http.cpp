// Copyright 2026 The dischargegen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "http.hpp"

#include <charconv>
#include <thread>

#include "errors.hpp"
#include "httplib.h"

namespace dischargegen::http {

Endpoint Endpoint::parse(std::string_view url, std::string_view default_path) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw Error(ErrorKind::kConfig,
                "endpoint must start with http://: " + std::string(url));
  }
  url.remove_prefix(kScheme.size());
  Endpoint e;
  const std::size_t slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  e.path = slash == std::string_view::npos ? std::string(default_path)
                                           : std::string(url.substr(slash));
  if (e.path == "/" && !default_path.empty()) e.path = default_path;
  const std::size_t colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    std::string_view port = authority.substr(colon + 1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc() || ptr != port.data() + port.size() || value <= 0 ||
        value > 65535) {
      throw Error(ErrorKind::kConfig, "bad port in endpoint: " + std::string(port));
    }
    e.port = value;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) {
    throw Error(ErrorKind::kConfig, "endpoint has no host");
  }
  e.host = std::string(authority);
  return e;
}

std::string Endpoint::url() const {
  return "http://" + host + ":" + std::to_string(port) + path;
}

namespace {

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

PostResult post_json(const Endpoint& endpoint, const nlohmann::json& payload,
                     const RetryPolicy& policy) {
  const std::string body = payload.dump();
  auto backoff = policy.initial_backoff;
  std::string last_failure;
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(endpoint.host, endpoint.port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        policy.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(endpoint.path, body, "application/json");
    if (res && res->status == 200) {
      PostResult out;
      out.retries = attempt;
      try {
        out.body = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error&) {
        throw RemoteError(ErrorKind::kProtocol,
                          endpoint.url() + " returned a non-JSON body", attempt,
                          200);
      }
      return out;
    }
    if (res && res->status == 413) {
      throw RemoteError(ErrorKind::kContextOverflow,
                        endpoint.url() + " rejected the request: context overflow",
                        attempt, 413);
    }
    if (res && !retryable_status(res->status)) {
      throw RemoteError(ErrorKind::kProtocol,
                        endpoint.url() + " answered HTTP " +
                            std::to_string(res->status),
                        attempt, res->status);
    }
    last_failure = res ? "HTTP " + std::to_string(res->status)
                       : httplib::to_string(res.error());
    if (attempt >= policy.max_retries) {
      throw RemoteError(ErrorKind::kNetwork,
                        endpoint.url() + " failed after " +
                            std::to_string(attempt) + " retries: " + last_failure,
                        attempt, res ? res->status : 0);
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace dischargegen::http
