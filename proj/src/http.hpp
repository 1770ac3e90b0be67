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

#ifndef DISCHARGEGEN_HTTP_HPP
#define DISCHARGEGEN_HTTP_HPP

#include <chrono>
#include <string>
#include <string_view>

#include "json.hpp"

namespace dischargegen::http {

// Plain-HTTP service address: http://host[:port][/path].
struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";

  // `default_path` is used when the URL carries no path.
  static Endpoint parse(std::string_view url, std::string_view default_path);
  std::string url() const;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{100};  // doubles per retry
  std::chrono::milliseconds timeout{30000};
};

struct PostResult {
  nlohmann::json body;
  int retries = 0;
};

// POSTs `payload` as application/json and parses the JSON answer.
//
// Transport failures, timeouts and 408/429/5xx answers are retried with
// exponential backoff. Exhausting the budget throws RemoteError(kNetwork).
// 413 throws RemoteError(kContextOverflow); other non-200 answers and
// unparsable bodies throw RemoteError(kProtocol). None of those are retried.
PostResult post_json(const Endpoint& endpoint, const nlohmann::json& payload,
                     const RetryPolicy& policy);

}  // namespace dischargegen::http

#endif  // DISCHARGEGEN_HTTP_HPP
