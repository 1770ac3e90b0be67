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

#ifndef DISCHARGEGEN_ERRORS_HPP
#define DISCHARGEGEN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dischargegen {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kParse,       // malformed input record or file
  kValidation,  // well-formed input violating an invariant
  kNetwork,     // transport failure after retries were exhausted
  kProtocol,    // remote peer answered with something we cannot accept
  kConfig,
  kTemplate,
  kUnbuildable,
  kAggregation,
  kContextOverflow,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// A single corpus record failed validation.
class RecordError : public Error {
 public:
  RecordError(std::size_t line, std::string field, const std::string& what)
      : Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class DuplicateIdError : public Error {
 public:
  DuplicateIdError(std::string hadm_id, std::size_t first_line,
                   std::size_t second_line)
      : Error(ErrorKind::kValidation,
              "duplicate hadm_id \"" + hadm_id + "\" on lines " +
                  std::to_string(first_line) + " and " +
                  std::to_string(second_line)),
        hadm_id_(std::move(hadm_id)),
        first_line_(first_line),
        second_line_(second_line) {}

  const std::string& hadm_id() const { return hadm_id_; }
  std::size_t first_line() const { return first_line_; }
  std::size_t second_line() const { return second_line_; }

 private:
  std::string hadm_id_;
  std::size_t first_line_;
  std::size_t second_line_;
};

// Failure talking to a remote service. `retryable` is false once the retry
// budget is spent or when the peer's answer can never succeed.
class RemoteError : public Error {
 public:
  RemoteError(ErrorKind kind, const std::string& message, int retries,
              int http_status = 0)
      : Error(kind, message), retries_(retries), http_status_(http_status) {}

  int retries() const { return retries_; }
  int http_status() const { return http_status_; }

 private:
  int retries_;
  int http_status_;
};

}  // namespace dischargegen

#endif  // DISCHARGEGEN_ERRORS_HPP
