// Copyright 2026 The Valuerank Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace valuerank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An item id was referenced but has no utility or record.
class MissingItem : public Error {
 public:
  explicit MissingItem(const std::string& id)
      : Error("missing item id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

/// A persisted file violates its schema. Carries the 1-based line and field.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A judge reply could not be parsed into a verdict.
class MalformedVerdict : public Error {
 public:
  using Error::Error;
};

/// A judge could not be reached after all retries.
class JudgeUnavailable : public Error {
 public:
  using Error::Error;
};

/// A window was dropped because the judge kept replying with malformed verdicts.
class WindowDiscarded : public Error {
 public:
  using Error::Error;
};

/// Every window of an intensity evaluation was discarded.
class EvaluationFailed : public Error {
 public:
  using Error::Error;
};

/// Blending or adjudicating an entry in a state that forbids it.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace valuerank
