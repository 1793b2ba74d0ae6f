//
// Copyright 2026 The NameShift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <stdexcept>
#include <string>

namespace nameshift {

// Malformed input files (bad JSON, bad enum values, missing fields).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a data invariant (span out of
// bounds, duplicate id, gold/task mismatch).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration (bad parameter ranges, missing files,
// incompatible oracle/task combinations).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Oracle backend failure. `partial_results` is set when a long-running
// pipeline already produced usable per-instance results before the failure.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& what, bool partial_results = false)
      : std::runtime_error(what), partial_results_(partial_results) {}

  bool partial_results() const { return partial_results_; }

 private:
  bool partial_results_;
};

}  // namespace nameshift
