// Copyright 2025 The shuffledp Authors
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
#ifndef SHUFFLEDP_ERRORS_H_
#define SHUFFLEDP_ERRORS_H_

#include <stdexcept>
#include <string>

namespace shuffledp {

// A stated precondition of an operation does not hold. The message names the
// violated inequality, e.g. "14*log(4/delta) <= lambda".
class PreconditionError : public std::domain_error {
 public:
  explicit PreconditionError(const std::string& what)
      : std::domain_error(what) {}
};

// A target value cannot be reached within the validity window of the chosen
// method. The message includes the feasible range.
class InfeasibleError : public std::domain_error {
 public:
  InfeasibleError(const std::string& what, double feasible_lo,
                  double feasible_hi)
      : std::domain_error(what + " (feasible range [" +
                          std::to_string(feasible_lo) + ", " +
                          std::to_string(feasible_hi) + "])"),
        feasible_lo(feasible_lo),
        feasible_hi(feasible_hi) {}

  double feasible_lo;
  double feasible_hi;
};

// Structurally malformed data: mismatched lengths, mixed report arity.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. Carries the byte offset where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t offset)
      : std::runtime_error(what + " (at byte offset " +
                           std::to_string(offset) + ")"),
        offset(offset) {}

  size_t offset;
};

// A report was addressed to a channel that was never declared.
class RoutingError : public std::runtime_error {
 public:
  explicit RoutingError(const std::string& what) : std::runtime_error(what) {}
};

// Release was requested from a channel holding no reports.
class EmptyReleaseError : public std::runtime_error {
 public:
  explicit EmptyReleaseError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace shuffledp

#endif  // SHUFFLEDP_ERRORS_H_
