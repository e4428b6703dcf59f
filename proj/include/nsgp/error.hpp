// Copyright 2026 The nsgp Authors
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

#ifndef NSGP_ERROR_HPP
#define NSGP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nsgp {

// Values are part of the C ABI (see nsgp.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kNotPositiveDefinite = 1,
  kBandwidthMismatch = 2,
  kSingular = 3,
  kDimensionMismatch = 4,
  kOutOfBand = 5,
  kMultiSiteDiff = 6,
  kWrongKind = 7,
  kKindMismatch = 8,
  kInvalidRange = 9,
  kNonFiniteLogPost = 10,
  kConfigError = 11,
  kOutOfHull = 12,
  kDegenerateChain = 13,
  kIoError = 14,
  kParseError = 15,
  kInvalidArgument = 16,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace nsgp

#endif  // NSGP_ERROR_HPP
