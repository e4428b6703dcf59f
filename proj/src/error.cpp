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

#include "nsgp/error.hpp"

namespace nsgp {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kBandwidthMismatch: return "BandwidthMismatch";
    case ErrorCode::kSingular: return "Singular";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kOutOfBand: return "OutOfBand";
    case ErrorCode::kMultiSiteDiff: return "MultiSiteDiff";
    case ErrorCode::kWrongKind: return "WrongKind";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kNonFiniteLogPost: return "NonFiniteLogPost";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kOutOfHull: return "OutOfHull";
    case ErrorCode::kDegenerateChain: return "DegenerateChain";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace nsgp
