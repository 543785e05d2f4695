// Copyright 2026 The h2rat Authors. All Rights Reserved.
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

namespace h2r {

enum class ErrorCode {
  kShapeMismatch,
  kInvalidToken,
  kInvalidLabel,
  kEmptyDataset,
  kOutOfBounds,
  kMalformedScene,
  kNotApplicable,
  kEmptyHistogram,
  kBadRange,
  kEmptySample,
  kNoRecords,
  kDegenerateBaseline,
  kInfeasible,
  kIo,
  kMalformedData,
  kCheckpointMismatch,
  kUsage,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the core library carries one of the codes above so
// the C boundary can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace h2r
