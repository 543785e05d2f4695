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

#include "common/error.hpp"

namespace h2r {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidToken: return "InvalidToken";
    case ErrorCode::kInvalidLabel: return "InvalidLabel";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kMalformedScene: return "MalformedScene";
    case ErrorCode::kNotApplicable: return "NotApplicable";
    case ErrorCode::kEmptyHistogram: return "EmptyHistogram";
    case ErrorCode::kBadRange: return "BadRange";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kNoRecords: return "NoRecords";
    case ErrorCode::kDegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedData: return "MalformedData";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::kUsage: return "Usage";
  }
  return "Unknown";
}

}  // namespace h2r
