// Copyright 2026 The moralkit Authors
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

#include "moralkit/errors.hpp"

namespace moralkit
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidTau: return "InvalidTau";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyCoarseSet: return "EmptyCoarseSet";
    case ErrorCode::EmptyFeatures: return "EmptyFeatures";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string & message)
: std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message)
{
}

void fail(ErrorCode code, const std::string & message) { throw Error(code, message); }

}  // namespace moralkit
