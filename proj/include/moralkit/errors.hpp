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

#ifndef MORALKIT__ERRORS_HPP_
#define MORALKIT__ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace moralkit
{

enum class ErrorCode
{
  DegeneratePoint,
  DegenerateInput,
  InvalidConfig,
  InvalidAlpha,
  InvalidTau,
  TooFewPoints,
  EmptyCoarseSet,
  EmptyFeatures,
  EmptyDataset,
  ShapeMismatch,
  LengthMismatch,
  Io,
  Parse,
  VersionMismatch,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & message);

  ErrorCode code() const noexcept { return code_; }
  /// Text without the code prefix.
  const std::string & message() const noexcept { return message_; }

private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string & message);

}  // namespace moralkit

#endif  // MORALKIT__ERRORS_HPP_
