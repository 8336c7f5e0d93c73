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

#ifndef MORALKIT_TESTS__GRADIENT_SUITE_HPP_
#define MORALKIT_TESTS__GRADIENT_SUITE_HPP_

#include "support.hpp"

#include <string>
#include <vector>

namespace moralkit::testing
{

struct LayerCheck
{
  std::string layer;
  GradCheckResult params;
  GradCheckResult inputs;  // checked = 0 when the layer has no input gradient to test
};

inline constexpr std::size_t kGradSamples = 64;
inline constexpr double kGradTolerance = 1e-3;

/// Finite-difference checks of every trainable layer, from single linear
/// layers up to the full fused detector.
std::vector<LayerCheck> run_gradient_suite(std::uint64_t seed = 7);

}  // namespace moralkit::testing

#endif  // MORALKIT_TESTS__GRADIENT_SUITE_HPP_
