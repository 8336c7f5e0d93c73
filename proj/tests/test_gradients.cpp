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

#include "gradient_suite.hpp"

#include <gtest/gtest.h>

namespace moralkit::testing
{
namespace
{

TEST(Gradients, EveryLayerMatchesCentralDifferences)
{
  const auto checks = run_gradient_suite();
  ASSERT_GE(checks.size(), 16u);
  for (const auto & c : checks) {
    SCOPED_TRACE(c.layer);
    EXPECT_GE(c.params.checked, 50u);
    EXPECT_EQ(c.params.failed, 0u) << "worst " << c.params.worst_name << " rel " << c.params.worst_relative;
    EXPECT_EQ(c.inputs.failed, 0u) << "worst " << c.inputs.worst_name << " rel " << c.inputs.worst_relative;
  }
}

TEST(Gradients, SuiteIsSeedIndependent)
{
  for (std::uint64_t seed : {11u, 12u}) {
    for (const auto & c : run_gradient_suite(seed)) {
      SCOPED_TRACE(c.layer + " seed " + std::to_string(seed));
      EXPECT_EQ(c.params.failed, 0u) << "worst " << c.params.worst_name << " rel " << c.params.worst_relative;
      EXPECT_EQ(c.inputs.failed, 0u) << "worst " << c.inputs.worst_name << " rel " << c.inputs.worst_relative;
    }
  }
}

}  // namespace
}  // namespace moralkit::testing
