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

#include "support.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/ground_filter.hpp"
#include "moralkit/scene.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace moralkit
{
namespace
{

double angle_deg(const Vec3 & a, const Vec3 & b)
{
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0)) * 180.0 / std::numbers::pi;
}

TEST(Ransac, PerfectPlane)
{
  Rng rng(1);
  std::vector<Vec3> pts;
  for (int k = 0; k < 100; ++k) {
    pts.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0);
  }
  const auto r = ransac_plane(pts, 50, 0.1, 0);
  EXPECT_NEAR(std::abs(r.plane.normal.z()), 1.0, 1e-12);
  EXPECT_NEAR(r.plane.offset, 0.0, 1e-12);
  EXPECT_EQ(r.inlier_count, 100u);
  EXPECT_NEAR(r.plane.normal.norm(), 1.0, 1e-9);
}

TEST(Ransac, DegenerateInputs)
{
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  try {
    ransac_plane(two, 10, 0.1, 0);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
  std::vector<Vec3> line;
  for (int k = 0; k < 20; ++k) {
    line.emplace_back(k, 2.0 * k, -k);
  }
  EXPECT_THROW(ransac_plane(line, 10, 0.1, 0), Error);
}

TEST(Ransac, NoisyPlaneAgreesWithLeastSquares)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, "ransac-test");
    std::vector<Vec3> pts, ground;
    for (int k = 0; k < 200; ++k) {
      ground.emplace_back(rng.uniform(-15, 15), rng.uniform(-15, 15), 0.02 * rng.normal());
    }
    pts = ground;
    for (int k = 0; k < 50; ++k) {
      pts.emplace_back(rng.uniform(-15, 15), rng.uniform(-15, 15), 2.0);
    }
    const auto r = ransac_plane(pts, 200, 0.1, seed);
    EXPECT_LT(angle_deg(r.plane.normal, Vec3::UnitZ()), 1.0);
    EXPECT_LT(std::abs(r.plane.offset), 0.05);
    EXPECT_GE(r.inlier_count, 190u);

    Vec3 n;
    double d = 0.0;
    testing::fit_plane(ground, n, d);
    EXPECT_LT(angle_deg(r.plane.normal, n), 1.0);
    EXPECT_LT(std::abs(r.plane.offset - d), 0.05);
  }
}

TEST(Ransac, DeterministicAndMaskConsistent)
{
  Rng rng(3);
  std::vector<Vec3> pts;
  for (int k = 0; k < 300; ++k) {
    pts.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.bernoulli(0.7) ? 0.05 * rng.normal() : rng.uniform(0, 3));
  }
  const auto a = ransac_plane(pts, 100, 0.1, 9);
  const auto b = ransac_plane(pts, 100, 0.1, 9);
  EXPECT_EQ(a.inlier_mask, b.inlier_mask);
  EXPECT_EQ(a.plane.normal, b.plane.normal);
  std::size_t count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool in = std::abs(a.plane.signed_distance(pts[i])) <= 0.1;
    ASSERT_EQ(a.inlier_mask[i] != 0, in);
    count += in;
  }
  EXPECT_EQ(count, a.inlier_count);
}

TEST(RemoveGround, FlatPlaneIsRemoved)
{
  Rng rng(2);
  LidarCloud cloud;
  for (int k = 0; k < 500; ++k) {
    cloud.push_back({rng.uniform(0, 30), rng.uniform(-10, 10), 0.0, 0.1});
  }
  const auto r = remove_ground(cloud);
  EXPECT_FALSE(r.no_ground_found);
  EXPECT_TRUE(r.cloud.empty());
}

TEST(RemoveGround, NoGroundLeavesCloudUnchanged)
{
  Rng rng(2);
  LidarCloud cloud;
  for (int k = 0; k < 200; ++k) {
    cloud.push_back({10.0 + rng.normal() * 0.3, rng.normal() * 0.3, 1.5 + rng.normal() * 0.3, 0.5});
  }
  const auto r = remove_ground(cloud);
  EXPECT_TRUE(r.no_ground_found);
  ASSERT_EQ(r.cloud.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(r.kept[i], i);
    EXPECT_EQ(r.cloud[i].z, cloud[i].z);
  }
  EXPECT_THROW(remove_ground(LidarCloud{}), Error);
}

TEST(RemoveGround, SimulatedScenes)
{
  const TaskConfig task;
  for (int index = 0; index < 4; ++index) {
    const auto seq = simulate(make_task_scene(task, 0, index));
    for (const auto & frame : seq.frames) {
      const auto r = remove_ground(frame.lidar);
      std::vector<std::uint8_t> kept(frame.lidar.size(), 0);
      for (std::size_t i = 0; i < r.kept.size(); ++i) {
        kept[r.kept[i]] = 1;
        // survivors are untouched copies
        ASSERT_EQ(r.cloud[i].x, frame.lidar[r.kept[i]].x);
        ASSERT_EQ(r.cloud[i].z, frame.lidar[r.kept[i]].z);
        if (i > 0) {
          ASSERT_GT(r.kept[i], r.kept[i - 1]);
        }
      }
      std::size_t ground = 0, ground_removed = 0, object = 0, object_removed = 0;
      for (std::size_t i = 0; i < frame.lidar.size(); ++i) {
        if (frame.lidar_source[i] == kSourceGround) {
          ++ground;
          ground_removed += kept[i] == 0;
        } else if (frame.lidar_source[i] >= 0) {
          ++object;
          object_removed += kept[i] == 0;
        }
      }
      EXPECT_GE(static_cast<double>(ground_removed), 0.95 * ground);
      EXPECT_LE(static_cast<double>(object_removed), 0.02 * object);

      const auto again = remove_ground(r.cloud);
      EXPECT_LE(static_cast<double>(r.cloud.size() - again.cloud.size()), 0.01 * r.cloud.size());
    }
  }
}

TEST(RemoveGround, NeverRemovesHighPoints)
{
  Rng rng(6);
  LidarCloud cloud;
  for (int k = 0; k < 400; ++k) {
    cloud.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), 0.01 * rng.normal(), 0.1});
  }
  for (int k = 0; k < 40; ++k) {
    cloud.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.8, 2.0), 0.5});
  }
  // every point is an inlier of both stages and below the margin
  GroundFilterParams params;
  params.coarse_tolerance = 3.0;
  params.fine_tolerance = 3.0;
  params.height_margin = 3.0;
  params.max_tilt_deg = 1.0;
  params.max_ground_offset = 0.05;
  const auto r = remove_ground(cloud, params);
  for (const auto & p : r.cloud) {
    EXPECT_GT(p.z, 0.5);
  }
  EXPECT_EQ(r.cloud.size(), 40u);
}

}  // namespace
}  // namespace moralkit
