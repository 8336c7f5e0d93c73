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
#include "moralkit/frame_io.hpp"
#include "moralkit/geometry.hpp"
#include "moralkit/scene.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

namespace moralkit
{
namespace
{

SceneConfig clutter_only()
{
  SceneConfig c;
  c.n_frames = 5;
  c.clutter_rate = 100;
  c.seed = 3;
  return c;
}

bool identical(const FrameSequence & a, const FrameSequence & b)
{
  if (a.frames.size() != b.frames.size()) {
    return false;
  }
  for (std::size_t f = 0; f < a.frames.size(); ++f) {
    const auto & x = a.frames[f];
    const auto & y = b.frames[f];
    if (x.radar.size() != y.radar.size() || x.lidar.size() != y.lidar.size() ||
        x.motion_labels != y.motion_labels || x.boxes.size() != y.boxes.size()) {
      return false;
    }
    if (std::memcmp(x.radar.data(), y.radar.data(), x.radar.size() * sizeof(RadarPoint)) != 0 ||
        std::memcmp(x.lidar.data(), y.lidar.data(), x.lidar.size() * sizeof(LidarPoint)) != 0) {
      return false;
    }
    for (std::size_t k = 0; k < x.boxes.size(); ++k) {
      if (x.boxes[k].center != y.boxes[k].center || x.boxes[k].yaw != y.boxes[k].yaw) {
        return false;
      }
    }
  }
  return true;
}

TEST(RadarProject, Examples)
{
  auto r = radar_project(Vec3(10, 0, 0), Vec3(5, 0, 0), Vec3::Zero());
  EXPECT_DOUBLE_EQ(r.v_abs, 5.0);
  EXPECT_DOUBLE_EQ(r.v_rel, 5.0);
  r = radar_project(Vec3(0, 10, 0), Vec3(5, 0, 0), Vec3::Zero());
  EXPECT_DOUBLE_EQ(r.v_abs, 0.0);
  r = radar_project(Vec3(10, 10, 0), Vec3(5, 0, 0), Vec3::Zero());
  EXPECT_NEAR(r.v_abs, 5.0 / std::sqrt(2.0), 1e-12);
  r = radar_project(Vec3(10, 0, 0), Vec3::Zero(), Vec3(3, 0, 0));
  EXPECT_DOUBLE_EQ(r.v_abs, 0.0);
  EXPECT_DOUBLE_EQ(r.v_rel, -3.0);
  EXPECT_THROW(radar_project(Vec3::Zero(), Vec3(1, 0, 0), Vec3::Zero()), Error);
}

TEST(Simulate, ClutterOnlyScene)
{
  const auto seq = simulate(clutter_only());
  ASSERT_EQ(seq.frames.size(), 5u);
  std::size_t total = 0;
  for (const auto & f : seq.frames) {
    total += f.radar.size();
    ASSERT_EQ(f.motion_labels.size(), f.radar.size());
    for (auto l : f.motion_labels) {
      ASSERT_EQ(l, 0);
    }
  }
  EXPECT_EQ(total, 500u);
}

TEST(Simulate, Deterministic)
{
  const auto cfg = make_task_scene(TaskConfig{}, 5, 2);
  EXPECT_TRUE(identical(simulate(cfg), simulate(cfg)));
  auto other = cfg;
  other.seed += 1;
  EXPECT_FALSE(identical(simulate(cfg), simulate(other)));
  EXPECT_TRUE(identical(simulate(clutter_only()), simulate(clutter_only())));
}

TEST(Simulate, ConstantVelocityKinematics)
{
  SceneConfig c;
  c.n_frames = 5;
  c.frame_period = 0.1;
  SceneObject car;
  car.box.center = Vec3(12.0, 3.0, 0.75);
  car.box.size = Vec3(4.0, 1.8, 1.5);
  car.velocity = Vec3(10.0, 0.0, 0.0);
  car.point_density = 5;
  c.objects.push_back(car);
  const auto seq = simulate(c);
  for (int f = 0; f < 5; ++f) {
    const auto & b = seq.frames[static_cast<std::size_t>(f)].boxes.at(0);
    EXPECT_NEAR(b.center.x(), 12.0 + f * 1.0, 1e-12);
    EXPECT_NEAR(b.center.y(), 3.0, 1e-12);
  }
}

TEST(Simulate, LabelSoundnessAndDoppler)
{
  const TaskConfig task;
  for (int index = 0; index < 6; ++index) {
    const auto cfg = make_task_scene(task, 1, index);
    const auto seq = simulate(cfg);
    ASSERT_EQ(seq.frames.size(), static_cast<std::size_t>(cfg.n_frames));
    for (const auto & frame : seq.frames) {
      ASSERT_EQ(frame.motion_labels.size(), frame.radar.size());
      for (std::size_t i = 0; i < frame.radar.size(); ++i) {
        const int src = frame.radar_source[i];
        if (src == kSourceClutter) {
          ASSERT_EQ(frame.motion_labels[i], 0);
        } else if (src == kSourceMultipath) {
          ASSERT_EQ(frame.motion_labels[i], 1);
        } else {
          const auto k = static_cast<std::size_t>(src);
          const auto & obj = cfg.objects[k];
          ASSERT_EQ(frame.motion_labels[i], obj.velocity.norm() > 0.1 ? 1 : 0);
          const Vec3 u = radial_unit_vector(frame.radar[i].position());
          ASSERT_LE(std::abs(frame.radar[i].v_abs - frame.box_velocities[k].dot(u)), 6.0 * cfg.noise_sigma_vel);
        }
      }
    }
  }
}

TEST(Simulate, UncompensatedTailMatchesKinematics)
{
  auto cfg = default_tail_scene(0);
  cfg.noise_sigma_pos = 0.0;
  cfg.objects[0].point_density = 60;
  const auto seq = simulate(cfg);
  double lo = 1e9, hi = -1e9;
  for (const auto & frame : seq.frames) {
    for (std::size_t i = 0; i < frame.radar.size(); ++i) {
      if (frame.radar_source[i] == 0) {
        lo = std::min(lo, frame.radar[i].x);
        hi = std::max(hi, frame.radar[i].x);
      }
    }
  }
  const double expected = cfg.objects[0].velocity.norm() * cfg.frame_period * (cfg.n_frames - 1);
  const double length = cfg.objects[0].box.size.x();
  EXPECT_GT(hi - lo, expected - 1e-9);
  EXPECT_LT(hi - lo, expected + length + 1e-9);
}

TEST(Simulate, InvalidConfigNamesField)
{
  auto c = clutter_only();
  c.frame_period = 0.0;
  try {
    simulate(c);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    EXPECT_NE(e.message().find("frame_period"), std::string::npos);
  }
  c = clutter_only();
  c.n_frames = 0;
  EXPECT_THROW(simulate(c), Error);
  c = clutter_only();
  c.clutter_rate = -1;
  EXPECT_THROW(simulate(c), Error);
}

TEST(FrameIo, DoubleFormatRoundTrips)
{
  Rng rng(4);
  for (int k = 0; k < 10000; ++k) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
    ASSERT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_THROW(parse_double("1.5x"), Error);
}

TEST(FrameIo, SequenceRoundTrip)
{
  const auto cfg = make_task_scene(TaskConfig{}, 2, 0);
  const auto seq = simulate(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "moralkit_test_scene_io";
  std::filesystem::remove_all(dir);
  write_sequence(dir, seq, cfg);
  SceneConfig back_cfg;
  const auto back = read_sequence(dir, &back_cfg);
  EXPECT_TRUE(identical(seq, back));
  EXPECT_EQ(back.frame_period, seq.frame_period);
  EXPECT_EQ(back_cfg.seed, cfg.seed);
  EXPECT_EQ(back_cfg.objects.size(), cfg.objects.size());
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    EXPECT_EQ(back.frames[f].pose.yaw, seq.frames[f].pose.yaw);
    EXPECT_EQ(back.frames[f].pose.translation, seq.frames[f].pose.translation);
    EXPECT_TRUE(back.frames[f].radar_source.empty());
  }
  std::filesystem::remove_all(dir);
}

TEST(FrameIo, ParseErrorsNameTheLine)
{
  RadarCloud cloud;
  std::vector<std::uint8_t> labels;
  try {
    parse_radar("1 2 3 4 5 6 0 1\n1 2 3\n", cloud, labels, "radar_0000.txt");
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(e.message().find("radar_0000.txt:2"), std::string::npos);
  }
}

}  // namespace
}  // namespace moralkit
