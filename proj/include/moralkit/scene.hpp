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

#ifndef MORALKIT__SCENE_HPP_
#define MORALKIT__SCENE_HPP_

#include "moralkit/types.hpp"

#include <cstdint>
#include <vector>

namespace moralkit
{

inline constexpr double kMovingSpeedThreshold = 0.1;  // m/s
inline constexpr double kMaxObjectSpeed = 40.0;       // m/s

struct SceneObject
{
  Box3D box;                       // pose at frame 0, world (= frame-0 ego) coordinates
  Vec3 velocity = Vec3::Zero();    // m/s, constant
  double point_density = 0.0;      // radar points per frame
  double lidar_density = 0.0;      // LiDAR points per frame

  bool moving() const { return velocity.norm() > kMovingSpeedThreshold; }
};

/// Axis-aligned region where background returns are generated.
struct SceneExtent
{
  double x_min = 1.0;
  double x_max = 51.2;
  double y_min = -25.6;
  double y_max = 25.6;
};

struct SceneConfig
{
  int n_frames = 5;
  double frame_period = 0.1;  // s
  double ego_speed = 0.0;     // m/s along ego +x
  double ego_yaw_rate = 0.0;  // rad/s
  std::vector<SceneObject> objects;
  int clutter_rate = 0;    // static radar returns per frame
  int multipath_rate = 0;  // ghost radar returns per frame (needs a moving object)
  double noise_sigma_pos = 0.05;  // m, lateral; elevation uses 3x
  double noise_sigma_vel = 0.1;   // m/s
  // Share of clutter returns carrying a spurious Doppler of 1..outlier_speed m/s.
  double clutter_outlier_fraction = 0.0;
  double clutter_outlier_speed = 3.0;
  int lidar_ground_points = 0;
  int lidar_clutter_points = 0;
  double lidar_noise_sigma = 0.02;
  double lidar_height = 1.8;  // sensor mount height above ground
  SceneExtent extent;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

/// Source tags for simulated points.
inline constexpr int kSourceClutter = -1;
inline constexpr int kSourceMultipath = -2;
inline constexpr int kSourceGround = -1;
inline constexpr int kSourceLidarClutter = -2;

struct Frame
{
  RadarCloud radar;
  std::vector<std::uint8_t> motion_labels;  // per radar point, 1 = moving
  std::vector<int> radar_source;            // object index or kSource*; empty after file load
  LidarCloud lidar;
  std::vector<int> lidar_source;            // object index or kSource*; empty after file load
  EgoPose pose;
  std::vector<Box3D> boxes;                 // ego coordinates of this frame
  std::vector<Vec3> box_velocities;         // world velocity in this frame's ego axes
};

struct FrameSequence
{
  std::vector<Frame> frames;
  double frame_period = 0.1;
};

struct RadialVelocity
{
  double v_rel = 0.0;
  double v_abs = 0.0;
};

/// Line-of-sight projection of a point's true velocity (v_abs) and of its
/// velocity relative to the moving sensor (v_rel). Throws DegeneratePoint.
RadialVelocity radar_project(const Vec3 & point_pos, const Vec3 & point_world_vel, const Vec3 & ego_vel);

/// Ego pose of frame `index`.
EgoPose ego_pose_at(const SceneConfig & config, int index);

/// Deterministic for a given config (including seed).
FrameSequence simulate(const SceneConfig & config);

// ---------------------------------------------------------------------------
// Randomized scenes for the synthetic benchmark.

struct ClassProfile
{
  Vec3 size;                  // l, w, h
  double clearance = 0.15;    // lowest surface point above ground
  double rcs_mean = 0.0;      // dBsm
  double speed_min = 0.0;
  double speed_max = 0.0;
  double radar_density = 0.0;
  double lidar_density = 0.0; // at the reference range
};

ClassProfile class_profile(ObjectClass cls);

struct TaskConfig
{
  int n_frames = 5;
  double frame_period = 0.1;
  double ego_speed_max = 8.0;
  int cars_min = 2;
  int cars_max = 4;
  int pedestrians_min = 2;
  int pedestrians_max = 4;
  int cyclists_min = 1;
  int cyclists_max = 3;
  double moving_probability = 0.6;
  int clutter_rate = 40;
  int multipath_rate = 4;
  double clutter_outlier_fraction = 0.15;
  double noise_sigma_pos = 0.05;
  double noise_sigma_vel = 0.1;
  double lidar_reference_range = 5.0;  // density falls off as (ref / range)^2 beyond this
  double lidar_occlusion_probability = 0.75;
  int lidar_ground_points = 2000;
  int lidar_clutter_points = 60;
  double object_x_min = 4.0;
  double object_x_max = 46.0;
  double object_y_abs_max = 18.0;
};

/// Scene `index` of the randomized task drawn from `seed`.
SceneConfig make_task_scene(const TaskConfig & task, std::uint64_t seed, int index);

/// One car 25 m ahead driving towards the static ego vehicle at 10 m/s, five
/// frames at 0.1 s: the accumulation-tail demonstration scene.
SceneConfig default_tail_scene(std::uint64_t seed = 0);

}  // namespace moralkit

#endif  // MORALKIT__SCENE_HPP_
