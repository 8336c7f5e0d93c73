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

#ifndef MORALKIT__TYPES_HPP_
#define MORALKIT__TYPES_HPP_

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace moralkit
{

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Ego-centric, right-handed: x forward, y left, z up.

enum class ObjectClass : std::uint8_t { Car = 0, Pedestrian = 1, Cyclist = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses = {
  ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist};

std::string_view class_name(ObjectClass cls);
std::optional<ObjectClass> parse_class(std::string_view name);

/// One 4D radar return. Radial velocities are signed, positive = receding.
/// `t` is the frame offset relative to the accumulation target (0 = target,
/// negative = past frames).
struct RadarPoint
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rcs = 0.0;    // dBsm
  double v_rel = 0.0;  // m/s, includes ego motion
  double v_abs = 0.0;  // m/s, ego-motion compensated
  int t = 0;

  Vec3 position() const { return {x, y, z}; }
  void set_position(const Vec3 & p)
  {
    x = p.x();
    y = p.y();
    z = p.z();
  }
};

inline constexpr std::size_t kRadarWidth = 7;
inline constexpr std::size_t kEnhancedWidth = 10;

/// Radar point plus the three velocity-derived channels.
struct EnhancedRadarPoint : RadarPoint
{
  double v_mag = 0.0;  // |v_abs|
  double v_sq = 0.0;   // v_abs^2
  double v_dir = 0.0;  // sign(v_abs), sign(0) = 0

  /// Channel order: x y z rcs v_rel v_abs t v_mag v_sq v_dir.
  std::array<double, kEnhancedWidth> features() const;
};

struct LidarPoint
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // [0, 1]

  Vec3 position() const { return {x, y, z}; }
};

using RadarCloud = std::vector<RadarPoint>;
using EnhancedRadarCloud = std::vector<EnhancedRadarPoint>;
using LidarCloud = std::vector<LidarPoint>;

/// Planar ego pose: ego coordinates map to world by p_w = Rz(yaw) p + translation.
struct EgoPose
{
  Vec3 translation = Vec3::Zero();
  double yaw = 0.0;  // (-pi, pi]
};

struct Box3D
{
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // length (along heading), width, height
  double yaw = 0.0;
  ObjectClass cls = ObjectClass::Car;
};

struct Detection
{
  Box3D box;
  double score = 0.0;
  int frame_id = 0;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

bool is_valid(const Box3D & box);

/// Dense C x H x W bird's-eye-view tensor. Row index i runs along x,
/// column index j along y; cell (i, j) covers
/// [origin.x + i*cell, origin.x + (i+1)*cell) x [origin.y + j*cell, ...).
class FeatureMap
{
public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, Vec2 grid_origin = Vec2::Zero(),
    double cell_size = 1.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int cells() const { return height_ * width_; }
  const Vec2 & grid_origin() const { return grid_origin_; }
  double cell_size() const { return cell_size_; }

  double & at(int c, int i, int j) { return data_[index(c, i, j)]; }
  double at(int c, int i, int j) const { return data_[index(c, i, j)]; }

  std::vector<double> & data() { return data_; }
  const std::vector<double> & data() const { return data_; }

  /// Channels x cells view of the storage.
  Eigen::Map<Matrix> matrix() { return {data_.data(), channels_, cells()}; }
  Eigen::Map<const Matrix> matrix() const { return {data_.data(), channels_, cells()}; }

  bool same_shape(const FeatureMap & other) const
  {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const;

private:
  std::size_t index(int c, int i, int j) const
  {
    return (static_cast<std::size_t>(c) * height_ + i) * width_ + j;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  Vec2 grid_origin_ = Vec2::Zero();
  double cell_size_ = 1.0;
  std::vector<double> data_;
};

}  // namespace moralkit

#endif  // MORALKIT__TYPES_HPP_
