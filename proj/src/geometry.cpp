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

#include "moralkit/geometry.hpp"

#include "moralkit/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace moralkit
{

std::string_view class_name(ObjectClass cls)
{
  switch (cls) {
    case ObjectClass::Car: return "Car";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::Cyclist: return "Cyclist";
  }
  return "Unknown";
}

std::optional<ObjectClass> parse_class(std::string_view name)
{
  for (auto cls : kAllClasses) {
    if (class_name(cls) == name) {
      return cls;
    }
  }
  return std::nullopt;
}

std::array<double, kEnhancedWidth> EnhancedRadarPoint::features() const
{
  return {x, y, z, rcs, v_rel, v_abs, static_cast<double>(t), v_mag, v_sq, v_dir};
}

double normalize_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a > std::numbers::pi) {
    a -= two_pi;
  } else if (a <= -std::numbers::pi) {
    a += two_pi;
  }
  return a;
}

bool is_valid(const Box3D & box)
{
  return box.center.allFinite() && box.size.allFinite() && (box.size.array() > 0.0).all() &&
         std::isfinite(box.yaw);
}

FeatureMap::FeatureMap(int channels, int height, int width, Vec2 grid_origin, double cell_size)
: channels_(channels),
  height_(height),
  width_(width),
  grid_origin_(std::move(grid_origin)),
  cell_size_(cell_size),
  data_(static_cast<std::size_t>(channels) * height * width, 0.0)
{
  if (channels < 0 || height < 0 || width < 0 || !(cell_size > 0.0)) {
    fail(ErrorCode::ShapeMismatch, "invalid feature map shape");
  }
}

bool FeatureMap::all_finite() const
{
  for (double v : data_) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

Vec3 radial_unit_vector(const Vec3 & p)
{
  const double n = p.norm();
  if (!(n > kDegenerateRange)) {
    fail(ErrorCode::DegeneratePoint, "point at sensor origin has no line of sight");
  }
  return p / n;
}

namespace
{

Eigen::Matrix3d yaw_rotation(double yaw)
{
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

}  // namespace

Vec3 transform_point(const Vec3 & p, const EgoPose & src, const EgoPose & dst)
{
  const Vec3 world = yaw_rotation(src.yaw) * p + src.translation;
  return yaw_rotation(dst.yaw).transpose() * (world - dst.translation);
}

Vec3 rotate_to_frame(const Vec3 & v, const EgoPose & src, const EgoPose & dst)
{
  return yaw_rotation(dst.yaw).transpose() * (yaw_rotation(src.yaw) * v);
}

RadarCloud transform_to_frame(std::span<const RadarPoint> points, const EgoPose & src,
  const EgoPose & dst)
{
  RadarCloud out(points.begin(), points.end());
  for (auto & p : out) {
    p.set_position(transform_point(p.position(), src, dst));
  }
  return out;
}

LidarCloud transform_to_frame(std::span<const LidarPoint> points, const EgoPose & src,
  const EgoPose & dst)
{
  LidarCloud out(points.begin(), points.end());
  for (auto & p : out) {
    const Vec3 q = transform_point(p.position(), src, dst);
    p.x = q.x();
    p.y = q.y();
    p.z = q.z();
  }
  return out;
}

Box3D transform_to_frame(const Box3D & box, const EgoPose & src, const EgoPose & dst)
{
  Box3D out = box;
  out.center = transform_point(box.center, src, dst);
  out.yaw = normalize_angle(box.yaw + src.yaw - dst.yaw);
  return out;
}

EnhancedRadarPoint enhance(const RadarPoint & p)
{
  EnhancedRadarPoint e;
  static_cast<RadarPoint &>(e) = p;
  e.v_mag = std::abs(p.v_abs);
  e.v_sq = p.v_abs * p.v_abs;
  e.v_dir = p.v_abs > 0.0 ? 1.0 : (p.v_abs < 0.0 ? -1.0 : 0.0);
  return e;
}

std::array<Vec2, 4> bev_corners(const Box3D & box)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.size.x();
  const double hw = 0.5 * box.size.y();
  const Vec2 center(box.center.x(), box.center.y());
  const Vec2 ax(c * hl, s * hl);
  const Vec2 ay(-s * hw, c * hw);
  return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
}

}  // namespace moralkit
