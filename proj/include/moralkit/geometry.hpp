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

#ifndef MORALKIT__GEOMETRY_HPP_
#define MORALKIT__GEOMETRY_HPP_

#include "moralkit/types.hpp"

#include <span>

namespace moralkit
{

inline constexpr double kDegenerateRange = 1e-6;  // m

/// Line-of-sight unit vector p / |p|. Throws DegeneratePoint when |p| <= 1e-6 m.
Vec3 radial_unit_vector(const Vec3 & p);

/// Maps a point from the ego frame of `src` into the ego frame of `dst`.
Vec3 transform_point(const Vec3 & p, const EgoPose & src, const EgoPose & dst);

RadarCloud transform_to_frame(std::span<const RadarPoint> points, const EgoPose & src,
  const EgoPose & dst);
LidarCloud transform_to_frame(std::span<const LidarPoint> points, const EgoPose & src,
  const EgoPose & dst);
Box3D transform_to_frame(const Box3D & box, const EgoPose & src, const EgoPose & dst);

/// Rotates a free vector (velocity) from src ego axes into dst ego axes.
Vec3 rotate_to_frame(const Vec3 & v, const EgoPose & src, const EgoPose & dst);

EnhancedRadarPoint enhance(const RadarPoint & p);

/// BEV corners of a box, counter-clockwise.
std::array<Vec2, 4> bev_corners(const Box3D & box);

}  // namespace moralkit

#endif  // MORALKIT__GEOMETRY_HPP_
