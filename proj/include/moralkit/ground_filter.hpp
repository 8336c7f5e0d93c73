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

#ifndef MORALKIT__GROUND_FILTER_HPP_
#define MORALKIT__GROUND_FILTER_HPP_

#include "moralkit/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace moralkit
{

/// Plane n . p + d = 0 with unit normal, oriented so that n.z >= 0.
struct PlaneModel
{
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3 & p) const { return normal.dot(p) + offset; }
};

struct RansacResult
{
  PlaneModel plane;
  std::vector<std::uint8_t> inlier_mask;
  std::size_t inlier_count = 0;
};

/// Plane hypotheses considered by RANSAC. Defaults accept any plane.
struct PlaneConstraints
{
  double max_tilt_deg = 90.0;          // angle between normal and +z
  double max_abs_offset = 1e300;        // |d|, i.e. height of the plane at the origin
};

/// Best-of-n_iters plane by inlier count (|n.p + d| <= inlier_tol).
/// Throws DegenerateInput for fewer than 3 points or an all-collinear set.
RansacResult ransac_plane(std::span<const Vec3> points, int n_iters, double inlier_tol, std::uint64_t seed,
  const PlaneConstraints & constraints = {});

struct GroundFilterParams
{
  double coarse_tolerance = 0.20;  // m, stage 1
  double fine_tolerance = 0.08;    // m, stage 2
  int iterations = 200;            // per stage
  double height_margin = 0.15;     // removed points lie below plane + margin
  double max_removal_height = 0.5; // never remove points further above the plane
  double min_inlier_fraction = 0.10;
  int min_inliers = 50;            // a ground plane also needs this many coarse inliers
  double max_tilt_deg = 5.0;
  double max_ground_offset = 0.3;  // m
  std::uint64_t seed = 0;
};

struct GroundFilterResult
{
  LidarCloud cloud;                   // points kept, original order
  std::vector<std::size_t> kept;      // indices into the input
  bool no_ground_found = false;
  PlaneModel plane;
};

/// Two-stage (coarse, then fine) RANSAC ground removal.
GroundFilterResult remove_ground(const LidarCloud & cloud, const GroundFilterParams & params = {});

}  // namespace moralkit

#endif  // MORALKIT__GROUND_FILTER_HPP_
