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

#include "moralkit/ground_filter.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/rng.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace moralkit
{

namespace
{

bool has_non_collinear_triple(std::span<const Vec3> points)
{
  const Vec3 & a = points[0];
  std::size_t far = 0;
  double best = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = (points[i] - a).squaredNorm();
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (best <= 1e-18) {
    return false;
  }
  const Vec3 dir = (points[far] - a).normalized();
  for (const auto & p : points) {
    if ((p - a).cross(dir).norm() > 1e-9) {
      return true;
    }
  }
  return false;
}

}  // namespace

RansacResult ransac_plane(std::span<const Vec3> points, int n_iters, double inlier_tol, std::uint64_t seed,
  const PlaneConstraints & constraints)
{
  if (points.size() < 3) {
    fail(ErrorCode::DegenerateInput, "plane fit needs at least 3 points");
  }
  if (n_iters < 1 || !(inlier_tol > 0.0)) {
    fail(ErrorCode::InvalidConfig, "ransac needs n_iters >= 1 and inlier_tol > 0");
  }
  if (!has_non_collinear_triple(points)) {
    fail(ErrorCode::DegenerateInput, "all points are collinear");
  }
  const double min_nz = std::cos(constraints.max_tilt_deg * std::numbers::pi / 180.0);
  Rng rng(seed, "ransac");
  const auto n = static_cast<std::int64_t>(points.size());
  RansacResult best;
  bool found = false;
  for (int it = 0; it < n_iters; ++it) {
    const auto i = rng.uniform_int(0, n - 1);
    auto j = rng.uniform_int(0, n - 2);
    j += (j >= i) ? 1 : 0;
    // third index drawn from [0, n) \ {i, j}
    auto k = rng.uniform_int(0, n - 3);
    k += (k >= std::min(i, j)) ? 1 : 0;
    k += (k >= std::max(i, j)) ? 1 : 0;
    const Vec3 & a = points[static_cast<std::size_t>(i)];
    const Vec3 & b = points[static_cast<std::size_t>(j)];
    const Vec3 & c = points[static_cast<std::size_t>(k)];
    Vec3 normal = (b - a).cross(c - a);
    const double norm = normal.norm();
    if (norm < 1e-12) {
      continue;
    }
    normal /= norm;
    if (normal.z() < 0.0 || (normal.z() == 0.0 && (normal.y() < 0.0 || (normal.y() == 0.0 && normal.x() < 0.0)))) {
      normal = -normal;
    }
    const double offset = -normal.dot(a);
    if (normal.z() < min_nz || std::abs(offset) > constraints.max_abs_offset) {
      continue;
    }
    std::size_t count = 0;
    for (const auto & p : points) {
      count += std::abs(normal.dot(p) + offset) <= inlier_tol ? 1 : 0;
    }
    if (!found || count > best.inlier_count) {
      found = true;
      best.inlier_count = count;
      best.plane = {normal, offset};
    }
  }
  best.inlier_mask.assign(points.size(), 0);
  if (!found) {
    best.inlier_count = 0;
    return best;
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    best.inlier_mask[p] = std::abs(best.plane.signed_distance(points[p])) <= inlier_tol ? 1 : 0;
  }
  return best;
}

GroundFilterResult remove_ground(const LidarCloud & cloud, const GroundFilterParams & params)
{
  if (cloud.empty()) {
    fail(ErrorCode::DegenerateInput, "ground removal needs a non-empty cloud");
  }
  GroundFilterResult result;
  auto keep_all = [&] {
    result.cloud = cloud;
    result.kept.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      result.kept[i] = i;
    }
    result.no_ground_found = true;
    return result;
  };

  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto & p : cloud) {
    pts.push_back(p.position());
  }
  const PlaneConstraints constraints{params.max_tilt_deg, params.max_ground_offset};
  const auto coarse = ransac_plane(pts, params.iterations, params.coarse_tolerance, params.seed, constraints);
  const double needed = params.min_inlier_fraction * static_cast<double>(cloud.size());
  if (coarse.inlier_count < static_cast<std::size_t>(std::max(3, params.min_inliers)) ||
      static_cast<double>(coarse.inlier_count) < needed) {
    return keep_all();
  }

  std::vector<Vec3> stage_pts;
  std::vector<std::size_t> stage_idx;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (coarse.inlier_mask[i] != 0) {
      stage_pts.push_back(pts[i]);
      stage_idx.push_back(i);
    }
  }
  RansacResult fine;
  try {
    fine = ransac_plane(stage_pts, params.iterations, params.fine_tolerance, mix64(params.seed + 1), constraints);
  } catch (const Error & e) {
    if (e.code() != ErrorCode::DegenerateInput) {
      throw;
    }
    return keep_all();
  }
  if (fine.inlier_count < 3) {
    return keep_all();
  }

  std::vector<std::uint8_t> remove(cloud.size(), 0);
  const auto & plane = fine.plane;
  for (std::size_t s = 0; s < stage_pts.size(); ++s) {
    if (fine.inlier_mask[s] == 0) {
      continue;
    }
    const Vec3 & p = stage_pts[s];
    const double above = plane.signed_distance(p);  // normal points up
    if (above < params.height_margin && above <= params.max_removal_height) {
      remove[stage_idx[s]] = 1;
    }
  }
  result.plane = plane;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (remove[i] == 0) {
      result.cloud.push_back(cloud[i]);
      result.kept.push_back(i);
    }
  }
  return result;
}

}  // namespace moralkit
