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

#ifndef MORALKIT_TESTS__SUPPORT_HPP_
#define MORALKIT_TESTS__SUPPORT_HPP_

#include "moralkit/eval.hpp"
#include "moralkit/nn.hpp"
#include "moralkit/rng.hpp"
#include "moralkit/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace moralkit::testing
{

// ---------------------------------------------------------------------------
// Finite differences

struct GradCheckResult
{
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_relative = 0.0;
  std::string worst_name;
};

/// Compares accumulated Param::grad against central differences of `loss`
/// on `samples` randomly chosen entries. `loss` must not touch gradients.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult check_param_gradients(const ParamList & params, const std::function<double()> & loss,
  std::size_t samples, std::uint64_t seed, double step = 1e-6, double tolerance = 1e-3, double floor = 1e-6);

/// Central differences of a scalar function of a matrix, every entry.
Mat numeric_gradient(Mat & x, const std::function<double()> & loss, double step = 1e-6);

double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Random matrix with entries uniform in [-scale, scale].
Mat random_matrix(Rng & rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);
FeatureMap random_map(Rng & rng, int channels, int height, int width, double scale = 1.0);

/// Sum of out .* weights, with weights shaped like out.
double dot(const FeatureMap & out, const FeatureMap & weights);

// ---------------------------------------------------------------------------
// Average precision by exhaustive cut-offs

/// For every distinct score, re-matches the detections at or above it from
/// scratch, then interpolates precision at `recall_points` recall levels
/// using exact integer comparisons.
double brute_force_ap(const std::vector<Detection> & detections, const std::vector<GroundTruthBox> & ground_truths,
  ObjectClass cls, double iou_threshold, int recall_points = 40);

// ---------------------------------------------------------------------------
// Geometry

/// Monte Carlo estimate of the BEV IoU of two boxes.
double monte_carlo_iou(const Box3D & a, const Box3D & b, std::size_t samples, std::uint64_t seed);

bool inside_bev(const Box3D & box, double x, double y);

/// Least-squares plane through the points (unit normal with n.z >= 0).
void fit_plane(const std::vector<Vec3> & points, Vec3 & normal, double & offset);

// ---------------------------------------------------------------------------
// Generators

Box3D random_box(Rng & rng, ObjectClass cls);
RadarCloud random_radar_cloud(Rng & rng, std::size_t n, double extent = 20.0);
EnhancedRadarCloud random_enhanced_cloud(Rng & rng, std::size_t n, double extent = 20.0);

}  // namespace moralkit::testing

#endif  // MORALKIT_TESTS__SUPPORT_HPP_
