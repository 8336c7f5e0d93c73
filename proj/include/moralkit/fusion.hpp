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

#ifndef MORALKIT__FUSION_HPP_
#define MORALKIT__FUSION_HPP_

#include "moralkit/mre.hpp"
#include "moralkit/nn.hpp"
#include "moralkit/types.hpp"

#include <optional>
#include <vector>

namespace moralkit
{

/// Squeeze-excitation style channel weights: W = sigmoid(FC2(ReLU(FC1(GAP(F))))).
class ChannelAttention
{
public:
  struct Cache
  {
    RowVec pooled;
    Mat hidden;  // 1 x C/r after ReLU
    RowVec weights;
  };

  ChannelAttention() = default;
  /// Throws InvalidConfig unless `reduction` divides `channels`.
  ChannelAttention(int channels, int reduction);

  int channels() const { return fc2.out(); }

  FeatureMap forward(const FeatureMap & x, Cache * cache = nullptr) const;
  /// Channel weights only.
  RowVec weights(const FeatureMap & x) const;
  FeatureMap backward(const FeatureMap & x, const Cache & cache, const FeatureMap & dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Linear fc1;
  Linear fc2;
};

/// Global motion descriptor: sigmoid(lambda) * phi_sa(mean F_sa) +
/// (1 - sigmoid(lambda)) * phi_fp(mean F_fp), broadcast over the grid.
class MotionAggregator
{
public:
  struct Cache
  {
    RowVec mean_sa;
    RowVec mean_fp;
    RowVec phi_sa;
    RowVec phi_fp;
    double blend = 0.5;
    int sa_points = 0;
    int fp_points = 0;
  };

  struct Gradients
  {
    Mat d_sa;
    Mat d_fp;
  };

  MotionAggregator() = default;
  MotionAggregator(int sa_channels, int fp_channels, int channels);

  int channels() const { return phi_sa.out(); }
  double blend() const;

  /// `like` supplies the grid shape. `blend_override` pins sigmoid(lambda).
  /// Throws EmptyFeatures.
  FeatureMap forward(const MotionFeatures & features, const FeatureMap & like, Cache * cache = nullptr,
    std::optional<double> blend_override = std::nullopt) const;
  Gradients backward(const Cache & cache, const FeatureMap & dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Linear phi_sa;
  Linear phi_fp;
  Param lambda{1, 1};
};

/// G = sigmoid(Conv(concat(F_L', F_R))); output F_L' * G + F_L'.
class GatedFusion
{
public:
  struct Cache
  {
    FeatureMap concat;
    Mat columns;
    FeatureMap gate;
  };

  struct Gradients
  {
    FeatureMap d_lidar;
    FeatureMap d_motion;
  };

  GatedFusion() = default;
  GatedFusion(int channels, int kernel);

  /// Throws ShapeMismatch.
  FeatureMap forward(const FeatureMap & lidar, const FeatureMap & motion, Cache * cache = nullptr) const;
  Gradients backward(const FeatureMap & lidar, const Cache & cache, const FeatureMap & dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Conv2d conv;
};

/// Per-channel convex blend beta * F_L + (1 - beta) * Conv1x1(F_R), with
/// beta = sigmoid(beta_logit). Stand-in for a learned cross-modal fusion
/// block; the interface takes the two maps and returns one.
class AdaptiveFusion
{
public:
  struct Cache
  {
    FeatureMap projected;
    Mat columns;
    RowVec beta;
  };

  struct Gradients
  {
    FeatureMap d_lidar;
    FeatureMap d_radar;
  };

  AdaptiveFusion() = default;
  AdaptiveFusion(int radar_channels, int channels);

  RowVec beta() const;

  /// Throws ShapeMismatch.
  FeatureMap forward(const FeatureMap & lidar, const FeatureMap & radar, Cache * cache = nullptr) const;
  Gradients backward(const FeatureMap & lidar, const FeatureMap & radar, const Cache & cache,
    const FeatureMap & dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Conv2d projection;
  Param beta_logit;
};

}  // namespace moralkit

#endif  // MORALKIT__FUSION_HPP_
