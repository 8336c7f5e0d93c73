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

#ifndef MORALKIT__ENCODERS_HPP_
#define MORALKIT__ENCODERS_HPP_

#include "moralkit/nn.hpp"
#include "moralkit/types.hpp"

#include <cstdint>
#include <vector>

namespace moralkit
{

struct GridSpec
{
  double x_min = 0.0;
  double x_max = 51.2;
  double y_min = -25.6;
  double y_max = 25.6;
  double cell_size = 0.32;
  int max_points_per_pillar = 32;
  int feature_width = 64;  // C of the encoded map

  void validate() const;
  /// Cells along x (rows of the map), rounded up.
  int height() const;
  /// Cells along y (columns of the map), rounded up.
  int width() const;
  /// Cell containing (x, y) under half-open [lo, hi) bins; false when out of range.
  bool cell_of(double x, double y, int & i, int & j) const;
  Vec2 cell_center(int i, int j) const;
  FeatureMap empty_map(int channels) const;
};

/// Per-point feature columns before the pillar offsets are appended.
enum class PillarSource
{
  Radar,  // z rcs v_rel v_abs t |v| v^2 sign(v)
  Lidar,  // z intensity
};

int raw_feature_width(PillarSource source);
/// Raw features plus (dx, dy) to the cell center and (dx, dy, dz) to the pillar mean.
int pillar_feature_width(PillarSource source);

struct Pillar
{
  int i = 0;
  int j = 0;
  Mat features;                    // points x pillar_feature_width
  std::vector<std::size_t> points; // source indices, original order
};

struct PillarSet
{
  GridSpec grid;
  PillarSource source = PillarSource::Lidar;
  std::vector<Pillar> pillars;     // sorted by (i, j)
  std::size_t dropped_out_of_range = 0;
  std::size_t dropped_truncated = 0;
};

/// Pillar assignment by floor division; the first max_points_per_pillar
/// points of each cell (input order) are kept. Absolute x/y are not point
/// features, so the encoding is translation covariant.
PillarSet pillarize(const EnhancedRadarCloud & cloud, const GridSpec & grid);
PillarSet pillarize(const LidarCloud & cloud, const GridSpec & grid);

/// Linear + ReLU per point, max-pool per pillar, scatter to the BEV grid.
class PillarEncoder
{
public:
  struct Cache
  {
    Mat input;               // stacked scaled point features
    Mat activations;         // after ReLU
    std::vector<int> argmax; // pillars x C, row into `input`
  };

  PillarEncoder() = default;
  PillarEncoder(PillarSource source, int channels);

  PillarSource source() const { return source_; }
  int channels() const { return linear.out(); }

  FeatureMap forward(const PillarSet & pillars, Cache * cache = nullptr) const;
  /// Accumulates parameter gradients from dL/d(map).
  void backward(const PillarSet & pillars, const Cache & cache, const FeatureMap & d_map);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Linear linear;

private:
  PillarSource source_ = PillarSource::Lidar;
  std::vector<double> scale_;
};

}  // namespace moralkit

#endif  // MORALKIT__ENCODERS_HPP_
