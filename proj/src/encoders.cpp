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

#include "moralkit/encoders.hpp"

#include "moralkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace moralkit
{

void GridSpec::validate() const
{
  if (!(x_max > x_min) || !(y_max > y_min)) {
    fail(ErrorCode::InvalidConfig, "grid ranges must be non-degenerate");
  }
  if (!(cell_size > 0.0)) {
    fail(ErrorCode::InvalidConfig, "grid.cell_size must be positive");
  }
  if (max_points_per_pillar < 1) {
    fail(ErrorCode::InvalidConfig, "grid.max_points_per_pillar must be >= 1");
  }
  if (feature_width < 1) {
    fail(ErrorCode::InvalidConfig, "grid.feature_width must be >= 1");
  }
}

int GridSpec::height() const
{
  return static_cast<int>(std::ceil((x_max - x_min) / cell_size - 1e-9));
}

int GridSpec::width() const
{
  return static_cast<int>(std::ceil((y_max - y_min) / cell_size - 1e-9));
}

bool GridSpec::cell_of(double x, double y, int & i, int & j) const
{
  if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) {
    return false;
  }
  i = static_cast<int>(std::floor((x - x_min) / cell_size));
  j = static_cast<int>(std::floor((y - y_min) / cell_size));
  return i >= 0 && i < height() && j >= 0 && j < width();
}

Vec2 GridSpec::cell_center(int i, int j) const
{
  return {x_min + (i + 0.5) * cell_size, y_min + (j + 0.5) * cell_size};
}

FeatureMap GridSpec::empty_map(int channels) const
{
  return FeatureMap(channels, height(), width(), Vec2(x_min, y_min), cell_size);
}

int raw_feature_width(PillarSource source)
{
  return source == PillarSource::Radar ? 8 : 2;
}

int pillar_feature_width(PillarSource source)
{
  return raw_feature_width(source) + 5;
}

namespace
{

struct PointView
{
  Vec3 pos;
  std::vector<double> raw;
};

template <class Cloud, class Extract>
PillarSet build(const Cloud & cloud, const GridSpec & grid, PillarSource source, Extract extract)
{
  grid.validate();
  PillarSet set;
  set.grid = grid;
  set.source = source;
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    int i = 0;
    int j = 0;
    if (!grid.cell_of(cloud[k].x, cloud[k].y, i, j)) {
      ++set.dropped_out_of_range;
      continue;
    }
    auto & members = cells[{i, j}];
    if (static_cast<int>(members.size()) >= grid.max_points_per_pillar) {
      ++set.dropped_truncated;
      continue;
    }
    members.push_back(k);
  }
  const int raw_width = raw_feature_width(source);
  for (auto & [cell, members] : cells) {
    Pillar p;
    p.i = cell.first;
    p.j = cell.second;
    p.points = members;
    Vec3 mean = Vec3::Zero();
    for (auto k : members) {
      mean += Vec3(cloud[k].x, cloud[k].y, cloud[k].z);
    }
    mean /= static_cast<double>(members.size());
    const Vec2 center = grid.cell_center(p.i, p.j);
    p.features.resize(static_cast<Eigen::Index>(members.size()), raw_width + 5);
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto & pt = cloud[members[r]];
      const auto row = static_cast<Eigen::Index>(r);
      extract(pt, p.features.row(row).head(raw_width));
      p.features(row, raw_width + 0) = pt.x - center.x();
      p.features(row, raw_width + 1) = pt.y - center.y();
      p.features(row, raw_width + 2) = pt.x - mean.x();
      p.features(row, raw_width + 3) = pt.y - mean.y();
      p.features(row, raw_width + 4) = pt.z - mean.z();
    }
    set.pillars.push_back(std::move(p));
  }
  return set;
}

}  // namespace

PillarSet pillarize(const EnhancedRadarCloud & cloud, const GridSpec & grid)
{
  return build(cloud, grid, PillarSource::Radar, [](const EnhancedRadarPoint & p, auto row) {
    row << p.z, p.rcs, p.v_rel, p.v_abs, static_cast<double>(p.t), p.v_mag, p.v_sq, p.v_dir;
  });
}

PillarSet pillarize(const LidarCloud & cloud, const GridSpec & grid)
{
  return build(cloud, grid, PillarSource::Lidar, [](const LidarPoint & p, auto row) { row << p.z, p.intensity; });
}

PillarEncoder::PillarEncoder(PillarSource source, int channels)
: linear(pillar_feature_width(source), channels), source_(source)
{
  if (source == PillarSource::Radar) {
    scale_ = {0.5, 0.1, 0.1, 0.2, 0.25, 0.2, 0.04, 1.0};
  } else {
    scale_ = {0.5, 1.0};
  }
  // offsets in units of roughly a cell
  scale_.insert(scale_.end(), {2.0, 2.0, 2.0, 2.0, 2.0});
}

FeatureMap PillarEncoder::forward(const PillarSet & pillars, Cache * cache) const
{
  if (pillars.source != source_) {
    fail(ErrorCode::ShapeMismatch, "pillar set and encoder disagree on the input modality");
  }
  const int c_out = channels();
  FeatureMap map = pillars.grid.empty_map(c_out);
  Eigen::Index rows = 0;
  for (const auto & p : pillars.pillars) {
    rows += p.features.rows();
  }
  Mat x(rows, linear.in());
  Eigen::Index r = 0;
  for (const auto & p : pillars.pillars) {
    x.middleRows(r, p.features.rows()) = p.features;
    r += p.features.rows();
  }
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    x.col(c) *= scale_[static_cast<std::size_t>(c)];
  }
  Mat h = linear.forward(x).cwiseMax(0.0);
  std::vector<int> argmax(pillars.pillars.size() * static_cast<std::size_t>(c_out), 0);
  r = 0;
  for (std::size_t k = 0; k < pillars.pillars.size(); ++k) {
    const auto & p = pillars.pillars[k];
    const auto n = p.features.rows();
    for (int c = 0; c < c_out; ++c) {
      auto best = r;
      for (auto q = r + 1; q < r + n; ++q) {
        if (h(q, c) > h(best, c)) {
          best = q;
        }
      }
      map.at(c, p.i, p.j) = h(best, c);
      argmax[k * static_cast<std::size_t>(c_out) + static_cast<std::size_t>(c)] = static_cast<int>(best);
    }
    r += n;
  }
  if (cache != nullptr) {
    cache->input = std::move(x);
    cache->activations = std::move(h);
    cache->argmax = std::move(argmax);
  }
  return map;
}

void PillarEncoder::backward(const PillarSet & pillars, const Cache & cache, const FeatureMap & d_map)
{
  const int c_out = channels();
  Mat dh = Mat::Zero(cache.activations.rows(), c_out);
  for (std::size_t k = 0; k < pillars.pillars.size(); ++k) {
    const auto & p = pillars.pillars[k];
    for (int c = 0; c < c_out; ++c) {
      const int row = cache.argmax[k * static_cast<std::size_t>(c_out) + static_cast<std::size_t>(c)];
      if (cache.activations(row, c) > 0.0) {
        dh(row, c) += d_map.at(c, p.i, p.j);
      }
    }
  }
  linear.backward_params(cache.input, dh);
}

void PillarEncoder::init(Rng & rng)
{
  linear.init(rng);
}

void PillarEncoder::visit(const std::string & prefix, const ParamVisitor & f)
{
  linear.visit(prefix, f);
}

}  // namespace moralkit
