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

#ifndef MORALKIT__SVG_HPP_
#define MORALKIT__SVG_HPP_

#include "moralkit/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace moralkit
{

struct SvgOptions
{
  double x_min = 0.0;
  double x_max = 51.2;
  double y_min = -25.6;
  double y_max = 25.6;
  double pixels_per_meter = 12.0;
  std::string title;
};

struct BevScene
{
  RadarCloud points;
  std::vector<std::uint8_t> moving;  // optional, per point
  std::vector<Box3D> ground_truth;
  std::vector<Detection> detections;
};

/// Bird's-eye view with x pointing up the page and y to the left. Output is
/// a pure function of the inputs (fixed number formatting, no timestamps).
std::string render_bev_svg(const BevScene & scene, const SvgOptions & options = {});

}  // namespace moralkit

#endif  // MORALKIT__SVG_HPP_
