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

#ifndef MORALKIT__EVAL_HPP_
#define MORALKIT__EVAL_HPP_

#include "moralkit/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace moralkit
{

// ---------------------------------------------------------------------------
// Geometry

using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon & poly);
/// Sutherland-Hodgman clip of `subject` against the convex CCW `clip`.
Polygon clip_convex(const Polygon & subject, const Polygon & clip);

/// Intersection over union of the yaw-rotated BEV footprints.
double bev_iou(const Box3D & a, const Box3D & b);

// ---------------------------------------------------------------------------
// Regions

enum class RegionKind
{
  EntireArea,
  DrivingCorridor,
  Custom,
};

struct RegionSpec
{
  RegionKind kind = RegionKind::EntireArea;
  std::string name = "entire_area";
  double x_min = -std::numeric_limits<double>::infinity();
  double x_max = std::numeric_limits<double>::infinity();
  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();

  static RegionSpec entire_area();
  /// x in [0, 25), y in [-4, 4).
  static RegionSpec driving_corridor();

  void validate() const;
  /// Half-open bounds [min, max).
  bool contains(double x, double y) const;
};

std::vector<Box3D> region_filter(std::span<const Box3D> boxes, const RegionSpec & region);

// ---------------------------------------------------------------------------
// Average precision

struct GroundTruthBox
{
  Box3D box;
  int frame_id = 0;
};

struct PrPoint
{
  double score = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult
{
  double ap = 0.0;
  std::size_t ground_truths = 0;
  std::size_t detections = 0;
  std::size_t true_positives = 0;
  std::vector<PrPoint> curve;  // one point per distinct score, descending
};

inline constexpr int kDefaultRecallPoints = 40;

/// Greedy matching in descending score order (ties keep input order); a
/// detection matches the unmatched same-class, same-frame GT of highest IoU
/// if that IoU reaches `iou_threshold`. Precision is interpolated at recall
/// levels k / recall_points, k = 1..recall_points. AP is 0 without GTs.
ApResult average_precision(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truths,
  ObjectClass cls, double iou_threshold, const RegionSpec & region = RegionSpec::entire_area(),
  int recall_points = kDefaultRecallPoints);

struct EvalConfig
{
  std::array<double, kNumClasses> iou_thresholds{0.50, 0.25, 0.25};
  std::vector<RegionSpec> regions{RegionSpec::entire_area(), RegionSpec::driving_corridor()};
  int recall_points = kDefaultRecallPoints;

  void validate() const;
};

struct RegionMetrics
{
  std::string region;
  std::array<double, kNumClasses> ap{};
  std::array<std::size_t, kNumClasses> ground_truths{};
  double map = 0.0;
};

// ---------------------------------------------------------------------------
// Motion segmentation

struct MosMetrics
{
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double accuracy = 1.0;
  double moving_iou = 1.0;
  double precision = 1.0;
  double recall = 1.0;

  MosMetrics & operator+=(const MosMetrics & other);
  /// Recomputes the ratios from the counts; an empty denominator gives 1.
  void finalize();
};

/// Throws LengthMismatch.
MosMetrics mos_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

// ---------------------------------------------------------------------------
// Tail elongation

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Points whose BEV position lies in the box footprint scaled by 2.
std::vector<std::size_t> associate_points(const RadarCloud & cloud, const Box3D & box, double scale = 2.0);

/// (95th - 5th percentile) spread of the associated points along
/// `motion_dir`, minus the same spread over the points with
/// t == reference_frame. Throws TooFewPoints with fewer than 2 points in
/// either set.
double tail_elongation(const RadarCloud & accumulated, const Box3D & gt_box, const Vec2 & motion_dir,
  int reference_frame = 0);

// ---------------------------------------------------------------------------
// Reports

struct EvalReport
{
  std::vector<RegionMetrics> regions;
  std::optional<MosMetrics> mos;
  std::optional<double> tail_elongation;
  std::size_t frames = 0;
  std::size_t detections = 0;
};

EvalReport evaluate_detections(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truths,
  const EvalConfig & config, std::size_t frames);

nlohmann::json to_json(const MosMetrics & m);
nlohmann::json to_json(const EvalReport & report);
/// Aligned text table: one row per region, AP per class and mAP in percent.
std::string format_table(const EvalReport & report);

}  // namespace moralkit

#endif  // MORALKIT__EVAL_HPP_
