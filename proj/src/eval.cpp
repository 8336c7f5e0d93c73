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

#include "moralkit/eval.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace moralkit
{

double polygon_area(const Polygon & poly)
{
  double twice = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 & a = poly[k];
    const Vec2 & b = poly[(k + 1) % poly.size()];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(twice);
}

Polygon clip_convex(const Polygon & subject, const Polygon & clip)
{
  Polygon out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2 & a = clip[e];
    const Vec2 & b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto side = [&](const Vec2 & p) { return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x()); };
    Polygon in = std::move(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Vec2 & p = in[k];
      const Vec2 & q = in[(k + 1) % in.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) {
        out.push_back(p);
      }
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double bev_iou(const Box3D & a, const Box3D & b)
{
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const Polygon pa(ca.begin(), ca.end());
  const Polygon pb(cb.begin(), cb.end());
  const double area_a = polygon_area(pa);
  const double area_b = polygon_area(pb);
  if (area_a <= 0.0 || area_b <= 0.0) {
    return 0.0;
  }
  const double inter = polygon_area(clip_convex(pa, pb));
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

// ---------------------------------------------------------------------------

RegionSpec RegionSpec::entire_area()
{
  return {};
}

RegionSpec RegionSpec::driving_corridor()
{
  return {RegionKind::DrivingCorridor, "driving_corridor", 0.0, 25.0, -4.0, 4.0};
}

void RegionSpec::validate() const
{
  if (!(x_max > x_min) || !(y_max > y_min)) {
    fail(ErrorCode::InvalidConfig, "region '" + name + "' has a degenerate rectangle");
  }
}

bool RegionSpec::contains(double x, double y) const
{
  return x >= x_min && x < x_max && y >= y_min && y < y_max;
}

std::vector<Box3D> region_filter(std::span<const Box3D> boxes, const RegionSpec & region)
{
  region.validate();
  std::vector<Box3D> out;
  for (const auto & b : boxes) {
    if (region.contains(b.center.x(), b.center.y())) {
      out.push_back(b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ApResult average_precision(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truths,
  ObjectClass cls, double iou_threshold, const RegionSpec & region, int recall_points)
{
  if (recall_points < 1) {
    fail(ErrorCode::InvalidConfig, "recall_points must be >= 1");
  }
  std::vector<const GroundTruthBox *> gts;
  for (const auto & g : ground_truths) {
    if (g.box.cls == cls && region.contains(g.box.center.x(), g.box.center.y())) {
      gts.push_back(&g);
    }
  }
  std::vector<const Detection *> dets;
  for (const auto & d : detections) {
    if (d.box.cls == cls && region.contains(d.box.center.x(), d.box.center.y())) {
      dets.push_back(&d);
    }
  }
  std::stable_sort(dets.begin(), dets.end(), [](const Detection * a, const Detection * b) { return a->score > b->score; });

  ApResult result;
  result.ground_truths = gts.size();
  result.detections = dets.size();
  if (gts.empty()) {
    return result;
  }
  std::vector<std::uint8_t> matched(gts.size(), 0);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const auto & d = *dets[k];
    double best_iou = 0.0;
    std::size_t best = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] != 0 || gts[g]->frame_id != d.frame_id) {
        continue;
      }
      const double iou = bev_iou(d.box, gts[g]->box);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < gts.size() && best_iou >= iou_threshold) {
      matched[best] = 1;
      ++tp;
    }
    const bool boundary = k + 1 == dets.size() || dets[k + 1]->score != d.score;
    if (boundary) {
      result.curve.push_back({d.score, static_cast<double>(tp) / static_cast<double>(gts.size()),
        static_cast<double>(tp) / static_cast<double>(k + 1)});
    }
  }
  result.true_positives = tp;
  double sum = 0.0;
  for (int r = 1; r <= recall_points; ++r) {
    const double level = static_cast<double>(r) / recall_points;
    double best = 0.0;
    for (const auto & p : result.curve) {
      if (p.recall >= level - 1e-12) {
        best = std::max(best, p.precision);
      }
    }
    sum += best;
  }
  result.ap = sum / recall_points;
  return result;
}

void EvalConfig::validate() const
{
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      fail(ErrorCode::InvalidConfig, "eval IoU thresholds must lie in (0, 1]");
    }
  }
  for (const auto & r : regions) {
    r.validate();
  }
  if (recall_points < 1) {
    fail(ErrorCode::InvalidConfig, "eval.recall_points must be >= 1");
  }
}

// ---------------------------------------------------------------------------

MosMetrics & MosMetrics::operator+=(const MosMetrics & other)
{
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  finalize();
  return *this;
}

void MosMetrics::finalize()
{
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  accuracy = ratio(tp + tn, tp + tn + fp + fn);
  moving_iou = ratio(tp, tp + fp + fn);
  precision = ratio(tp, tp + fp);
  recall = ratio(tp, tp + fn);
}

MosMetrics mos_metrics(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth)
{
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "mask has " + std::to_string(predicted.size()) + " entries, labels have " +
                                      std::to_string(truth.size()));
  }
  MosMetrics m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    m.tp += (p && t) ? 1 : 0;
    m.fp += (p && !t) ? 1 : 0;
    m.fn += (!p && t) ? 1 : 0;
    m.tn += (!p && !t) ? 1 : 0;
  }
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double q)
{
  if (values.empty()) {
    fail(ErrorCode::TooFewPoints, "percentile of an empty set");
  }
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::size_t> associate_points(const RadarCloud & cloud, const Box3D & box, double scale)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double half_l = 0.5 * scale * box.size.x();
  const double half_w = 0.5 * scale * box.size.y();
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const double dx = cloud[k].x - box.center.x();
    const double dy = cloud[k].y - box.center.y();
    const double along = c * dx + s * dy;
    const double across = -s * dx + c * dy;
    if (std::abs(along) <= half_l && std::abs(across) <= half_w) {
      idx.push_back(k);
    }
  }
  return idx;
}

double tail_elongation(const RadarCloud & accumulated, const Box3D & gt_box, const Vec2 & motion_dir,
  int reference_frame)
{
  const double norm = motion_dir.norm();
  if (!(norm > 0.0)) {
    fail(ErrorCode::DegenerateInput, "motion direction must be non-zero");
  }
  const Vec2 dir = motion_dir / norm;
  std::vector<double> all;
  std::vector<double> single;
  for (auto k : associate_points(accumulated, gt_box)) {
    const double proj = dir.x() * accumulated[k].x + dir.y() * accumulated[k].y;
    all.push_back(proj);
    if (accumulated[k].t == reference_frame) {
      single.push_back(proj);
    }
  }
  if (all.size() < 2 || single.size() < 2) {
    fail(ErrorCode::TooFewPoints, "tail elongation needs at least 2 associated points per cloud, got " +
                                    std::to_string(all.size()) + " and " + std::to_string(single.size()));
  }
  auto spread = [](const std::vector<double> & v) { return percentile(v, 95.0) - percentile(v, 5.0); };
  return spread(all) - spread(single);
}

// ---------------------------------------------------------------------------

EvalReport evaluate_detections(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truths,
  const EvalConfig & config, std::size_t frames)
{
  config.validate();
  EvalReport report;
  report.frames = frames;
  report.detections = detections.size();
  for (const auto & region : config.regions) {
    RegionMetrics m;
    m.region = region.name;
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto r = average_precision(detections, ground_truths, kAllClasses[c], config.iou_thresholds[c], region,
        config.recall_points);
      m.ap[c] = r.ap;
      m.ground_truths[c] = r.ground_truths;
      sum += r.ap;
    }
    m.map = sum / static_cast<double>(kNumClasses);
    report.regions.push_back(m);
  }
  return report;
}

nlohmann::json to_json(const MosMetrics & m)
{
  return {{"accuracy", m.accuracy}, {"moving_iou", m.moving_iou}, {"precision", m.precision}, {"recall", m.recall},
    {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
}

nlohmann::json to_json(const EvalReport & report)
{
  nlohmann::json j;
  j["frames"] = report.frames;
  j["detections"] = report.detections;
  j["regions"] = nlohmann::json::array();
  for (const auto & r : report.regions) {
    nlohmann::json rj;
    rj["region"] = r.region;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const std::string name(class_name(kAllClasses[c]));
      rj["ap"][name] = r.ap[c];
      rj["ground_truths"][name] = r.ground_truths[c];
    }
    rj["map"] = r.map;
    j["regions"].push_back(rj);
  }
  if (report.mos) {
    j["mos"] = to_json(*report.mos);
  }
  if (report.tail_elongation) {
    j["tail_elongation"] = *report.tail_elongation;
  }
  return j;
}

std::string format_table(const EvalReport & report)
{
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-18s %8s %11s %9s %8s\n", "Region", "Car", "Pedestrian", "Cyclist", "mAP");
  os << line;
  for (const auto & r : report.regions) {
    std::snprintf(line, sizeof(line), "%-18s %8.2f %11.2f %9.2f %8.2f\n", r.region.c_str(), 100.0 * r.ap[0],
      100.0 * r.ap[1], 100.0 * r.ap[2], 100.0 * r.map);
    os << line;
  }
  if (report.mos) {
    std::snprintf(line, sizeof(line), "MOS  moving-IoU %.4f  precision %.4f  recall %.4f  accuracy %.4f\n",
      report.mos->moving_iou, report.mos->precision, report.mos->recall, report.mos->accuracy);
    os << line;
  }
  if (report.tail_elongation) {
    std::snprintf(line, sizeof(line), "Tail elongation  %.3f m\n", *report.tail_elongation);
    os << line;
  }
  return os.str();
}

}  // namespace moralkit
