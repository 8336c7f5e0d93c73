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

#include "support.hpp"

#include "moralkit/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace moralkit::testing
{

double relative_error(double analytic, double numeric, double floor)
{
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult check_param_gradients(const ParamList & params, const std::function<double()> & loss,
  std::size_t samples, std::uint64_t seed, double step, double tolerance, double floor)
{
  std::vector<std::pair<std::size_t, Eigen::Index>> entries;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index k = 0; k < params[p].second->value.size(); ++k) {
      entries.emplace_back(p, k);
    }
  }
  Rng rng(seed);
  for (std::size_t k = entries.size(); k > 1; --k) {
    std::swap(entries[k - 1], entries[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
  }
  entries.resize(std::min(samples, entries.size()));

  GradCheckResult result;
  for (const auto & [p, k] : entries) {
    Param & param = *params[p].second;
    double & x = param.value.data()[k];
    const double saved = x;
    x = saved + step;
    const double up = loss();
    x = saved - step;
    const double down = loss();
    x = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = param.grad.data()[k];
    const double rel = relative_error(analytic, numeric, floor);
    ++result.checked;
    if (rel > tolerance) {
      ++result.failed;
    }
    if (rel >= result.worst_relative) {
      result.worst_relative = rel;
      result.worst_name = params[p].first + "[" + std::to_string(k) + "]";
    }
  }
  return result;
}

Mat numeric_gradient(Mat & x, const std::function<double()> & loss, double step)
{
  Mat g = Mat::Zero(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double saved = x.data()[k];
    x.data()[k] = saved + step;
    const double up = loss();
    x.data()[k] = saved - step;
    const double down = loss();
    x.data()[k] = saved;
    g.data()[k] = (up - down) / (2.0 * step);
  }
  return g;
}

Mat random_matrix(Rng & rng, Eigen::Index rows, Eigen::Index cols, double scale)
{
  Mat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m.data()[k] = rng.uniform(-scale, scale);
  }
  return m;
}

FeatureMap random_map(Rng & rng, int channels, int height, int width, double scale)
{
  FeatureMap m(channels, height, width);
  for (auto & v : m.data()) {
    v = rng.uniform(-scale, scale);
  }
  return m;
}

double dot(const FeatureMap & out, const FeatureMap & weights)
{
  return out.matrix().cwiseProduct(weights.matrix()).sum();
}

// ---------------------------------------------------------------------------

double brute_force_ap(const std::vector<Detection> & detections, const std::vector<GroundTruthBox> & ground_truths,
  ObjectClass cls, double iou_threshold, int recall_points)
{
  std::vector<GroundTruthBox> gts;
  for (const auto & g : ground_truths) {
    if (g.box.cls == cls) {
      gts.push_back(g);
    }
  }
  if (gts.empty()) {
    return 0.0;
  }
  std::vector<Detection> dets;
  for (const auto & d : detections) {
    if (d.box.cls == cls) {
      dets.push_back(d);
    }
  }
  std::stable_sort(dets.begin(), dets.end(), [](const Detection & a, const Detection & b) { return a.score > b.score; });

  std::vector<double> cutoffs;
  for (const auto & d : dets) {
    if (std::find(cutoffs.begin(), cutoffs.end(), d.score) == cutoffs.end()) {
      cutoffs.push_back(d.score);
    }
  }
  struct Point
  {
    std::size_t tp;
    std::size_t count;
  };
  std::vector<Point> points;
  for (double cut : cutoffs) {
    std::vector<bool> used(gts.size(), false);
    std::size_t tp = 0;
    std::size_t count = 0;
    for (const auto & d : dets) {
      if (d.score < cut) {
        continue;
      }
      ++count;
      double best = 0.0;
      std::size_t arg = gts.size();
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].frame_id != d.frame_id) {
          continue;
        }
        const double iou = bev_iou(d.box, gts[g].box);
        if (iou > best) {
          best = iou;
          arg = g;
        }
      }
      if (arg < gts.size() && best >= iou_threshold) {
        used[arg] = true;
        ++tp;
      }
    }
    points.push_back({tp, count});
  }
  const auto n = static_cast<std::int64_t>(gts.size());
  double sum = 0.0;
  for (int r = 1; r <= recall_points; ++r) {
    double best = 0.0;
    for (const auto & p : points) {
      // recall tp / n >= r / R  <=>  tp * R >= r * n
      if (static_cast<std::int64_t>(p.tp) * recall_points >= static_cast<std::int64_t>(r) * n) {
        best = std::max(best, static_cast<double>(p.tp) / static_cast<double>(p.count));
      }
    }
    sum += best;
  }
  return sum / recall_points;
}

// ---------------------------------------------------------------------------

bool inside_bev(const Box3D & box, double x, double y)
{
  const double dx = x - box.center.x();
  const double dy = y - box.center.y();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return std::abs(c * dx + s * dy) <= 0.5 * box.size.x() && std::abs(-s * dx + c * dy) <= 0.5 * box.size.y();
}

double monte_carlo_iou(const Box3D & a, const Box3D & b, std::size_t samples, std::uint64_t seed)
{
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto & box : {a, b}) {
    for (const auto & c : bev_corners(box)) {
      x0 = std::min(x0, c.x());
      x1 = std::max(x1, c.x());
      y0 = std::min(y0, c.y());
      y1 = std::max(y1, c.y());
    }
  }
  Rng rng(seed);
  std::size_t in_a = 0, in_b = 0, both = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double x = rng.uniform(x0, x1);
    const double y = rng.uniform(y0, y1);
    const bool ia = inside_bev(a, x, y);
    const bool ib = inside_bev(b, x, y);
    in_a += ia;
    in_b += ib;
    both += ia && ib;
  }
  const auto uni = in_a + in_b - both;
  return uni == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(uni);
}

void fit_plane(const std::vector<Vec3> & points, Vec3 & normal, double & offset)
{
  Vec3 mean = Vec3::Zero();
  for (const auto & p : points) {
    mean += p;
  }
  mean /= static_cast<double>(points.size());
  Eigen::MatrixXd centered(points.size(), 3);
  for (std::size_t k = 0; k < points.size(); ++k) {
    centered.row(static_cast<Eigen::Index>(k)) = (points[k] - mean).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  normal = svd.matrixV().col(2);
  if (normal.z() < 0.0) {
    normal = -normal;
  }
  offset = -normal.dot(mean);
}

// ---------------------------------------------------------------------------

Box3D random_box(Rng & rng, ObjectClass cls)
{
  Box3D b;
  b.cls = cls;
  b.center = Vec3(rng.uniform(0.0, 30.0), rng.uniform(-10.0, 10.0), rng.uniform(0.5, 1.0));
  b.size = Vec3(rng.uniform(0.5, 5.0), rng.uniform(0.5, 2.5), rng.uniform(1.0, 2.0));
  b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return b;
}

RadarCloud random_radar_cloud(Rng & rng, std::size_t n, double extent)
{
  RadarCloud cloud(n);
  for (auto & p : cloud) {
    p.x = rng.uniform(1.0, extent);
    p.y = rng.uniform(-extent / 2, extent / 2);
    p.z = rng.uniform(-0.5, 2.0);
    p.rcs = rng.uniform(-10.0, 15.0);
    p.v_abs = rng.bernoulli(0.4) ? rng.uniform(-12.0, 12.0) : rng.normal(0.0, 0.1);
    p.v_rel = p.v_abs - rng.uniform(0.0, 5.0);
    p.t = -static_cast<int>(rng.uniform_int(0, 4));
  }
  return cloud;
}

EnhancedRadarCloud random_enhanced_cloud(Rng & rng, std::size_t n, double extent)
{
  const auto raw = random_radar_cloud(rng, n, extent);
  EnhancedRadarCloud out;
  out.reserve(n);
  for (const auto & p : raw) {
    out.push_back(enhance(p));
  }
  return out;
}

}  // namespace moralkit::testing
