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

#include "moralkit/mre.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace moralkit
{

EnhancedRadarCloud velocity_encode(const RadarCloud & cloud)
{
  EnhancedRadarCloud out;
  out.reserve(cloud.size());
  for (const auto & p : cloud) {
    out.push_back(enhance(p));
  }
  return out;
}

Mat feature_matrix(const EnhancedRadarCloud & cloud)
{
  Mat m(static_cast<Eigen::Index>(cloud.size()), static_cast<Eigen::Index>(kEnhancedWidth));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto f = cloud[i].features();
    for (std::size_t c = 0; c < kEnhancedWidth; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f[c];
    }
  }
  return m;
}

Mat position_matrix(const EnhancedRadarCloud & cloud)
{
  Mat m(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = cloud[i].x;
    m(r, 1) = cloud[i].y;
    m(r, 2) = cloud[i].z;
  }
  return m;
}

void VelocityAttention::visit(const std::string & prefix, const ParamVisitor & f)
{
  f(prefix + ".weight", weight);
  f(prefix + ".bias", bias);
}

AttentionOutput velocity_attention(const Mat & features, const VelocityAttention & params)
{
  if (features.cols() != static_cast<Eigen::Index>(kEnhancedWidth)) {
    fail(ErrorCode::ShapeMismatch, "velocity attention expects " + std::to_string(kEnhancedWidth) + " channels");
  }
  AttentionOutput out;
  out.features = features;
  const Eigen::VectorXd logits = features * params.weight.value.transpose();
  out.weights.resize(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double a = sigmoid(logits(i) + params.bias.value(0, 0));
    out.weights(i) = a;
    for (int c : kVelocityChannels) {
      out.features(i, c) *= a;
    }
  }
  return out;
}

void velocity_attention_backward(const Mat & features, const AttentionOutput & out, const Mat & d_features,
  VelocityAttention & params)
{
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double da = 0.0;
    for (int c : kVelocityChannels) {
      da += d_features(i, c) * features(i, c);
    }
    const double a = out.weights(i);
    const double dz = da * a * (1.0 - a);
    params.weight.grad.row(0) += dz * features.row(i);
    params.bias.grad(0, 0) += dz;
  }
}

// ---------------------------------------------------------------------------

std::vector<int> farthest_point_sample(const Mat & positions, int count)
{
  const auto n = static_cast<int>(positions.rows());
  if (count < 1 || count > n) {
    fail(ErrorCode::TooFewPoints,
      "cannot sample " + std::to_string(count) + " centroids from " + std::to_string(n) + " points");
  }
  const RowVec mean = positions.colwise().mean();
  int start = 0;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = (positions.row(i) - mean).squaredNorm();
    if (d > best) {
      best = d;
      start = i;
    }
  }
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int current = start;
  for (int s = 0; s < count; ++s) {
    picked.push_back(current);
    const double cx = positions(current, 0);
    const double cy = positions(current, 1);
    const double cz = positions(current, 2);
    int next = 0;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      const double dx = positions(i, 0) - cx;
      const double dy = positions(i, 1) - cy;
      const double dz = positions(i, 2) - cz;
      auto & d = dist[static_cast<std::size_t>(i)];
      d = std::min(d, dx * dx + dy * dy + dz * dz);
      if (d > far) {
        far = d;
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

std::vector<std::vector<int>> ball_query(const Mat & positions, const std::vector<int> & centroids, double radius,
  int max_neighbors)
{
  const double r2 = radius * radius;
  const auto n = static_cast<int>(positions.rows());
  std::vector<std::vector<int>> groups(centroids.size());
  std::vector<std::pair<double, int>> found;
  for (std::size_t m = 0; m < centroids.size(); ++m) {
    const auto c = centroids[m];
    found.clear();
    for (int j = 0; j < n; ++j) {
      const double d = (positions.row(j) - positions.row(c)).squaredNorm();
      if (d <= r2) {
        found.emplace_back(d, j);
      }
    }
    const auto keep = std::min<std::size_t>(found.size(), static_cast<std::size_t>(max_neighbors));
    std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(keep), found.end());
    auto & g = groups[m];
    g.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      g.push_back(found[k].second);
    }
  }
  return groups;
}

PointSet sa_layer(const PointSet & input, const SaSpec & spec, const Mlp & mlp, SaCache * cache)
{
  const auto n = static_cast<int>(input.positions.rows());
  const auto c_in = static_cast<int>(input.features.cols());
  if (input.features.rows() != n || mlp.in() != 3 + c_in) {
    fail(ErrorCode::ShapeMismatch, "set abstraction input does not match its MLP");
  }
  const auto centroids = farthest_point_sample(input.positions, spec.samples);
  const auto groups = ball_query(input.positions, centroids, spec.radius, spec.max_neighbors);

  std::vector<int> offsets(groups.size() + 1, 0);
  for (std::size_t m = 0; m < groups.size(); ++m) {
    offsets[m + 1] = offsets[m] + static_cast<int>(groups[m].size());
  }
  Mat grouped(offsets.back(), 3 + c_in);
  std::vector<int> members;
  members.reserve(static_cast<std::size_t>(offsets.back()));
  const double inv_r = 1.0 / spec.radius;
  for (std::size_t m = 0; m < groups.size(); ++m) {
    const int c = centroids[m];
    for (std::size_t k = 0; k < groups[m].size(); ++k) {
      const int j = groups[m][k];
      const int row = offsets[m] + static_cast<int>(k);
      grouped.block(row, 0, 1, 3) = (input.positions.row(j) - input.positions.row(c)) * inv_r;
      grouped.block(row, 3, 1, c_in) = input.features.row(j);
      members.push_back(j);
    }
  }
  Mlp::Cache mlp_cache;
  const Mat h = mlp.forward(grouped, cache != nullptr ? &mlp_cache : nullptr);

  const auto c_out = static_cast<int>(h.cols());
  PointSet out;
  out.positions.resize(static_cast<Eigen::Index>(centroids.size()), 3);
  out.features.resize(static_cast<Eigen::Index>(centroids.size()), c_out);
  std::vector<int> argmax(centroids.size() * static_cast<std::size_t>(c_out));
  for (std::size_t m = 0; m < centroids.size(); ++m) {
    const auto r = static_cast<Eigen::Index>(m);
    out.positions.row(r) = input.positions.row(centroids[m]);
    for (int ch = 0; ch < c_out; ++ch) {
      int best = offsets[m];
      for (int row = offsets[m] + 1; row < offsets[m + 1]; ++row) {
        if (h(row, ch) > h(best, ch)) {
          best = row;
        }
      }
      out.features(r, ch) = h(best, ch);
      argmax[m * static_cast<std::size_t>(c_out) + static_cast<std::size_t>(ch)] = best;
    }
  }
  if (cache != nullptr) {
    cache->centroids = centroids;
    cache->group_offsets = std::move(offsets);
    cache->neighbor_index = std::move(members);
    cache->mlp = std::move(mlp_cache);
    cache->argmax = std::move(argmax);
    cache->input_points = n;
    cache->input_channels = c_in;
  }
  return out;
}

Mat sa_layer_backward(const SaCache & cache, const Mat & d_output, Mlp & mlp)
{
  const auto m_count = static_cast<Eigen::Index>(cache.centroids.size());
  const auto c_out = d_output.cols();
  Mat dh = Mat::Zero(static_cast<Eigen::Index>(cache.neighbor_index.size()), c_out);
  for (Eigen::Index m = 0; m < m_count; ++m) {
    for (Eigen::Index ch = 0; ch < c_out; ++ch) {
      const auto row = cache.argmax[static_cast<std::size_t>(m * c_out + ch)];
      dh(row, ch) += d_output(m, ch);
    }
  }
  const Mat dg = mlp.backward(cache.mlp, std::move(dh));
  Mat d_in = Mat::Zero(cache.input_points, cache.input_channels);
  for (std::size_t row = 0; row < cache.neighbor_index.size(); ++row) {
    d_in.row(cache.neighbor_index[row]) += dg.block(static_cast<Eigen::Index>(row), 3, 1, cache.input_channels);
  }
  return d_in;
}

Mat fp_layer(const PointSet & coarse, const Mat & fine_positions, const Mat & skip, const Mlp & mlp, FpCache * cache)
{
  const auto n_coarse = static_cast<int>(coarse.positions.rows());
  if (n_coarse == 0) {
    fail(ErrorCode::EmptyCoarseSet, "feature propagation needs at least one coarse point");
  }
  const auto n_fine = static_cast<int>(fine_positions.rows());
  const auto c_coarse = static_cast<int>(coarse.features.cols());
  const auto c_skip = static_cast<int>(skip.cols());
  if (skip.rows() != n_fine || mlp.in() != c_coarse + c_skip) {
    fail(ErrorCode::ShapeMismatch, "feature propagation input does not match its MLP");
  }
  const int k_max = std::min(3, n_coarse);
  std::vector<std::array<int, 3>> nbr(static_cast<std::size_t>(n_fine));
  std::vector<std::array<double, 3>> wts(static_cast<std::size_t>(n_fine));
  Mat x(n_fine, c_coarse + c_skip);
  for (int i = 0; i < n_fine; ++i) {
    std::array<std::pair<double, int>, 3> best;
    best.fill({std::numeric_limits<double>::infinity(), std::numeric_limits<int>::max()});
    for (int j = 0; j < n_coarse; ++j) {
      const std::pair<double, int> cand{(fine_positions.row(i) - coarse.positions.row(j)).squaredNorm(), j};
      if (cand < best[2]) {
        best[2] = cand;
        if (best[2] < best[1]) {
          std::swap(best[2], best[1]);
          if (best[1] < best[0]) {
            std::swap(best[1], best[0]);
          }
        }
      }
    }
    double total = 0.0;
    auto & w = wts[static_cast<std::size_t>(i)];
    auto & idx = nbr[static_cast<std::size_t>(i)];
    w.fill(0.0);
    idx.fill(0);
    for (int k = 0; k < k_max; ++k) {
      idx[static_cast<std::size_t>(k)] = best[static_cast<std::size_t>(k)].second;
      w[static_cast<std::size_t>(k)] = 1.0 / (std::sqrt(best[static_cast<std::size_t>(k)].first) + 1e-8);
      total += w[static_cast<std::size_t>(k)];
    }
    x.block(i, 0, 1, c_coarse).setZero();
    for (int k = 0; k < k_max; ++k) {
      w[static_cast<std::size_t>(k)] /= total;
      x.block(i, 0, 1, c_coarse) += w[static_cast<std::size_t>(k)] * coarse.features.row(idx[static_cast<std::size_t>(k)]);
    }
    x.block(i, c_coarse, 1, c_skip) = skip.row(i);
  }
  Mlp::Cache mlp_cache;
  Mat out = mlp.forward(x, cache != nullptr ? &mlp_cache : nullptr);
  if (cache != nullptr) {
    cache->neighbors = std::move(nbr);
    cache->weights = std::move(wts);
    cache->neighbor_count.assign(static_cast<std::size_t>(n_fine), k_max);
    cache->mlp = std::move(mlp_cache);
    cache->coarse_points = n_coarse;
    cache->coarse_channels = c_coarse;
    cache->skip_channels = c_skip;
  }
  return out;
}

FpGradients fp_layer_backward(const FpCache & cache, const Mat & d_output, Mlp & mlp)
{
  const Mat dx = mlp.backward(cache.mlp, d_output);
  FpGradients g;
  g.d_coarse = Mat::Zero(cache.coarse_points, cache.coarse_channels);
  g.d_skip = dx.rightCols(cache.skip_channels);
  for (std::size_t i = 0; i < cache.neighbors.size(); ++i) {
    for (int k = 0; k < cache.neighbor_count[i]; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      g.d_coarse.row(cache.neighbors[i][kk]) +=
        cache.weights[i][kk] * dx.block(static_cast<Eigen::Index>(i), 0, 1, cache.coarse_channels);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

MosSpec default_mos_spec()
{
  MosSpec s;
  s.sa[0] = {256, 1.0, {32, 32, 64}, 32};
  s.sa[1] = {64, 2.0, {64, 64, 128}, 32};
  s.sa[2] = {16, 4.0, {128, 128, 256}, 32};
  s.fp[0] = {256, 256};
  s.fp[1] = {256, 128};
  s.fp[2] = {128, 128};
  s.classifier = {64};
  // x y z rcs v_rel v_abs t |v| v^2 sign(v)
  s.input_scale = {1.0 / 25.0, 1.0 / 25.0, 0.5, 0.1, 0.1, 0.2, 0.25, 0.2, 0.04, 1.0};
  return s;
}

MosNetwork::MosNetwork(MosSpec spec) : spec_(std::move(spec))
{
  for (std::size_t l = 0; l + 1 < spec_.sa.size(); ++l) {
    if (spec_.sa[l + 1].samples >= spec_.sa[l].samples) {
      fail(ErrorCode::InvalidConfig, "set-abstraction sample counts must strictly decrease");
    }
  }
  int channels = static_cast<int>(kEnhancedWidth);
  std::array<int, 4> level_channels{channels, 0, 0, 0};
  for (std::size_t l = 0; l < 3; ++l) {
    if (spec_.sa[l].widths.empty() || spec_.sa[l].samples < 1 || !(spec_.sa[l].radius > 0.0)) {
      fail(ErrorCode::InvalidConfig, "invalid set-abstraction level " + std::to_string(l));
    }
    sa[l] = Mlp(3 + channels, spec_.sa[l].widths, true);
    channels = sa[l].out();
    level_channels[l + 1] = channels;
  }
  int carried = level_channels[3];
  for (std::size_t l = 0; l < 3; ++l) {
    if (spec_.fp[l].empty()) {
      fail(ErrorCode::InvalidConfig, "invalid feature-propagation level " + std::to_string(l));
    }
    fp[l] = Mlp(carried + level_channels[2 - l], spec_.fp[l], true);
    carried = fp[l].out();
  }
  auto widths = spec_.classifier;
  widths.push_back(2);
  classifier = Mlp(carried, widths, false);
}

void MosNetwork::init(std::uint64_t seed)
{
  Rng rng(seed, "mos-init");
  for (Eigen::Index c = 0; c < attention.weight.value.cols(); ++c) {
    attention.weight.value(0, c) = static_cast<float>(rng.normal(0.0, 0.1));
  }
  attention.bias.value.setZero();
  for (auto & m : sa) {
    m.init(rng);
  }
  for (auto & m : fp) {
    m.init(rng);
  }
  classifier.init(rng);
}

void MosNetwork::visit(const std::string & prefix, const ParamVisitor & f)
{
  attention.visit(prefix + "attention", f);
  for (std::size_t l = 0; l < 3; ++l) {
    sa[l].visit(prefix + "sa" + std::to_string(l), f);
  }
  for (std::size_t l = 0; l < 3; ++l) {
    fp[l].visit(prefix + "fp" + std::to_string(l), f);
  }
  classifier.visit(prefix + "classifier", f);
}

std::vector<double> MosOutput::moving_probability() const
{
  std::vector<double> p(static_cast<std::size_t>(probabilities.rows()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = probabilities(static_cast<Eigen::Index>(i), 1);
  }
  return p;
}

MosOutput mos_forward(const EnhancedRadarCloud & cloud, const MosNetwork & net, MosCache * cache)
{
  const auto & spec = net.spec();
  const auto n = static_cast<int>(cloud.size());
  if (n < spec.sa[2].samples) {
    fail(ErrorCode::TooFewPoints, "motion segmentation needs at least " + std::to_string(spec.sa[2].samples) +
                                    " points, got " + std::to_string(n));
  }
  Mat x = feature_matrix(cloud);
  for (std::size_t c = 0; c < kEnhancedWidth; ++c) {
    x.col(static_cast<Eigen::Index>(c)) *= spec.input_scale[c];
  }
  AttentionOutput att = velocity_attention(x, net.attention);

  std::array<PointSet, 4> level;
  level[0] = {position_matrix(cloud), att.features};
  int available = n;
  for (std::size_t l = 0; l < 3; ++l) {
    SaSpec s = spec.sa[l];
    s.samples = std::min(s.samples, available);
    level[l + 1] = sa_layer(level[l], s, net.sa[l], cache != nullptr ? &cache->sa[l] : nullptr);
    available = s.samples;
  }
  Mat up = level[3].features;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto & fine = level[2 - l];
    const PointSet coarse{level[3 - l].positions, up};
    up = fp_layer(coarse, fine.positions, fine.features, net.fp[l], cache != nullptr ? &cache->fp[l] : nullptr);
  }
  MosOutput out;
  out.logits = net.classifier.forward(up, cache != nullptr ? &cache->classifier : nullptr);
  out.probabilities.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p1 = sigmoid(out.logits(i, 1) - out.logits(i, 0));
    out.probabilities(i, 0) = 1.0 - p1;
    out.probabilities(i, 1) = p1;
  }
  out.features.sa_positions = level[3].positions;
  out.features.sa_features = level[3].features;
  out.features.fp_features = std::move(up);
  if (cache != nullptr) {
    cache->input = std::move(x);
    cache->attention = std::move(att);
  }
  return out;
}

void mos_backward(const MosCache & cache, const Mat & d_logits, const Mat * d_sa_features, const Mat * d_fp_features,
  MosNetwork & net)
{
  Mat d_up = net.classifier.backward(cache.classifier, d_logits);
  if (d_fp_features != nullptr) {
    d_up += *d_fp_features;
  }
  std::array<Mat, 4> d_level;
  for (std::size_t l = 3; l-- > 0;) {
    // fp[l] produced level (2 - l) from level (3 - l)
    auto g = fp_layer_backward(cache.fp[l], d_up, net.fp[l]);
    d_level[2 - l] = std::move(g.d_skip);
    d_up = std::move(g.d_coarse);
  }
  d_level[3] = std::move(d_up);
  if (d_sa_features != nullptr) {
    d_level[3] += *d_sa_features;
  }
  for (std::size_t l = 3; l-- > 0;) {
    d_level[l] += sa_layer_backward(cache.sa[l], d_level[l + 1], net.sa[l]);
  }
  velocity_attention_backward(cache.input, cache.attention, d_level[0], net.attention);
}

// ---------------------------------------------------------------------------

MotionMask predict_mask(const std::vector<double> & probabilities, double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  MotionMask mask;
  mask.probabilities = probabilities;
  mask.labels.reserve(probabilities.size());
  for (double p : probabilities) {
    mask.labels.push_back(p >= alpha ? 1 : 0);
  }
  return mask;
}

MotionMask mask_from_labels(const std::vector<std::uint8_t> & labels)
{
  MotionMask mask;
  mask.labels = labels;
  mask.probabilities.reserve(labels.size());
  for (auto l : labels) {
    mask.probabilities.push_back(l != 0 ? 1.0 : 0.0);
  }
  return mask;
}

MotionMask threshold_mask(const EnhancedRadarCloud & cloud, double speed_threshold)
{
  std::vector<std::uint8_t> labels;
  labels.reserve(cloud.size());
  for (const auto & p : cloud) {
    labels.push_back(std::abs(p.v_abs) > speed_threshold ? 1 : 0);
  }
  return mask_from_labels(labels);
}

CompensationResult compensate(const EnhancedRadarCloud & cloud, const MotionMask & mask, double tau,
  int target_frame, bool strict)
{
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::InvalidTau, "frame period must be positive, got " + std::to_string(tau));
  }
  if (mask.size() != cloud.size()) {
    fail(ErrorCode::LengthMismatch, "mask has " + std::to_string(mask.size()) + " labels for " +
                                      std::to_string(cloud.size()) + " points");
  }
  CompensationResult result;
  result.cloud.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    RadarPoint p = cloud[i];
    if (mask.labels[i] != 0) {
      const Vec3 pos = p.position();
      if (pos.norm() < kDegenerateRange) {
        if (strict) {
          fail(ErrorCode::DegeneratePoint, "moving point " + std::to_string(i) + " sits at the sensor origin");
        }
        ++result.degenerate;
      } else {
        const double dt = tau * static_cast<double>(target_frame - p.t);
        p.set_position(pos + dt * p.v_abs * radial_unit_vector(pos));
      }
    }
    result.cloud.push_back(p);
  }
  return result;
}

StackedCloud stack_frames(const FrameSequence & seq, int frames, int target)
{
  const auto n = static_cast<int>(seq.frames.size());
  if (target < 0) {
    target = n - 1;
  }
  if (target >= n) {
    fail(ErrorCode::InvalidConfig, "target frame " + std::to_string(target) + " is out of range");
  }
  if (frames < 1 || frames > target + 1) {
    fail(ErrorCode::InvalidConfig, "cannot stack " + std::to_string(frames) + " frames ending at frame " +
                                     std::to_string(target));
  }
  StackedCloud out;
  const auto & dst = seq.frames[static_cast<std::size_t>(target)].pose;
  bool with_source = true;
  for (int f = target - frames + 1; f <= target; ++f) {
    with_source = with_source && !seq.frames[static_cast<std::size_t>(f)].radar_source.empty();
  }
  for (int f = target; f > target - frames; --f) {
    const auto & frame = seq.frames[static_cast<std::size_t>(f)];
    RadarCloud pts =
      f == target ? frame.radar : transform_to_frame(std::span<const RadarPoint>(frame.radar), frame.pose, dst);
    for (auto & p : pts) {
      p.t = f - target;
    }
    out.cloud.insert(out.cloud.end(), pts.begin(), pts.end());
    if (frame.motion_labels.size() == frame.radar.size()) {
      out.labels.insert(out.labels.end(), frame.motion_labels.begin(), frame.motion_labels.end());
    } else {
      out.labels.insert(out.labels.end(), frame.radar.size(), 0);
    }
    if (with_source) {
      out.source.insert(out.source.end(), frame.radar_source.begin(), frame.radar_source.end());
    }
  }
  return out;
}

Accumulation accumulate(const FrameSequence & seq, int frames, const MosNetwork & net, double alpha, bool strict,
  int target)
{
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::InvalidAlpha, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  Accumulation acc;
  acc.stacked = stack_frames(seq, frames, target);
  acc.enhanced = velocity_encode(acc.stacked.cloud);
  acc.mos = mos_forward(acc.enhanced, net);
  acc.mask = predict_mask(acc.mos.moving_probability(), alpha);
  acc.compensated = compensate(acc.enhanced, acc.mask, seq.frame_period, 0, strict);
  return acc;
}

}  // namespace moralkit
