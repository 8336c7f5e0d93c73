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

#include "moralkit/fusion.hpp"

#include "moralkit/errors.hpp"

#include <string>

namespace moralkit
{

namespace
{

void require_same_grid(const FeatureMap & a, const FeatureMap & b, const char * what)
{
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": feature maps cover different grids");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ChannelAttention::ChannelAttention(int channels, int reduction)
{
  if (channels < 1 || reduction < 1 || channels % reduction != 0) {
    fail(ErrorCode::InvalidConfig, "channel attention reduction " + std::to_string(reduction) +
                                     " must divide " + std::to_string(channels) + " channels");
  }
  fc1 = Linear(channels, channels / reduction);
  fc2 = Linear(channels / reduction, channels);
}

RowVec ChannelAttention::weights(const FeatureMap & x) const
{
  Cache cache;
  forward(x, &cache);
  return cache.weights;
}

FeatureMap ChannelAttention::forward(const FeatureMap & x, Cache * cache) const
{
  if (x.channels() != channels()) {
    fail(ErrorCode::ShapeMismatch, "channel attention expects " + std::to_string(channels()) + " channels");
  }
  const RowVec pooled = x.matrix().rowwise().mean().transpose();
  const Mat hidden = fc1.forward(pooled).cwiseMax(0.0);
  const Mat z = fc2.forward(hidden);
  RowVec w(z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    w(c) = sigmoid(z(0, c));
  }
  FeatureMap y = x;
  y.matrix().array().colwise() *= w.transpose().array();
  if (cache != nullptr) {
    cache->pooled = pooled;
    cache->hidden = hidden;
    cache->weights = w;
  }
  return y;
}

FeatureMap ChannelAttention::backward(const FeatureMap & x, const Cache & cache, const FeatureMap & dy)
{
  FeatureMap dx = dy;
  dx.matrix().array().colwise() *= cache.weights.transpose().array();
  const RowVec dw = (dy.matrix().array() * x.matrix().array()).rowwise().sum().transpose();
  Mat dz(1, dw.cols());
  for (Eigen::Index c = 0; c < dw.cols(); ++c) {
    const double w = cache.weights(c);
    dz(0, c) = dw(c) * w * (1.0 - w);
  }
  Mat dh = fc2.backward(cache.hidden, dz);
  dh = (cache.hidden.array() > 0.0).select(dh, 0.0);
  const Mat dpool = fc1.backward(cache.pooled, dh);
  const double inv_cells = 1.0 / static_cast<double>(x.cells());
  dx.matrix().colwise() += (dpool.row(0).transpose() * inv_cells);
  return dx;
}

void ChannelAttention::init(Rng & rng)
{
  fc1.init(rng);
  fc2.init(rng);
}

void ChannelAttention::visit(const std::string & prefix, const ParamVisitor & f)
{
  fc1.visit(prefix + ".fc1", f);
  fc2.visit(prefix + ".fc2", f);
}

// ---------------------------------------------------------------------------

MotionAggregator::MotionAggregator(int sa_channels, int fp_channels, int channels)
: phi_sa(sa_channels, channels), phi_fp(fp_channels, channels)
{
}

double MotionAggregator::blend() const
{
  return sigmoid(lambda.value(0, 0));
}

FeatureMap MotionAggregator::forward(const MotionFeatures & features, const FeatureMap & like, Cache * cache,
  std::optional<double> blend_override) const
{
  if (features.sa_features.rows() == 0 || features.fp_features.rows() == 0) {
    fail(ErrorCode::EmptyFeatures, "motion aggregation needs non-empty point features");
  }
  if (features.sa_features.cols() != phi_sa.in() || features.fp_features.cols() != phi_fp.in()) {
    fail(ErrorCode::ShapeMismatch, "motion features do not match the aggregator");
  }
  const RowVec mean_sa = features.sa_features.colwise().mean();
  const RowVec mean_fp = features.fp_features.colwise().mean();
  const RowVec a = phi_sa.forward(mean_sa);
  const RowVec b = phi_fp.forward(mean_fp);
  const double s = blend_override.value_or(blend());
  const RowVec v = s * a + (1.0 - s) * b;
  FeatureMap out(channels(), like.height(), like.width(), like.grid_origin(), like.cell_size());
  out.matrix().colwise() = v.transpose();
  if (cache != nullptr) {
    cache->mean_sa = mean_sa;
    cache->mean_fp = mean_fp;
    cache->phi_sa = a;
    cache->phi_fp = b;
    cache->blend = s;
    cache->sa_points = static_cast<int>(features.sa_features.rows());
    cache->fp_points = static_cast<int>(features.fp_features.rows());
  }
  return out;
}

MotionAggregator::Gradients MotionAggregator::backward(const Cache & cache, const FeatureMap & dy)
{
  const RowVec dv = dy.matrix().rowwise().sum().transpose();
  const double s = cache.blend;
  lambda.grad(0, 0) += dv.dot(cache.phi_sa - cache.phi_fp) * s * (1.0 - s);
  const Mat d_mean_sa = phi_sa.backward(cache.mean_sa, s * dv);
  const Mat d_mean_fp = phi_fp.backward(cache.mean_fp, (1.0 - s) * dv);
  Gradients g;
  g.d_sa = d_mean_sa.replicate(cache.sa_points, 1) / static_cast<double>(cache.sa_points);
  g.d_fp = d_mean_fp.replicate(cache.fp_points, 1) / static_cast<double>(cache.fp_points);
  return g;
}

void MotionAggregator::init(Rng & rng)
{
  phi_sa.init(rng);
  phi_fp.init(rng);
  lambda.value.setZero();
}

void MotionAggregator::visit(const std::string & prefix, const ParamVisitor & f)
{
  phi_sa.visit(prefix + ".phi_sa", f);
  phi_fp.visit(prefix + ".phi_fp", f);
  f(prefix + ".lambda", lambda);
}

// ---------------------------------------------------------------------------

GatedFusion::GatedFusion(int channels, int kernel) : conv(2 * channels, channels, kernel) {}

FeatureMap GatedFusion::forward(const FeatureMap & lidar, const FeatureMap & motion, Cache * cache) const
{
  if (!lidar.same_shape(motion) || 2 * lidar.channels() != conv.in()) {
    fail(ErrorCode::ShapeMismatch, "gated fusion inputs must share shape and match the gate");
  }
  const int c = lidar.channels();
  FeatureMap concat(2 * c, lidar.height(), lidar.width(), lidar.grid_origin(), lidar.cell_size());
  concat.matrix().topRows(c) = lidar.matrix();
  concat.matrix().bottomRows(c) = motion.matrix();
  Mat columns;
  FeatureMap gate = conv.forward(concat, cache != nullptr ? &columns : nullptr);
  for (auto & v : gate.data()) {
    v = sigmoid(v);
  }
  FeatureMap out = lidar;
  out.matrix().array() += lidar.matrix().array() * gate.matrix().array();
  if (cache != nullptr) {
    cache->concat = std::move(concat);
    cache->columns = std::move(columns);
    cache->gate = std::move(gate);
  }
  return out;
}

GatedFusion::Gradients GatedFusion::backward(const FeatureMap & lidar, const Cache & cache, const FeatureMap & dy)
{
  const int c = lidar.channels();
  FeatureMap dz = dy;
  dz.matrix().array() *= lidar.matrix().array() * cache.gate.matrix().array() * (1.0 - cache.gate.matrix().array());
  const FeatureMap dconcat = conv.backward(cache.concat, cache.columns, dz);
  Gradients g;
  g.d_lidar = dy;
  g.d_lidar.matrix().array() *= 1.0 + cache.gate.matrix().array();
  g.d_lidar.matrix() += dconcat.matrix().topRows(c);
  g.d_motion = FeatureMap(c, lidar.height(), lidar.width(), lidar.grid_origin(), lidar.cell_size());
  g.d_motion.matrix() = dconcat.matrix().bottomRows(c);
  return g;
}

void GatedFusion::init(Rng & rng)
{
  conv.init(rng);
}

void GatedFusion::visit(const std::string & prefix, const ParamVisitor & f)
{
  conv.visit(prefix + ".conv", f);
}

// ---------------------------------------------------------------------------

AdaptiveFusion::AdaptiveFusion(int radar_channels, int channels)
: projection(radar_channels, channels, 1), beta_logit(1, channels)
{
}

RowVec AdaptiveFusion::beta() const
{
  RowVec b(beta_logit.value.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    b(c) = sigmoid(beta_logit.value(0, c));
  }
  return b;
}

FeatureMap AdaptiveFusion::forward(const FeatureMap & lidar, const FeatureMap & radar, Cache * cache) const
{
  require_same_grid(lidar, radar, "adaptive fusion");
  if (radar.channels() != projection.in() || lidar.channels() != projection.out()) {
    fail(ErrorCode::ShapeMismatch, "adaptive fusion channel counts do not match");
  }
  Mat columns;
  FeatureMap projected = projection.forward(radar, cache != nullptr ? &columns : nullptr);
  const RowVec b = beta();
  FeatureMap out = lidar;
  out.matrix().array().colwise() *= b.transpose().array();
  out.matrix().array() += projected.matrix().array().colwise() * (1.0 - b.transpose().array());
  if (cache != nullptr) {
    cache->projected = std::move(projected);
    cache->columns = std::move(columns);
    cache->beta = b;
  }
  return out;
}

AdaptiveFusion::Gradients AdaptiveFusion::backward(const FeatureMap & lidar, const FeatureMap & radar,
  const Cache & cache, const FeatureMap & dy)
{
  const auto & b = cache.beta;
  const RowVec db =
    (dy.matrix().array() * (lidar.matrix().array() - cache.projected.matrix().array())).rowwise().sum().transpose();
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    beta_logit.grad(0, c) += db(c) * b(c) * (1.0 - b(c));
  }
  Gradients g;
  g.d_lidar = dy;
  g.d_lidar.matrix().array().colwise() *= b.transpose().array();
  FeatureMap dproj = dy;
  dproj.matrix().array().colwise() *= (1.0 - b.transpose().array());
  g.d_radar = projection.backward(radar, cache.columns, dproj);
  return g;
}

void AdaptiveFusion::init(Rng & rng)
{
  projection.init(rng);
  beta_logit.value.setZero();
}

void AdaptiveFusion::visit(const std::string & prefix, const ParamVisitor & f)
{
  projection.visit(prefix + ".projection", f);
  f(prefix + ".beta", beta_logit);
}

}  // namespace moralkit
