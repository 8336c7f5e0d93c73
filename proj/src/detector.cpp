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

#include "moralkit/detector.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace moralkit
{

namespace
{

double softplus(double x)
{
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void scale_weights(Conv2d & conv, double factor)
{
  for (auto & v : conv.weight.value.reshaped()) {
    v = static_cast<float>(v * factor);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

DetectionHead::DetectionHead(int channels, const HeadSpec & spec)
{
  if (spec.layers < 0 || spec.hidden < 1) {
    fail(ErrorCode::InvalidConfig, "detection head needs hidden >= 1 and layers >= 0");
  }
  int in = channels;
  for (int l = 0; l < spec.layers; ++l) {
    trunk.emplace_back(in, spec.hidden, spec.kernel);
    in = spec.hidden;
  }
  heatmap = Conv2d(in, static_cast<int>(kNumClasses), 1);
  regression = Conv2d(in, kRegressionChannels, 1);
}

HeadOutput DetectionHead::forward(const FeatureMap & x, Cache * cache) const
{
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->columns.clear();
    cache->activations.clear();
  }
  FeatureMap h = x;
  for (const auto & conv : trunk) {
    Mat cols;
    FeatureMap y = conv.forward(h, cache != nullptr ? &cols : nullptr);
    for (auto & v : y.data()) {
      v = std::max(v, 0.0);
    }
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
      cache->columns.push_back(std::move(cols));
      cache->activations.push_back(y);
    }
    h = std::move(y);
  }
  HeadOutput out{heatmap.forward(h), regression.forward(h)};
  if (cache != nullptr) {
    cache->inputs.push_back(std::move(h));
  }
  return out;
}

FeatureMap DetectionHead::backward(const Cache & cache, const HeadOutput & grad)
{
  const FeatureMap & top = cache.inputs.back();
  FeatureMap d = heatmap.backward(top, Mat{}, grad.heatmap);
  d.matrix() += regression.backward(top, Mat{}, grad.regression).matrix();
  for (std::size_t l = trunk.size(); l-- > 0;) {
    d.matrix() = (cache.activations[l].matrix().array() > 0.0).select(d.matrix(), 0.0);
    d = trunk[l].backward(cache.inputs[l], cache.columns[l], d);
  }
  return d;
}

void DetectionHead::init(Rng & rng)
{
  for (auto & conv : trunk) {
    conv.init(rng);
  }
  heatmap.init(rng);
  regression.init(rng);
  scale_weights(heatmap, 0.1);
  scale_weights(regression, 0.1);
  heatmap.bias.value.setConstant(static_cast<float>(kHeatmapPriorBias));
}

void DetectionHead::visit(const std::string & prefix, const ParamVisitor & f)
{
  for (std::size_t l = 0; l < trunk.size(); ++l) {
    trunk[l].visit(prefix + ".trunk" + std::to_string(l), f);
  }
  heatmap.visit(prefix + ".heatmap", f);
  regression.visit(prefix + ".regression", f);
}

// ---------------------------------------------------------------------------

bool center_cell(const Box3D & box, const FeatureMap & like, CellRef & cell)
{
  const double fi = (box.center.x() - like.grid_origin().x()) / like.cell_size();
  const double fj = (box.center.y() - like.grid_origin().y()) / like.cell_size();
  if (!(fi >= 0.0 && fj >= 0.0 && fi < like.height() && fj < like.width())) {
    return false;
  }
  cell.i = std::min(static_cast<int>(std::floor(fi)), like.height() - 1);
  cell.j = std::min(static_cast<int>(std::floor(fj)), like.width() - 1);
  return true;
}

std::array<double, kRegressionChannels> encode_box(const Box3D & box, const FeatureMap & like, const CellRef & cell)
{
  const double s = like.cell_size();
  const double cx = like.grid_origin().x() + (cell.i + 0.5) * s;
  const double cy = like.grid_origin().y() + (cell.j + 0.5) * s;
  return {(box.center.x() - cx) / s, (box.center.y() - cy) / s, box.center.z(), std::log(box.size.x()),
    std::log(box.size.y()), std::log(box.size.z()), std::sin(box.yaw), std::cos(box.yaw)};
}

Box3D decode_box(const std::array<double, kRegressionChannels> & v, const FeatureMap & like, const CellRef & cell,
  ObjectClass cls)
{
  const double s = like.cell_size();
  Box3D b;
  b.center = {like.grid_origin().x() + (cell.i + 0.5 + v[0]) * s, like.grid_origin().y() + (cell.j + 0.5 + v[1]) * s,
    v[2]};
  b.size = {std::exp(std::clamp(v[3], -5.0, 5.0)), std::exp(std::clamp(v[4], -5.0, 5.0)),
    std::exp(std::clamp(v[5], -5.0, 5.0))};
  b.yaw = std::atan2(v[6], v[7]);
  b.cls = cls;
  return b;
}

std::vector<Detection> non_max_suppression(std::vector<Detection> detections, double iou_threshold)
{
  std::stable_sort(detections.begin(), detections.end(),
    [](const Detection & a, const Detection & b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto & d : detections) {
    bool suppressed = false;
    for (const auto & k : kept) {
      if (k.box.cls == d.box.cls && k.frame_id == d.frame_id && bev_iou(k.box, d.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(d);
    }
  }
  return kept;
}

std::vector<Detection> detect(const HeadOutput & output, const DetectParams & params, int frame_id)
{
  const auto & hm = output.heatmap;
  const int h = hm.height();
  const int w = hm.width();
  std::vector<Detection> found;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const int ch = static_cast<int>(c);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double logit = hm.at(ch, i, j);
        const double score = sigmoid(logit);
        if (score < params.score_threshold) {
          continue;
        }
        bool peak = true;
        for (int di = -1; di <= 1 && peak; ++di) {
          for (int dj = -1; dj <= 1; ++dj) {
            const int ni = i + di;
            const int nj = j + dj;
            if ((di == 0 && dj == 0) || ni < 0 || nj < 0 || ni >= h || nj >= w) {
              continue;
            }
            if (!(logit > hm.at(ch, ni, nj))) {
              peak = false;
              break;
            }
          }
        }
        if (!peak) {
          continue;
        }
        std::array<double, kRegressionChannels> v{};
        for (int r = 0; r < kRegressionChannels; ++r) {
          v[static_cast<std::size_t>(r)] = output.regression.at(r, i, j);
        }
        found.push_back({decode_box(v, hm, {i, j}, kAllClasses[c]), score, frame_id});
      }
    }
  }
  auto kept = non_max_suppression(std::move(found), params.nms_iou);
  if (static_cast<int>(kept.size()) > params.max_detections) {
    kept.resize(static_cast<std::size_t>(params.max_detections));
  }
  return kept;
}

// ---------------------------------------------------------------------------

DetectionTargets build_targets(std::span<const Box3D> boxes, const FeatureMap & like)
{
  DetectionTargets t;
  t.heatmap = FeatureMap(static_cast<int>(kNumClasses), like.height(), like.width(), like.grid_origin(),
    like.cell_size());
  const double s = like.cell_size();
  for (const auto & box : boxes) {
    CellRef cell;
    if (!center_cell(box, like, cell)) {
      continue;
    }
    const int ch = static_cast<int>(box.cls);
    const double sigma = std::max(0.5, std::hypot(box.size.x(), box.size.y()) / (6.0 * s));
    const double ci = (box.center.x() - like.grid_origin().x()) / s;
    const double cj = (box.center.y() - like.grid_origin().y()) / s;
    const int reach = static_cast<int>(std::ceil(3.0 * sigma));
    for (int i = std::max(0, cell.i - reach); i <= std::min(like.height() - 1, cell.i + reach); ++i) {
      for (int j = std::max(0, cell.j - reach); j <= std::min(like.width() - 1, cell.j + reach); ++j) {
        const double di = i + 0.5 - ci;
        const double dj = j + 0.5 - cj;
        const double g = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        auto & y = t.heatmap.at(ch, i, j);
        y = std::max(y, g);
      }
    }
    t.heatmap.at(ch, cell.i, cell.j) = 1.0;
    t.positives.push_back({cell, box.cls, encode_box(box, like, cell)});
  }
  return t;
}

DetectionLoss detection_loss(const HeadOutput & output, const DetectionTargets & targets, double regression_weight,
  HeadOutput * grad)
{
  const auto & hm = output.heatmap;
  if (!hm.same_shape(targets.heatmap)) {
    fail(ErrorCode::ShapeMismatch, "heatmap and targets differ in shape");
  }
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, targets.positives.size()));
  std::vector<std::uint8_t> positive(hm.data().size(), 0);
  for (const auto & p : targets.positives) {
    const auto idx = (static_cast<std::size_t>(p.cls) * hm.height() + p.cell.i) * hm.width() + p.cell.j;
    positive[idx] = 1;
  }
  if (grad != nullptr) {
    grad->heatmap = FeatureMap(hm.channels(), hm.height(), hm.width(), hm.grid_origin(), hm.cell_size());
    grad->regression = FeatureMap(output.regression.channels(), hm.height(), hm.width(), hm.grid_origin(),
      hm.cell_size());
  }
  DetectionLoss loss;
  const auto & x = hm.data();
  const auto & y = targets.heatmap.data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double p = sigmoid(x[k]);
    const double log_p = -softplus(-x[k]);
    const double log_q = -softplus(x[k]);
    double l = 0.0;
    double g = 0.0;
    if (positive[k] != 0) {
      const double q = 1.0 - p;
      l = -q * q * log_p;
      g = 2.0 * p * q * q * log_p - q * q * q;
    } else {
      const double neg = std::pow(1.0 - y[k], 4);
      if (neg == 0.0) {
        continue;
      }
      l = -neg * p * p * log_q;
      g = neg * (p * p * p - 2.0 * p * p * (1.0 - p) * log_q);
    }
    loss.heatmap += l * norm;
    if (grad != nullptr) {
      grad->heatmap.data()[k] = g * norm;
    }
  }
  for (const auto & pos : targets.positives) {
    for (int r = 0; r < kRegressionChannels; ++r) {
      const double d = output.regression.at(r, pos.cell.i, pos.cell.j) - pos.target[static_cast<std::size_t>(r)];
      const double ad = std::abs(d);
      loss.regression += (ad < 1.0 ? 0.5 * d * d : ad - 0.5) * norm;
      if (grad != nullptr) {
        grad->regression.at(r, pos.cell.i, pos.cell.j) +=
          regression_weight * norm * (ad < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0));
      }
    }
  }
  loss.total = loss.heatmap + regression_weight * loss.regression;
  return loss;
}

// ---------------------------------------------------------------------------

void ModelConfig::validate() const
{
  radar_grid.validate();
  lidar_grid.validate();
  if (radar_grid.height() != lidar_grid.height() || radar_grid.width() != lidar_grid.width() ||
      radar_grid.x_min != lidar_grid.x_min || radar_grid.y_min != lidar_grid.y_min ||
      radar_grid.cell_size != lidar_grid.cell_size) {
    fail(ErrorCode::InvalidConfig, "radar and lidar grids must coincide");
  }
  if (frames < 1) {
    fail(ErrorCode::InvalidConfig, "mre.frames must be >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::InvalidAlpha, "mre.alpha must lie in (0, 1)");
  }
  if (!(tau > 0.0)) {
    fail(ErrorCode::InvalidTau, "mre.tau must be positive");
  }
  if (regression_weight < 0.0) {
    fail(ErrorCode::InvalidConfig, "detector.regression_weight must be >= 0");
  }
  if (!(detect.nms_iou > 0.0 && detect.nms_iou <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "detector.nms_iou must lie in (0, 1]");
  }
}

DetectorModel::DetectorModel(ModelConfig config) : mos(config.mos), config_(std::move(config))
{
  config_.validate();
  const int c_l = config_.lidar_grid.feature_width;
  const int c_r = config_.radar_grid.feature_width;
  radar_encoder = PillarEncoder(PillarSource::Radar, c_r);
  lidar_encoder = PillarEncoder(PillarSource::Lidar, c_l);
  attention = ChannelAttention(c_l, config_.attention_reduction);
  aggregator = MotionAggregator(mos.sa_channels(), mos.fp_channels(), c_l);
  gate = GatedFusion(c_l, config_.gate_kernel);
  fusion = AdaptiveFusion(c_r, c_l);
  head = DetectionHead(c_l, config_.head);
}

void DetectorModel::set_runtime(bool use_mre, bool use_magf, int frames, double alpha)
{
  ModelConfig next = config_;
  next.use_mre = use_mre;
  next.use_magf = use_magf;
  next.frames = frames;
  next.alpha = alpha;
  next.validate();
  config_ = next;
}

void DetectorModel::init(std::uint64_t seed)
{
  mos.init(seed);
  Rng rng(seed, "det-init");
  radar_encoder.init(rng);
  lidar_encoder.init(rng);
  attention.init(rng);
  aggregator.init(rng);
  gate.init(rng);
  fusion.init(rng);
  head.init(rng);
}

void DetectorModel::visit(const std::string & prefix, const ParamVisitor & f)
{
  mos.visit(prefix + "mos.", f);
  visit_detector(prefix + "det.", f);
}

void DetectorModel::visit_detector(const std::string & prefix, const ParamVisitor & f)
{
  radar_encoder.visit(prefix + "radar_encoder", f);
  lidar_encoder.visit(prefix + "lidar_encoder", f);
  attention.visit(prefix + "attention", f);
  aggregator.visit(prefix + "aggregator", f);
  gate.visit(prefix + "gate", f);
  fusion.visit(prefix + "fusion", f);
  head.visit(prefix + "head", f);
}

namespace
{

EnhancedRadarCloud radar_input(const EnhancedRadarCloud & stacked, const MotionMask * mask, const ModelConfig & cfg)
{
  if (!cfg.use_mre) {
    EnhancedRadarCloud raw = stacked;
    for (auto & p : raw) {
      p.v_mag = 0.0;
      p.v_sq = 0.0;
      p.v_dir = 0.0;
    }
    return raw;
  }
  if (mask == nullptr) {
    return stacked;
  }
  return velocity_encode(compensate(stacked, *mask, cfg.tau, 0, cfg.strict).cloud);
}

bool wants_mos(const ModelConfig & cfg, std::size_t points)
{
  return (cfg.use_mre || cfg.use_magf) && static_cast<int>(points) >= cfg.mos.sa[2].samples;
}

}  // namespace

PreparedSample DetectorModel::prepare(const FrameSequence & seq, int target) const
{
  if (seq.frames.empty()) {
    fail(ErrorCode::EmptyDataset, "sequence has no frames");
  }
  if (target < 0) {
    target = static_cast<int>(seq.frames.size()) - 1;
  }
  PreparedSample s;
  const auto stacked = stack_frames(seq, std::min(config_.frames, target + 1), target);
  s.stacked = velocity_encode(stacked.cloud);
  s.motion_labels = stacked.labels;
  if (wants_mos(config_, s.stacked.size())) {
    const auto out = mos_forward(s.stacked, mos);
    s.mask = predict_mask(out.moving_probability(), config_.alpha);
    s.mos_ran = true;
    if (config_.use_magf) {
      s.motion = out.features;
    }
  }
  s.radar = radar_input(s.stacked, s.mos_ran ? &s.mask : nullptr, config_);
  const auto & frame = seq.frames[static_cast<std::size_t>(target)];
  s.lidar = frame.lidar.empty() ? LidarCloud{} : remove_ground(frame.lidar, config_.ground).cloud;
  s.boxes = frame.boxes;
  return s;
}

HeadOutput DetectorModel::forward(const PreparedSample & sample, Cache * cache) const
{
  Cache local;
  Cache & c = cache != nullptr ? *cache : local;
  c.radar_pillars = pillarize(sample.radar, config_.radar_grid);
  c.lidar_pillars = pillarize(sample.lidar, config_.lidar_grid);
  c.radar_map = radar_encoder.forward(c.radar_pillars, &c.radar_encoder);
  c.lidar_map = lidar_encoder.forward(c.lidar_pillars, &c.lidar_encoder);
  const FeatureMap * enhanced = &c.lidar_map;
  if (config_.use_magf) {
    c.attended = attention.forward(c.lidar_map, &c.attention);
    if (sample.motion.sa_features.rows() > 0) {
      c.motion_map = aggregator.forward(sample.motion, c.attended, &c.aggregator);
    } else {
      c.motion_map = FeatureMap(c.attended.channels(), c.attended.height(), c.attended.width(),
        c.attended.grid_origin(), c.attended.cell_size());
    }
    c.enhanced = gate.forward(c.attended, c.motion_map, &c.gate);
    enhanced = &c.enhanced;
  }
  const FeatureMap fused = fusion.forward(*enhanced, c.radar_map, &c.fusion);
  return head.forward(fused, &c.head);
}

MotionAggregator::Gradients DetectorModel::backward(const PreparedSample & sample, const Cache & cache,
  const HeadOutput & grad)
{
  const FeatureMap d_fused = head.backward(cache.head, grad);
  const FeatureMap & enhanced = config_.use_magf ? cache.enhanced : cache.lidar_map;
  auto g = fusion.backward(enhanced, cache.radar_map, cache.fusion, d_fused);
  radar_encoder.backward(cache.radar_pillars, cache.radar_encoder, g.d_radar);
  MotionAggregator::Gradients motion;
  FeatureMap d_lidar = std::move(g.d_lidar);
  if (config_.use_magf) {
    auto gg = gate.backward(cache.attended, cache.gate, d_lidar);
    if (sample.motion.sa_features.rows() > 0) {
      motion = aggregator.backward(cache.aggregator, gg.d_motion);
    }
    d_lidar = attention.backward(cache.lidar_map, cache.attention, gg.d_lidar);
  }
  lidar_encoder.backward(cache.lidar_pillars, cache.lidar_encoder, d_lidar);
  return motion;
}

std::vector<Detection> DetectorModel::infer(const PreparedSample & sample, int frame_id) const
{
  return detect(forward(sample), config_.detect, frame_id);
}

// ---------------------------------------------------------------------------

Augmentation draw_augmentation(Rng & rng)
{
  Augmentation a;
  a.flip_y = rng.bernoulli(0.5);
  a.scale = rng.uniform(0.95, 1.05);
  a.rotation = rng.uniform(-10.0, 10.0) * std::numbers::pi / 180.0;
  return a;
}

PreparedSample augment(const PreparedSample & sample, const Augmentation & aug)
{
  const double c = std::cos(aug.rotation);
  const double s = std::sin(aug.rotation);
  auto move = [&](double & x, double & y, double & z) {
    if (aug.flip_y) {
      y = -y;
    }
    const double rx = c * x - s * y;
    const double ry = s * x + c * y;
    x = aug.scale * rx;
    y = aug.scale * ry;
    z = aug.scale * z;
  };
  PreparedSample out = sample;
  for (auto & p : out.radar) {
    move(p.x, p.y, p.z);
  }
  for (auto & p : out.lidar) {
    move(p.x, p.y, p.z);
  }
  for (auto & b : out.boxes) {
    move(b.center.x(), b.center.y(), b.center.z());
    b.size *= aug.scale;
    b.yaw = normalize_angle((aug.flip_y ? -b.yaw : b.yaw) + aug.rotation);
  }
  return out;
}

namespace
{

struct MosStep
{
  MosCache cache;
  Mat d_logits;
  double loss = 0.0;
};

// Balanced cross-entropy of one sample, gradient scaled by `weight`.
void mos_sample_loss(const MosOutput & out, const std::vector<std::uint8_t> & labels, double weight, MosStep & step)
{
  std::array<double, 2> counts{0.0, 0.0};
  for (auto l : labels) {
    counts[l != 0 ? 1 : 0] += 1.0;
  }
  const double n = counts[0] + counts[1];
  std::array<double, 2> w{};
  double total = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    w[k] = counts[k] > 0.0 ? n / (2.0 * counts[k]) : 0.0;
    total += w[k] * counts[k];
  }
  step.d_logits = Mat::Zero(out.logits.rows(), 2);
  step.loss = 0.0;
  for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)] != 0 ? 1 : 0;
    const double sc = w[static_cast<std::size_t>(y)] / total;
    step.loss += sc * softplus(out.logits(i, 1 - y) - out.logits(i, y));
    step.d_logits(i, 0) = weight * sc * (out.probabilities(i, 0) - (y == 0 ? 1.0 : 0.0));
    step.d_logits(i, 1) = weight * sc * (out.probabilities(i, 1) - (y == 1 ? 1.0 : 0.0));
  }
}

}  // namespace

DetectionLoss sample_loss(const DetectorModel & model, const PreparedSample & sample)
{
  const auto out = model.forward(sample);
  return detection_loss(out, build_targets(sample.boxes, out.heatmap), model.config().regression_weight);
}

DetectorTrainResult train_detector(DetectorModel & model, const std::vector<PreparedSample> & data,
  const DetectorTrainConfig & config, Adam & optimizer, int start_epoch)
{
  if (data.empty()) {
    fail(ErrorCode::EmptyDataset, "detector training set is empty");
  }
  if (config.batch_size < 1 || config.epochs < 0) {
    fail(ErrorCode::InvalidConfig, "batch_size must be >= 1 and epochs >= 0");
  }
  auto list_params = [&](DetectorModel & m) {
    ParamList list;
    auto add = [&list](const std::string & name, Param & p) { list.emplace_back(name, &p); };
    if (config.end_to_end) {
      m.visit("", add);
    } else {
      m.visit_detector("det.", add);
    }
    return list;
  };
  const auto params = list_params(model);
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), data.size());
  std::vector<DetectorModel> slots(width, model);
  std::vector<ParamList> slot_params;
  for (auto & s : slots) {
    slot_params.push_back(list_params(s));
  }
  const auto & cfg = model.config();
  DetectorTrainResult result;
  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), config.seed, "det-batches", epoch);
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += width) {
      const auto end = std::min(order.size(), begin + width);
      const auto count = end - begin;
      const double inv = 1.0 / static_cast<double>(count);
      std::vector<double> losses(count, 0.0);
      parallel_for(count, [&](std::size_t b) {
        auto & slot = slots[b];
        for (std::size_t p = 0; p < params.size(); ++p) {
          slot_params[b][p].second->value = params[p].second->value;
        }
        zero_grads(slot_params[b]);
        const auto index = order[begin + b];
        PreparedSample sample = data[index];
        MosStep mos_step;
        bool joint = false;
        if (config.end_to_end && wants_mos(cfg, sample.stacked.size())) {
          const auto out = mos_forward(sample.stacked, slot.mos, &mos_step.cache);
          sample.mask = predict_mask(out.moving_probability(), cfg.alpha);
          sample.radar = radar_input(sample.stacked, &sample.mask, cfg);
          if (cfg.use_magf) {
            sample.motion = out.features;
          }
          mos_sample_loss(out, sample.motion_labels, config.mos_loss_weight * inv, mos_step);
          joint = true;
        }
        if (config.augment) {
          Rng rng(config.seed, "augment", static_cast<std::uint64_t>(epoch) * data.size() + index);
          sample = augment(sample, draw_augmentation(rng));
        }
        DetectorModel::Cache cache;
        const auto out = slot.forward(sample, &cache);
        const auto targets = build_targets(sample.boxes, out.heatmap);
        HeadOutput grad;
        const auto loss = detection_loss(out, targets, cfg.regression_weight, &grad);
        grad.heatmap.matrix() *= inv;
        grad.regression.matrix() *= inv;
        auto motion_grad = slot.backward(sample, cache, grad);
        losses[b] = inv * loss.total;
        if (joint) {
          const Mat * d_sa = motion_grad.d_sa.size() > 0 ? &motion_grad.d_sa : nullptr;
          const Mat * d_fp = motion_grad.d_fp.size() > 0 ? &motion_grad.d_fp : nullptr;
          mos_backward(mos_step.cache, mos_step.d_logits, d_sa, d_fp, slot.mos);
          losses[b] += inv * config.mos_loss_weight * mos_step.loss;
        }
      });
      zero_grads(params);
      double step_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        add_grads(params, slot_params[b]);
        step_loss += losses[b];
      }
      optimizer.step(params);
      result.step_losses.push_back(step_loss);
      epoch_loss += step_loss;
      ++steps;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(steps));
  }
  return result;
}

}  // namespace moralkit
