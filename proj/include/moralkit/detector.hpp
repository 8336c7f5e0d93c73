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

#ifndef MORALKIT__DETECTOR_HPP_
#define MORALKIT__DETECTOR_HPP_

#include "moralkit/encoders.hpp"
#include "moralkit/eval.hpp"
#include "moralkit/fusion.hpp"
#include "moralkit/ground_filter.hpp"
#include "moralkit/mre.hpp"
#include "moralkit/nn.hpp"
#include "moralkit/scene.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace moralkit
{

// ---------------------------------------------------------------------------
// Head and box coding

/// Regression channels: dx, dy (in cells), z, log l, log w, log h, sin yaw, cos yaw.
inline constexpr int kRegressionChannels = 8;
/// Initial heatmap bias, sigmoid(-2.19) ~ 0.1.
inline constexpr double kHeatmapPriorBias = -2.19;

struct HeadSpec
{
  int hidden = 16;
  int kernel = 3;
  int layers = 2;  // k x k conv + ReLU blocks before the 1 x 1 outputs
};

struct HeadOutput
{
  FeatureMap heatmap;     // kNumClasses x H x W logits
  FeatureMap regression;  // kRegressionChannels x H x W
};

class DetectionHead
{
public:
  struct Cache
  {
    std::vector<FeatureMap> inputs;
    std::vector<Mat> columns;
    std::vector<FeatureMap> activations;
  };

  DetectionHead() = default;
  DetectionHead(int channels, const HeadSpec & spec);

  HeadOutput forward(const FeatureMap & x, Cache * cache = nullptr) const;
  /// Accumulates parameter gradients; returns dL/dx.
  FeatureMap backward(const Cache & cache, const HeadOutput & grad);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  std::vector<Conv2d> trunk;
  Conv2d heatmap;
  Conv2d regression;
};

struct CellRef
{
  int i = 0;
  int j = 0;
};

/// Cell holding the box center of a map with the given geometry; false when
/// the center lies outside the grid.
bool center_cell(const Box3D & box, const FeatureMap & like, CellRef & cell);
std::array<double, kRegressionChannels> encode_box(const Box3D & box, const FeatureMap & like, const CellRef & cell);
Box3D decode_box(const std::array<double, kRegressionChannels> & values, const FeatureMap & like,
  const CellRef & cell, ObjectClass cls);

struct DetectParams
{
  double score_threshold = 0.1;
  double nms_iou = 0.5;
  int max_detections = 100;
};

/// Greedy per-class NMS by BEV IoU; higher score survives.
std::vector<Detection> non_max_suppression(std::vector<Detection> detections, double iou_threshold);

/// Peaks are cells whose sigmoid score reaches the threshold and strictly
/// exceeds all 8 neighbours of the same class.
std::vector<Detection> detect(const HeadOutput & output, const DetectParams & params, int frame_id = 0);

// ---------------------------------------------------------------------------
// Targets and loss

struct PositiveCell
{
  CellRef cell;
  ObjectClass cls = ObjectClass::Car;
  std::array<double, kRegressionChannels> target{};
};

struct DetectionTargets
{
  FeatureMap heatmap;  // Gaussian splats, 1 at each center cell
  std::vector<PositiveCell> positives;
};

/// Gaussian sigma in cells: max(0.5, hypot(l, w) / (6 cell)).
DetectionTargets build_targets(std::span<const Box3D> boxes, const FeatureMap & like);

struct DetectionLoss
{
  double heatmap = 0.0;
  double regression = 0.0;
  double total = 0.0;
};

/// Penalty-reduced focal loss (alpha 2, beta 4) over the heatmap plus
/// smooth-L1 on the regression channels of positive cells, both normalized
/// by the positive count. Fills `grad` when given.
DetectionLoss detection_loss(const HeadOutput & output, const DetectionTargets & targets, double regression_weight,
  HeadOutput * grad = nullptr);

// ---------------------------------------------------------------------------
// Full model

struct ModelConfig
{
  GridSpec radar_grid{0.0, 51.2, -25.6, 25.6, 0.8, 32, 32};
  GridSpec lidar_grid{0.0, 51.2, -25.6, 25.6, 0.8, 32, 32};
  MosSpec mos = default_mos_spec();
  int attention_reduction = 4;
  int gate_kernel = 1;
  HeadSpec head;
  DetectParams detect;
  double regression_weight = 1.0;
  GroundFilterParams ground;
  bool use_mre = true;
  bool use_magf = true;
  int frames = 5;
  double alpha = kDefaultAlpha;
  double tau = 0.1;
  bool strict = false;

  void validate() const;
};

/// Parameter-independent inputs of one training or inference example.
struct PreparedSample
{
  int frame_id = 0;
  EnhancedRadarCloud stacked;            // ego-aligned K-frame stack, velocity encoded
  std::vector<std::uint8_t> motion_labels;
  EnhancedRadarCloud radar;              // compensated stack fed to the radar encoder
  MotionMask mask;
  MotionFeatures motion;                 // empty when MAGF is off
  LidarCloud lidar;                      // ground-filtered latest LiDAR frame
  std::vector<Box3D> boxes;              // latest-frame ground truth
  bool mos_ran = false;
};

struct Augmentation
{
  bool flip_y = false;
  double scale = 1.0;
  double rotation = 0.0;  // rad
};

/// Random y-flip, scale in [0.95, 1.05] and rotation in [-10, 10] degrees.
Augmentation draw_augmentation(Rng & rng);
/// Applies the same rigid-plus-scale transform to radar, LiDAR and boxes.
PreparedSample augment(const PreparedSample & sample, const Augmentation & aug);

class DetectorModel
{
public:
  struct Cache
  {
    PillarSet radar_pillars;
    PillarSet lidar_pillars;
    PillarEncoder::Cache radar_encoder;
    PillarEncoder::Cache lidar_encoder;
    FeatureMap radar_map;
    FeatureMap lidar_map;
    FeatureMap attended;
    ChannelAttention::Cache attention;
    FeatureMap motion_map;
    MotionAggregator::Cache aggregator;
    FeatureMap enhanced;
    GatedFusion::Cache gate;
    AdaptiveFusion::Cache fusion;
    DetectionHead::Cache head;
  };

  explicit DetectorModel(ModelConfig config = {});

  const ModelConfig & config() const { return config_; }
  /// Changes switches that do not alter parameter shapes (alpha, K, ...).
  void set_runtime(bool use_mre, bool use_magf, int frames, double alpha);

  void init(std::uint64_t seed);
  /// All parameters: MOS under "mos.", the rest under "det.".
  void visit(const std::string & prefix, const ParamVisitor & f);
  void visit_detector(const std::string & prefix, const ParamVisitor & f);

  /// Stacks K frames ending at `target`, runs the motion stage and filters ground.
  PreparedSample prepare(const FrameSequence & seq, int target = -1) const;

  HeadOutput forward(const PreparedSample & sample, Cache * cache = nullptr) const;
  /// Accumulates gradients; returns dL/d(F_sa, F_fp) for joint training.
  MotionAggregator::Gradients backward(const PreparedSample & sample, const Cache & cache, const HeadOutput & grad);

  std::vector<Detection> infer(const PreparedSample & sample, int frame_id) const;

  MosNetwork mos;
  PillarEncoder radar_encoder;
  PillarEncoder lidar_encoder;
  ChannelAttention attention;
  MotionAggregator aggregator;
  GatedFusion gate;
  AdaptiveFusion fusion;
  DetectionHead head;

private:
  ModelConfig config_;
};

// ---------------------------------------------------------------------------
// Training

struct DetectorTrainConfig
{
  int epochs = 80;
  int batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool augment = true;
  bool end_to_end = false;  // also update the motion network
  double mos_loss_weight = 1.0;
};

struct DetectorTrainResult
{
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
};

/// Staged training keeps the MOS weights and the prepared motion stage
/// fixed. End-to-end training reruns the motion stage every step and adds
/// the motion-segmentation loss. Throws EmptyDataset.
DetectorTrainResult train_detector(DetectorModel & model, const std::vector<PreparedSample> & data,
  const DetectorTrainConfig & config, Adam & optimizer, int start_epoch = 0);

/// Loss of one sample without augmentation.
DetectionLoss sample_loss(const DetectorModel & model, const PreparedSample & sample);

}  // namespace moralkit

#endif  // MORALKIT__DETECTOR_HPP_
