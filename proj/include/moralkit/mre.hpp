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

#ifndef MORALKIT__MRE_HPP_
#define MORALKIT__MRE_HPP_

#include "moralkit/nn.hpp"
#include "moralkit/scene.hpp"
#include "moralkit/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace moralkit
{

// ---------------------------------------------------------------------------
// Velocity encoding and attention

/// Appends |v_abs|, v_abs^2 and sign(v_abs) to every point.
EnhancedRadarCloud velocity_encode(const RadarCloud & cloud);

/// N x 10 feature matrix in EnhancedRadarPoint::features() order.
Mat feature_matrix(const EnhancedRadarCloud & cloud);
Mat position_matrix(const EnhancedRadarCloud & cloud);

/// Columns of the velocity-derived channels in the 10-wide layout.
inline constexpr std::array<int, 3> kVelocityChannels = {7, 8, 9};

struct VelocityAttention
{
  Param weight{1, static_cast<Eigen::Index>(kEnhancedWidth)};
  Param bias{1, 1};

  void visit(const std::string & prefix, const ParamVisitor & f);
};

struct AttentionOutput
{
  Mat features;            // N x 10, velocity channels scaled by the attention
  Eigen::VectorXd weights; // a_i in (0, 1)
};

/// a_i = sigmoid(w . feat_i + b); scales channels 7..9 of each point by a_i.
AttentionOutput velocity_attention(const Mat & features, const VelocityAttention & params);
/// Accumulates parameter gradients from dL/d(output features).
void velocity_attention_backward(const Mat & features, const AttentionOutput & out, const Mat & d_features,
  VelocityAttention & params);

// ---------------------------------------------------------------------------
// Point-set layers

struct PointSet
{
  Mat positions;  // N x 3
  Mat features;   // N x C
};

struct SaSpec
{
  int samples = 0;
  double radius = 1.0;
  std::vector<int> widths;
  int max_neighbors = 32;
};

/// Farthest point sampling. The first centroid is the point farthest from
/// the cloud mean; every tie goes to the lowest index. Throws TooFewPoints.
std::vector<int> farthest_point_sample(const Mat & positions, int count);

/// Up to max_neighbors points within `radius` of each centroid, nearest first
/// (ties by index). Groups are never empty: a centroid is its own neighbour.
std::vector<std::vector<int>> ball_query(const Mat & positions, const std::vector<int> & centroids, double radius,
  int max_neighbors);

struct SaCache
{
  std::vector<int> centroids;
  std::vector<int> group_offsets;  // CSR offsets into neighbor_index, size M + 1
  std::vector<int> neighbor_index;
  Mlp::Cache mlp;
  std::vector<int> argmax;  // M x C_out, row into the grouped matrix
  int input_points = 0;
  int input_channels = 0;
};

/// Set abstraction: FPS centroids, ball-query groups of
/// [(p_j - c) / radius, f_j], shared MLP with ReLU, max-pool per centroid.
/// Padding short groups with duplicates cannot change a max-pool, so only
/// the distinct members are evaluated. Throws TooFewPoints.
PointSet sa_layer(const PointSet & input, const SaSpec & spec, const Mlp & mlp, SaCache * cache = nullptr);
/// Returns dL/d(input features); accumulates MLP gradients.
Mat sa_layer_backward(const SaCache & cache, const Mat & d_output, Mlp & mlp);

struct FpCache
{
  std::vector<std::array<int, 3>> neighbors;
  std::vector<std::array<double, 3>> weights;
  std::vector<int> neighbor_count;
  Mlp::Cache mlp;
  int coarse_points = 0;
  int coarse_channels = 0;
  int skip_channels = 0;
};

/// Feature propagation: inverse-distance interpolation from the 3 nearest
/// coarse points (w ~ 1 / (d + 1e-8)), concatenated with skip features,
/// then a shared MLP with ReLU. Throws EmptyCoarseSet.
Mat fp_layer(const PointSet & coarse, const Mat & fine_positions, const Mat & skip, const Mlp & mlp,
  FpCache * cache = nullptr);

struct FpGradients
{
  Mat d_coarse;
  Mat d_skip;
};

FpGradients fp_layer_backward(const FpCache & cache, const Mat & d_output, Mlp & mlp);

// ---------------------------------------------------------------------------
// Motion-status network

struct MosSpec
{
  std::array<SaSpec, 3> sa;
  std::array<std::vector<int>, 3> fp;  // fp[0] lifts level 3 -> 2, fp[2] lifts level 1 -> 0
  std::vector<int> classifier;         // hidden widths; a 2-logit layer is appended
  /// Fixed per-channel scaling applied to the raw 10 features.
  std::array<double, kEnhancedWidth> input_scale;
};

MosSpec default_mos_spec();

class MosNetwork
{
public:
  explicit MosNetwork(MosSpec spec = default_mos_spec());

  /// Deterministic He-normal initialization from the "mos-init" stream.
  void init(std::uint64_t seed);
  void visit(const std::string & prefix, const ParamVisitor & f);

  const MosSpec & spec() const { return spec_; }
  int sa_channels() const { return sa[2].out(); }
  int fp_channels() const { return fp[2].out(); }

  VelocityAttention attention;
  std::array<Mlp, 3> sa;
  std::array<Mlp, 3> fp;
  Mlp classifier;

private:
  MosSpec spec_;
};

struct MotionFeatures
{
  Mat sa_positions;  // M x 3, deepest set-abstraction centroids
  Mat sa_features;   // M x C_sa
  Mat fp_features;   // N x C_fp
};

struct MosOutput
{
  MotionFeatures features;
  Mat logits;         // N x 2 (static, moving)
  Mat probabilities;  // N x 2, rows sum to 1

  std::vector<double> moving_probability() const;
};

struct MosCache
{
  Mat input;  // scaled N x 10
  AttentionOutput attention;
  std::array<SaCache, 3> sa;
  std::array<FpCache, 3> fp;
  Mlp::Cache classifier;
};

/// Throws TooFewPoints when N is below the deepest sample count. Level
/// sample counts are clamped to the size of the level below.
MosOutput mos_forward(const EnhancedRadarCloud & cloud, const MosNetwork & net, MosCache * cache = nullptr);

/// Backpropagates dL/dlogits plus optional external gradients on F_sa and
/// F_fp (from the fusion stage). Accumulates into net's gradients.
void mos_backward(const MosCache & cache, const Mat & d_logits, const Mat * d_sa_features,
  const Mat * d_fp_features, MosNetwork & net);

// ---------------------------------------------------------------------------
// Masks and compensation

struct MotionMask
{
  std::vector<std::uint8_t> labels;  // 1 = moving
  std::vector<double> probabilities;

  std::size_t size() const { return labels.size(); }
};

inline constexpr double kDefaultAlpha = 0.5;

/// label = p >= alpha. Throws InvalidAlpha unless alpha is in (0, 1).
MotionMask predict_mask(const std::vector<double> & probabilities, double alpha = kDefaultAlpha);

/// Mask that trusts the given labels (probability 0 or 1).
MotionMask mask_from_labels(const std::vector<std::uint8_t> & labels);

/// Baseline segmentation: moving iff |v_abs| > threshold.
MotionMask threshold_mask(const EnhancedRadarCloud & cloud, double speed_threshold = 1.0);

struct CompensationResult
{
  RadarCloud cloud;
  std::size_t degenerate = 0;  // moving points at the sensor origin, left in place
};

/// p~ = p + M * tau * (target_frame - t) * v_abs * p / |p|. Points with
/// M = 0 are copied unchanged; t is preserved. Throws InvalidTau, and
/// DegeneratePoint for moving points at the origin when `strict`.
CompensationResult compensate(const EnhancedRadarCloud & cloud, const MotionMask & mask, double tau,
  int target_frame = 0, bool strict = false);

struct StackedCloud
{
  RadarCloud cloud;                  // target-frame coordinates, t = frame offset
  std::vector<std::uint8_t> labels;
  std::vector<int> source;           // empty when the sequence carries no source tags
};

/// Ego-motion-compensated stack of frames [target - K + 1, target].
/// `target` < 0 selects the last frame. Throws InvalidConfig for bad K.
StackedCloud stack_frames(const FrameSequence & seq, int frames, int target = -1);

struct Accumulation
{
  StackedCloud stacked;
  EnhancedRadarCloud enhanced;  // stacked, velocity encoded
  MosOutput mos;
  MotionMask mask;
  CompensationResult compensated;
};

/// Stack -> velocity encode -> MOS -> mask(alpha) -> compensate toward t = 0.
Accumulation accumulate(const FrameSequence & seq, int frames, const MosNetwork & net, double alpha = kDefaultAlpha,
  bool strict = false, int target = -1);

// ---------------------------------------------------------------------------
// Training

struct MosSample
{
  EnhancedRadarCloud cloud;
  std::vector<std::uint8_t> labels;
};

struct MosTrainConfig
{
  int epochs = 80;
  int batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct MosTrainResult
{
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  bool degenerate_labels = false;  // the training labels contain a single class
};

/// Class-balanced cross-entropy; weights are 1 / (class count) per batch.
double mos_loss(const MosNetwork & net, const std::vector<MosSample> & batch);

/// Trains epochs [start_epoch, config.epochs). Batch order for an epoch is a
/// pure function of (seed, epoch), so a run resumed from a checkpoint at an
/// epoch boundary matches an uninterrupted run. Throws EmptyDataset.
MosTrainResult train_mos(MosNetwork & net, const std::vector<MosSample> & data, const MosTrainConfig & config,
  Adam & optimizer, int start_epoch = 0);

/// Sample indices of one epoch in training order.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::string_view stream, int epoch);

}  // namespace moralkit

#endif  // MORALKIT__MRE_HPP_
