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

#ifndef MORALKIT__PIPELINE_HPP_
#define MORALKIT__PIPELINE_HPP_

#include "moralkit/config.hpp"
#include "moralkit/detector.hpp"
#include "moralkit/eval.hpp"
#include "moralkit/mre.hpp"
#include "moralkit/scene.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moralkit
{

/// Scene index offset separating held-out sequences from training ones.
inline constexpr int kTestSceneOffset = 1'000'000;

struct Dataset
{
  std::vector<FrameSequence> train;
  std::vector<FrameSequence> test;
  std::vector<SceneConfig> train_scenes;
  std::vector<SceneConfig> test_scenes;
};

Dataset generate_dataset(const PipelineConfig & config);

/// Model settings with every seed derived from the root seed.
ModelConfig model_config(const PipelineConfig & config);
/// Learning-rate schedule spans `epochs` passes over `samples` samples.
AdamConfig adam_config(const PipelineConfig & config, int epochs, std::size_t samples);
DetectorTrainConfig detector_train_config(const PipelineConfig & config, std::size_t samples,
  bool end_to_end = false);

/// One stacked, velocity-encoded sample per sequence (last frame as target).
std::vector<MosSample> mos_samples(const std::vector<FrameSequence> & seqs, int frames);

struct MosEvaluation
{
  MosMetrics network;
  MosMetrics threshold_baseline;
};

MosEvaluation evaluate_mos(const MosNetwork & net, const std::vector<FrameSequence> & seqs, int frames,
  double alpha, double speed_threshold = 1.0);

/// Optimizer for train_mos_stage over `train`.
Adam mos_optimizer(const PipelineConfig & config, const std::vector<FrameSequence> & train);

MosTrainResult train_mos_stage(MosNetwork & net, const std::vector<FrameSequence> & train,
  const PipelineConfig & config, Adam & optimizer, int start_epoch = 0);

std::vector<PreparedSample> prepare_samples(const DetectorModel & model, const std::vector<FrameSequence> & seqs);

/// Latest-frame boxes of every sequence; frame id = sequence index.
std::vector<GroundTruthBox> ground_truth(const std::vector<FrameSequence> & seqs);
std::vector<Detection> run_inference(const DetectorModel & model, const std::vector<PreparedSample> & samples);

// ---------------------------------------------------------------------------
// Ablations

struct Variant
{
  std::string label;
  bool use_mre = true;
  bool use_magf = true;
  int frames = 5;
  double alpha = kDefaultAlpha;

  std::string key() const;
};

/// Presets: "frames" (K = 1, 3, 5), "alpha" (0.3, 0.5, 0.7), "modules"
/// (neither, MRE only, MAGF only, both). Throws InvalidConfig.
std::vector<Variant> ablation_preset(std::string_view preset);

/// Dataset, trained motion network and per-variant results for one seed.
/// The motion network is trained once and shared by every variant; each
/// variant trains its own detector from the same initialization.
class BenchmarkSession
{
public:
  BenchmarkSession(PipelineConfig config, std::uint64_t seed);

  const PipelineConfig & config() const { return config_; }
  const Dataset & dataset();
  const MosNetwork & mos();
  const MosTrainResult & mos_history();
  MosEvaluation mos_evaluation();

  struct Result
  {
    EvalReport report;
    DetectorTrainResult history;
  };

  const Result & run(const Variant & variant);

private:
  PipelineConfig config_;
  std::optional<Dataset> dataset_;
  std::unique_ptr<MosNetwork> mos_;
  MosTrainResult mos_history_;
  std::map<std::string, Result> results_;
};

struct AblationTable
{
  std::string preset;
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<EvalReport>> reports;  // [variant][seed]
};

AblationTable run_ablation(std::string_view preset, const std::vector<std::uint64_t> & seeds,
  std::map<std::uint64_t, BenchmarkSession> & sessions, const PipelineConfig & config);

/// Rows = variants; columns = per-seed mAP (entire area), mean mAP, and the
/// mean per-region mAP.
std::string format_ablation(const AblationTable & table);
nlohmann::json to_json(const AblationTable & table);

}  // namespace moralkit

#endif  // MORALKIT__PIPELINE_HPP_
