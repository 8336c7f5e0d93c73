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

#ifndef MORALKIT__COMMANDS_HPP_
#define MORALKIT__COMMANDS_HPP_

#include "moralkit/config.hpp"
#include "moralkit/eval.hpp"
#include "moralkit/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace moralkit
{

/// Command-line overrides applied on top of the config file.
struct ConfigOverrides
{
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> frames;
  std::optional<double> alpha;
  bool strict = false;
};

/// Defaults when `path` is empty; overrides are applied before validation.
PipelineConfig resolve_config(const std::filesystem::path & path, const ConfigOverrides & overrides);

// ---------------------------------------------------------------------------
// Data directories: manifest.json + train/seq_NNNN + test/seq_NNNN

inline constexpr const char * kManifestName = "manifest.json";

struct SimulateSummary
{
  std::string config_hash;
  std::size_t train_sequences = 0;
  std::size_t test_sequences = 0;
};

SimulateSummary cmd_simulate(const PipelineConfig & config, const std::filesystem::path & out);

/// Reads a directory written by cmd_simulate. Throws Io, Parse, VersionMismatch.
Dataset load_dataset(const std::filesystem::path & dir);

/// load_dataset(dir) when given, otherwise simulates in memory.
Dataset dataset_for(const PipelineConfig & config, const std::optional<std::filesystem::path> & dir);

// ---------------------------------------------------------------------------
// Training

enum class TrainStage
{
  Mos,
  Detector,
  EndToEnd,
};

std::string_view to_string(TrainStage stage);
TrainStage parse_stage(std::string_view name);

struct TrainOptions
{
  TrainStage stage = TrainStage::Mos;
  std::optional<std::filesystem::path> data;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> mos_weights;  // default out/mos.mkwt
  bool resume = false;
  std::optional<int> stop_after;  // end after this many epochs; the schedule still spans all of them
};

struct TrainSummary
{
  std::filesystem::path weights;
  std::filesystem::path loss_csv;
  std::vector<double> epoch_losses;
  int start_epoch = 0;
  std::optional<MosMetrics> mos;
  std::optional<EvalReport> report;
};

/// Writes <stage>.mkwt, <stage>_loss.csv and a per-epoch <stage>.ckpt under
/// options.out. With `resume`, continues from the checkpoint.
TrainSummary cmd_train(const PipelineConfig & config, const TrainOptions & options, std::ostream & log);

std::filesystem::path weights_path(const std::filesystem::path & out, TrainStage stage);
std::filesystem::path checkpoint_path(const std::filesystem::path & out, TrainStage stage);

/// Detector with every parameter read from a weight container.
DetectorModel load_detector(const PipelineConfig & config, const std::filesystem::path & weights);

// ---------------------------------------------------------------------------
// Inference and evaluation

nlohmann::json to_json(const Detection & det);
Detection detection_from_json(const nlohmann::json & j);
std::string format_detections(const std::vector<Detection> & detections);
std::vector<Detection> parse_detections(std::string_view text, const std::string & source = "detections");

/// Detections on the held-out split, frame id = sequence index.
std::vector<Detection> cmd_infer(const PipelineConfig & config, const std::filesystem::path & weights,
  const std::optional<std::filesystem::path> & data, const std::filesystem::path & out);

/// Exactly one of `weights` / `detections` must be set. Writes report.json.
EvalReport cmd_eval(const PipelineConfig & config, const std::optional<std::filesystem::path> & weights,
  const std::optional<std::filesystem::path> & detections, const std::optional<std::filesystem::path> & data,
  const std::filesystem::path & out);

AblationTable cmd_ablate(const PipelineConfig & config, const std::string & preset,
  const std::vector<std::uint64_t> & seeds, const std::filesystem::path & out);

// ---------------------------------------------------------------------------
// Plots

struct PlotOptions
{
  std::optional<std::filesystem::path> data;
  int sequence = 0;
  std::optional<std::filesystem::path> mos_weights;  // oracle labels when absent
  std::optional<std::filesystem::path> detections;
};

struct PlotSummary
{
  std::filesystem::path stacked_svg;
  std::filesystem::path compensated_svg;
  std::vector<double> stacked_elongation;      // per moving ground-truth box with enough points
  std::vector<double> compensated_elongation;
};

PlotSummary cmd_plot(const PipelineConfig & config, const PlotOptions & options, const std::filesystem::path & out);

}  // namespace moralkit

#endif  // MORALKIT__COMMANDS_HPP_
