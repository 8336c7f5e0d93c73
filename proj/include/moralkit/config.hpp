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

#ifndef MORALKIT__CONFIG_HPP_
#define MORALKIT__CONFIG_HPP_

#include "moralkit/detector.hpp"
#include "moralkit/eval.hpp"
#include "moralkit/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace moralkit
{

// ---------------------------------------------------------------------------
// TOML subset: [section] headers, `key = value` lines, # comments. Values are
// numbers, true/false, "strings" and flat [arrays] of numbers.

struct TomlValue
{
  std::variant<double, bool, std::string, std::vector<double>> value;
  int line = 0;
};

/// Keys are "section.key" (or "key" before the first section).
using TomlTable = std::map<std::string, TomlValue>;

/// Throws Parse with "source:line: message".
TomlTable parse_toml(std::string_view text, const std::string & source = "config");

// ---------------------------------------------------------------------------

struct DataConfig
{
  int train_sequences = 48;
  int test_sequences = 96;
};

struct TrainConfig
{
  int mos_epochs = 30;
  int detector_epochs = 40;
  int batch_size = 8;
  double learning_rate = 0.003;
  double weight_decay = 0.01;
  double final_lr_fraction = 1.0;  // cosine decay target, 1 = constant rate
  bool augment = true;
};

struct PipelineConfig
{
  std::uint64_t seed = 0;
  std::string out = "out";
  TaskConfig scene;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

/// Unknown keys and wrongly typed values raise Parse errors naming the field.
PipelineConfig parse_config(std::string_view text, const std::string & source = "config");
PipelineConfig load_config(const std::filesystem::path & path);

/// Canonical text listing every field; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const PipelineConfig & config);
/// FNV-1a of to_toml(config), 16 hex digits.
std::string config_hash(const PipelineConfig & config);

}  // namespace moralkit

#endif  // MORALKIT__CONFIG_HPP_
