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

#include "moralkit/commands.hpp"
#include "moralkit/errors.hpp"

#include <CLI11.hpp>

#include <optional>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace moralkit;

namespace
{

struct GlobalFlags
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> frames;
  std::optional<double> alpha;
  bool strict = false;
};

std::optional<fs::path> optional_path(const std::string & s)
{
  return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

void print_elongation(const char * label, const std::vector<double> & values)
{
  std::printf("%s tail elongation:", label);
  if (values.empty()) {
    std::printf(" n/a");
  }
  for (double v : values) {
    std::printf(" %.3f m", v);
  }
  std::printf("\n");
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Radar-LiDAR fusion detection with motion-aware radar encoding"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "pipeline config (TOML)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--frames", g.frames, "radar frames to accumulate (K)");
  app.add_option("--alpha", g.alpha, "motion mask threshold");
  app.add_flag("--strict", g.strict, "fail on degenerate compensation inputs");

  auto * simulate = app.add_subcommand("simulate", "generate synthetic sequences");

  auto * train = app.add_subcommand("train", "train the motion network or the detector");
  std::string stage = "mos";
  std::string data;
  std::string mos_weights;
  bool resume = false;
  std::optional<int> stop_after;
  train->add_option("--stage", stage, "mos | detector | end2end");
  train->add_option("--data", data, "data directory from simulate (default: simulate in memory)");
  train->add_option("--mos-weights", mos_weights, "motion network weights (default: <out>/mos.mkwt)");
  train->add_flag("--resume", resume, "continue from <out>/<stage>.ckpt");
  train->add_option("--stop-after", stop_after, "stop once this many epochs are done")->check(CLI::NonNegativeNumber);

  auto * infer = app.add_subcommand("infer", "write detections for the held-out split");
  std::string weights;
  infer->add_option("--weights", weights, "detector weights")->required();
  infer->add_option("--data", data, "data directory");

  auto * eval = app.add_subcommand("eval", "score detections on the held-out split");
  std::string detections;
  eval->add_option("--weights", weights, "detector weights (live inference)");
  eval->add_option("--detections", detections, "stored detections (JSON lines)");
  eval->add_option("--data", data, "data directory");

  auto * ablate = app.add_subcommand("ablate", "run an ablation preset");
  std::string preset = "modules";
  std::vector<std::uint64_t> seeds;
  ablate->add_option("--preset", preset, "frames | alpha | modules");
  ablate->add_option("--seeds", seeds, "seeds to average over (default: --seed)")->delimiter(',');

  auto * plot = app.add_subcommand("plot", "render stacked and compensated BEV plots");
  PlotOptions plot_options;
  plot->add_option("--data", data, "data directory");
  plot->add_option("--sequence", plot_options.sequence, "held-out sequence index");
  plot->add_option("--mos-weights", mos_weights, "motion network weights (default: ground-truth labels)");
  plot->add_option("--detections", detections, "detections to overlay");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve_config(g.config, {g.seed, g.out, g.frames, g.alpha, g.strict});
    const fs::path out = config.out;

    if (simulate->parsed()) {
      const auto s = cmd_simulate(config, out);
      std::printf("wrote %zu train and %zu test sequences to %s (config %s)\n", s.train_sequences, s.test_sequences,
        out.string().c_str(), s.config_hash.c_str());
    } else if (train->parsed()) {
      TrainOptions opts;
      opts.stage = parse_stage(stage);
      opts.data = optional_path(data);
      opts.out = out;
      opts.mos_weights = optional_path(mos_weights);
      opts.resume = resume;
      opts.stop_after = stop_after;
      const auto s = cmd_train(config, opts, std::cout);
      std::printf("weights: %s\nlosses: %s\n", s.weights.string().c_str(), s.loss_csv.string().c_str());
    } else if (infer->parsed()) {
      const auto dets = cmd_infer(config, weights, optional_path(data), out);
      std::printf("wrote %zu detections to %s\n", dets.size(), (out / "detections.jsonl").string().c_str());
    } else if (eval->parsed()) {
      const auto report = cmd_eval(config, optional_path(weights), optional_path(detections), optional_path(data), out);
      std::cout << format_table(report);
      std::printf("report: %s\n", (out / "report.json").string().c_str());
    } else if (ablate->parsed()) {
      if (seeds.empty()) {
        seeds.push_back(config.seed);
      }
      const auto table = cmd_ablate(config, preset, seeds, out);
      std::cout << format_ablation(table);
    } else if (plot->parsed()) {
      plot_options.data = optional_path(data);
      plot_options.mos_weights = optional_path(mos_weights);
      plot_options.detections = optional_path(detections);
      const auto s = cmd_plot(config, plot_options, out);
      std::printf("wrote %s and %s\n", s.stacked_svg.string().c_str(), s.compensated_svg.string().c_str());
      print_elongation("stacked", s.stacked_elongation);
      print_elongation("compensated", s.compensated_elongation);
    }
  } catch (const Error & e) {
    std::fprintf(stderr, "moralkit: %s\n", e.what());
    return 1;
  } catch (const std::exception & e) {
    std::fprintf(stderr, "moralkit: %s\n", e.what());
    return 1;
  }
  return 0;
}
