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
#include "moralkit/frame_io.hpp"
#include "moralkit/svg.hpp"
#include "moralkit/weights.hpp"

#include <cstdio>
#include <sstream>

namespace moralkit
{

using nlohmann::json;
namespace fs = std::filesystem;

PipelineConfig resolve_config(const fs::path & path, const ConfigOverrides & overrides)
{
  PipelineConfig c = path.empty() ? PipelineConfig{} : load_config(path);
  if (overrides.seed) {
    c.seed = *overrides.seed;
  }
  if (overrides.out) {
    c.out = *overrides.out;
  }
  if (overrides.frames) {
    c.model.frames = *overrides.frames;
  }
  if (overrides.alpha) {
    c.model.alpha = *overrides.alpha;
  }
  if (overrides.strict) {
    c.model.strict = true;
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

namespace
{

std::string sequence_dir(const char * split, std::size_t index)
{
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s/seq_%04zu", split, index);
  return buf;
}

}  // namespace

SimulateSummary cmd_simulate(const PipelineConfig & config, const fs::path & out)
{
  const auto data = generate_dataset(config);
  json manifest;
  manifest["format"] = std::string(kFramesFormat);
  manifest["seed"] = config.seed;
  manifest["config_hash"] = config_hash(config);
  manifest["config"] = to_toml(config);
  manifest["train"] = json::array();
  manifest["test"] = json::array();
  for (std::size_t k = 0; k < data.train.size(); ++k) {
    const auto rel = sequence_dir("train", k);
    write_sequence(out / rel, data.train[k], data.train_scenes[k]);
    manifest["train"].push_back(rel);
  }
  for (std::size_t k = 0; k < data.test.size(); ++k) {
    const auto rel = sequence_dir("test", k);
    write_sequence(out / rel, data.test[k], data.test_scenes[k]);
    manifest["test"].push_back(rel);
  }
  write_text_file(out / kManifestName, manifest.dump(2) + "\n");
  return {config_hash(config), data.train.size(), data.test.size()};
}

Dataset load_dataset(const fs::path & dir)
{
  const auto manifest_path = dir / kManifestName;
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception & e) {
    fail(ErrorCode::Parse, manifest_path.string() + ": " + e.what());
  }
  Dataset d;
  try {
    if (manifest.at("format").get<std::string>() != kFramesFormat) {
      fail(ErrorCode::VersionMismatch, "unsupported data format '" + manifest.at("format").get<std::string>() + "'");
    }
    for (const auto & rel : manifest.at("train")) {
      SceneConfig scene;
      d.train.push_back(read_sequence(dir / rel.get<std::string>(), &scene));
      d.train_scenes.push_back(std::move(scene));
    }
    for (const auto & rel : manifest.at("test")) {
      SceneConfig scene;
      d.test.push_back(read_sequence(dir / rel.get<std::string>(), &scene));
      d.test_scenes.push_back(std::move(scene));
    }
  } catch (const json::exception & e) {
    fail(ErrorCode::Parse, manifest_path.string() + ": " + e.what());
  }
  return d;
}

Dataset dataset_for(const PipelineConfig & config, const std::optional<fs::path> & dir)
{
  return dir ? load_dataset(*dir) : generate_dataset(config);
}

// ---------------------------------------------------------------------------

std::string_view to_string(TrainStage stage)
{
  switch (stage) {
    case TrainStage::Mos: return "mos";
    case TrainStage::Detector: return "detector";
    case TrainStage::EndToEnd: return "end2end";
  }
  return "?";
}

TrainStage parse_stage(std::string_view name)
{
  for (auto s : {TrainStage::Mos, TrainStage::Detector, TrainStage::EndToEnd}) {
    if (name == to_string(s)) {
      return s;
    }
  }
  fail(ErrorCode::InvalidConfig, "unknown stage '" + std::string(name) + "' (mos, detector, end2end)");
}

fs::path weights_path(const fs::path & out, TrainStage stage)
{
  return out / (std::string(to_string(stage)) + ".mkwt");
}

fs::path checkpoint_path(const fs::path & out, TrainStage stage)
{
  return out / (std::string(to_string(stage)) + ".ckpt");
}

namespace
{

fs::path loss_path(const fs::path & out, TrainStage stage)
{
  return out / (std::string(to_string(stage)) + "_loss.csv");
}

void save_checkpoint(const fs::path & path, const ParamList & params, const Adam & adam, int epoch)
{
  auto tensors = export_params(params);
  for (const auto & [name, mv] : adam.moments()) {
    tensors.push_back(to_tensor("adam.m/" + name, mv.first));
    tensors.push_back(to_tensor("adam.v/" + name, mv.second));
  }
  tensors.push_back({"train.epoch", {1}, {static_cast<float>(epoch)}});
  tensors.push_back({"train.steps", {1}, {static_cast<float>(adam.steps())}});
  write_container(path, tensors);
}

int load_checkpoint(const fs::path & path, const ParamList & params, Adam & adam)
{
  const auto tensors = read_container(path);
  import_params(params, tensors);
  const std::string m_prefix = "adam.m/";
  for (const auto & t : tensors) {
    if (t.name.rfind(m_prefix, 0) != 0) {
      continue;
    }
    const auto name = t.name.substr(m_prefix.size());
    const auto * v = find_tensor(tensors, "adam.v/" + name);
    if (v == nullptr) {
      fail(ErrorCode::Parse, path.string() + ": moment '" + name + "' has no second moment");
    }
    adam.moments()[name] = {to_matrix(t), to_matrix(*v)};
  }
  const auto * epoch = find_tensor(tensors, "train.epoch");
  const auto * steps = find_tensor(tensors, "train.steps");
  if (epoch == nullptr || steps == nullptr || epoch->data.size() != 1 || steps->data.size() != 1) {
    fail(ErrorCode::Parse, path.string() + ": not a training checkpoint");
  }
  adam.set_steps(static_cast<std::int64_t>(steps->data[0]));
  return static_cast<int>(epoch->data[0]);
}

std::vector<double> read_losses(const fs::path & path, int epochs)
{
  std::vector<double> losses;
  if (epochs == 0 || !fs::exists(path)) {
    if (epochs > 0) {
      fail(ErrorCode::Io, path.string() + ": loss history missing for resumed run");
    }
    return losses;
  }
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  while (static_cast<int>(losses.size()) < epochs && std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorCode::Parse, path.string() + ": malformed loss row '" + line + "'");
    }
    losses.push_back(parse_double(std::string_view(line).substr(comma + 1)));
  }
  if (static_cast<int>(losses.size()) != epochs) {
    fail(ErrorCode::Parse, path.string() + ": loss history shorter than the checkpoint");
  }
  return losses;
}

void write_losses(const fs::path & path, const std::vector<double> & losses)
{
  std::string text = "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) {
    text += std::to_string(e) + "," + format_double(losses[e]) + "\n";
  }
  write_text_file(path, text);
}

ParamList detector_params(DetectorModel & model, bool end_to_end)
{
  ParamList list;
  auto add = [&list](const std::string & name, Param & p) { list.emplace_back(name, &p); };
  if (end_to_end) {
    model.visit("", add);
  } else {
    model.visit_detector("det.", add);
  }
  return list;
}

MosNetwork & load_mos_into(MosNetwork & net, const fs::path & path)
{
  import_params(collect_params(net, "mos."), read_container(path));
  return net;
}

}  // namespace

DetectorModel load_detector(const PipelineConfig & config, const fs::path & weights)
{
  DetectorModel model(model_config(config));
  auto params = collect_params(model);
  import_params(params, read_container(weights));
  return model;
}

TrainSummary cmd_train(const PipelineConfig & config, const TrainOptions & options, std::ostream & log)
{
  fs::create_directories(options.out);
  const auto data = dataset_for(config, options.data);
  TrainSummary summary;
  summary.weights = weights_path(options.out, options.stage);
  summary.loss_csv = loss_path(options.out, options.stage);
  const auto ckpt = checkpoint_path(options.out, options.stage);
  Adam adam;

  auto resume_from = [&](const ParamList & params) {
    if (options.resume && fs::exists(ckpt)) {
      summary.start_epoch = load_checkpoint(ckpt, params, adam);
      summary.epoch_losses = read_losses(summary.loss_csv, summary.start_epoch);
      log << "resuming " << to_string(options.stage) << " from epoch " << summary.start_epoch << "\n";
    }
  };
  auto last_epoch = [&](int epochs) { return options.stop_after ? std::min(*options.stop_after, epochs) : epochs; };
  auto finish_epoch = [&](const ParamList & params, double loss, int epoch, int epochs) {
    summary.epoch_losses.push_back(loss);
    save_checkpoint(ckpt, params, adam, epoch + 1);
    write_losses(summary.loss_csv, summary.epoch_losses);
    char line[96];
    std::snprintf(line, sizeof(line), "epoch %d/%d  loss %.6f\n", epoch + 1, epochs, loss);
    log << line;
  };

  if (options.stage == TrainStage::Mos) {
    MosNetwork net(config.model.mos);
    net.init(config.seed);
    adam = mos_optimizer(config, data.train);
    const auto params = collect_params(net, "mos.");
    resume_from(params);
    PipelineConfig staged = config;
    for (int e = summary.start_epoch; e < last_epoch(config.train.mos_epochs); ++e) {
      staged.train.mos_epochs = e + 1;
      const auto r = train_mos_stage(net, data.train, staged, adam, e);
      finish_epoch(params, r.epoch_losses.back(), e, config.train.mos_epochs);
    }
    write_container(summary.weights, export_params(params));
    if (!data.test.empty()) {
      const auto eval = evaluate_mos(net, data.test, config.model.frames, config.model.alpha);
      summary.mos = eval.network;
      char line[160];
      std::snprintf(line, sizeof(line),
        "moving IoU %.4f  precision %.4f  recall %.4f  (1 m/s threshold: IoU %.4f precision %.4f)\n",
        eval.network.moving_iou, eval.network.precision, eval.network.recall, eval.threshold_baseline.moving_iou,
        eval.threshold_baseline.precision);
      log << line;
    }
    return summary;
  }

  const bool end_to_end = options.stage == TrainStage::EndToEnd;
  DetectorModel model(model_config(config));
  model.init(config.seed);
  const auto mos_path = options.mos_weights.value_or(weights_path(options.out, TrainStage::Mos));
  if (fs::exists(mos_path)) {
    load_mos_into(model.mos, mos_path);
  } else if (!end_to_end) {
    fail(ErrorCode::Io, mos_path.string() + ": motion network weights not found (run the mos stage first)");
  }
  const auto params = detector_params(model, end_to_end);
  const auto train = prepare_samples(model, data.train);
  auto tc = detector_train_config(config, train.size(), end_to_end);
  adam = Adam(tc.adam);
  resume_from(params);
  for (int e = summary.start_epoch; e < last_epoch(config.train.detector_epochs); ++e) {
    tc.epochs = e + 1;
    const auto r = train_detector(model, train, tc, adam, e);
    finish_epoch(params, r.epoch_losses.back(), e, config.train.detector_epochs);
  }
  write_container(summary.weights, export_params(collect_params(model)));
  if (!data.test.empty()) {
    const auto test = prepare_samples(model, data.test);
    summary.report = evaluate_detections(run_inference(model, test), ground_truth(data.test), config.eval,
      test.size());
    log << format_table(*summary.report);
  }
  return summary;
}

// ---------------------------------------------------------------------------

json to_json(const Detection & det)
{
  json j = to_json(det.box);
  j["score"] = det.score;
  j["frame_id"] = det.frame_id;
  return j;
}

Detection detection_from_json(const json & j)
{
  Detection d;
  d.box = box_from_json(j);
  d.score = j.at("score").get<double>();
  d.frame_id = j.at("frame_id").get<int>();
  return d;
}

std::string format_detections(const std::vector<Detection> & detections)
{
  std::string text;
  for (const auto & d : detections) {
    text += to_json(d).dump() + "\n";
  }
  return text;
}

std::vector<Detection> parse_detections(std::string_view text, const std::string & source)
{
  std::vector<Detection> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      continue;
    }
    try {
      out.push_back(detection_from_json(json::parse(line)));
    } catch (const json::exception & e) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error & e) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
  return out;
}

std::vector<Detection> cmd_infer(const PipelineConfig & config, const fs::path & weights,
  const std::optional<fs::path> & data, const fs::path & out)
{
  const auto model = load_detector(config, weights);
  const auto d = dataset_for(config, data);
  const auto detections = run_inference(model, prepare_samples(model, d.test));
  fs::create_directories(out);
  write_text_file(out / "detections.jsonl", format_detections(detections));
  return detections;
}

EvalReport cmd_eval(const PipelineConfig & config, const std::optional<fs::path> & weights,
  const std::optional<fs::path> & detections, const std::optional<fs::path> & data, const fs::path & out)
{
  if (weights.has_value() == detections.has_value()) {
    fail(ErrorCode::InvalidConfig, "eval needs exactly one of --weights or --detections");
  }
  const auto d = dataset_for(config, data);
  std::vector<Detection> dets;
  if (weights) {
    const auto model = load_detector(config, *weights);
    dets = run_inference(model, prepare_samples(model, d.test));
  } else {
    dets = parse_detections(read_text_file(*detections), detections->string());
  }
  const auto report = evaluate_detections(dets, ground_truth(d.test), config.eval, d.test.size());
  fs::create_directories(out);
  write_text_file(out / "report.json", to_json(report).dump(2) + "\n");
  return report;
}

AblationTable cmd_ablate(const PipelineConfig & config, const std::string & preset,
  const std::vector<std::uint64_t> & seeds, const fs::path & out)
{
  std::map<std::uint64_t, BenchmarkSession> sessions;
  auto table = run_ablation(preset, seeds, sessions, config);
  fs::create_directories(out);
  write_text_file(out / ("ablation_" + preset + ".json"), to_json(table).dump(2) + "\n");
  return table;
}

// ---------------------------------------------------------------------------

namespace
{

std::vector<double> elongations(const RadarCloud & cloud, const Frame & latest)
{
  std::vector<double> out;
  for (std::size_t b = 0; b < latest.boxes.size(); ++b) {
    if (b >= latest.box_velocities.size()) {
      break;
    }
    const Vec2 v = latest.box_velocities[b].head<2>();
    if (v.norm() <= kMovingSpeedThreshold) {
      continue;
    }
    try {
      out.push_back(tail_elongation(cloud, latest.boxes[b], v));
    } catch (const Error & e) {
      if (e.code() != ErrorCode::TooFewPoints) {
        throw;
      }
    }
  }
  return out;
}

}  // namespace

PlotSummary cmd_plot(const PipelineConfig & config, const PlotOptions & options, const fs::path & out)
{
  const auto d = dataset_for(config, options.data);
  if (options.sequence < 0 || options.sequence >= static_cast<int>(d.test.size())) {
    fail(ErrorCode::InvalidConfig, "sequence " + std::to_string(options.sequence) + " out of range [0, " +
                                     std::to_string(d.test.size()) + ")");
  }
  const auto & seq = d.test[static_cast<std::size_t>(options.sequence)];
  if (seq.frames.empty()) {
    fail(ErrorCode::EmptyDataset, "sequence has no frames");
  }
  const int frames = std::min<int>(config.model.frames, static_cast<int>(seq.frames.size()));
  const auto stacked = stack_frames(seq, frames);
  const auto enhanced = velocity_encode(stacked.cloud);
  MotionMask mask;
  if (options.mos_weights) {
    MosNetwork net(config.model.mos);
    load_mos_into(net, *options.mos_weights);
    mask = predict_mask(mos_forward(enhanced, net).moving_probability(), config.model.alpha);
  } else {
    mask = mask_from_labels(stacked.labels);
  }
  const auto compensated = compensate(enhanced, mask, config.model.tau, 0, config.model.strict);

  BevScene scene;
  scene.ground_truth = seq.frames.back().boxes;
  if (options.detections) {
    for (const auto & det : parse_detections(read_text_file(*options.detections), options.detections->string())) {
      if (det.frame_id == options.sequence) {
        scene.detections.push_back(det);
      }
    }
  }
  SvgOptions svg;
  svg.x_min = config.model.lidar_grid.x_min;
  svg.x_max = config.model.lidar_grid.x_max;
  svg.y_min = config.model.lidar_grid.y_min;
  svg.y_max = config.model.lidar_grid.y_max;

  PlotSummary summary;
  fs::create_directories(out);
  summary.stacked_svg = out / "bev_stacked.svg";
  summary.compensated_svg = out / "bev_compensated.svg";

  scene.points = stacked.cloud;
  scene.moving = mask.labels;
  svg.title = "stacked, " + std::to_string(frames) + " frames";
  write_text_file(summary.stacked_svg, render_bev_svg(scene, svg));
  summary.stacked_elongation = elongations(scene.points, seq.frames.back());

  scene.points = compensated.cloud;
  svg.title = "compensated, " + std::to_string(frames) + " frames";
  write_text_file(summary.compensated_svg, render_bev_svg(scene, svg));
  summary.compensated_elongation = elongations(scene.points, seq.frames.back());
  return summary;
}

}  // namespace moralkit
