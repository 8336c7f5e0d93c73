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

#include "moralkit/pipeline.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/frame_io.hpp"
#include "moralkit/rng.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

namespace moralkit
{

Dataset generate_dataset(const PipelineConfig & config)
{
  Dataset d;
  const auto n_train = static_cast<std::size_t>(config.data.train_sequences);
  const auto n_test = static_cast<std::size_t>(config.data.test_sequences);
  d.train_scenes.resize(n_train);
  d.test_scenes.resize(n_test);
  for (std::size_t k = 0; k < n_train; ++k) {
    d.train_scenes[k] = make_task_scene(config.scene, config.seed, static_cast<int>(k));
  }
  for (std::size_t k = 0; k < n_test; ++k) {
    d.test_scenes[k] = make_task_scene(config.scene, config.seed, kTestSceneOffset + static_cast<int>(k));
  }
  d.train.resize(n_train);
  d.test.resize(n_test);
  parallel_for(n_train + n_test, [&](std::size_t k) {
    if (k < n_train) {
      d.train[k] = simulate(d.train_scenes[k]);
    } else {
      d.test[k - n_train] = simulate(d.test_scenes[k - n_train]);
    }
  });
  return d;
}

ModelConfig model_config(const PipelineConfig & config)
{
  ModelConfig m = config.model;
  m.ground.seed = stream_key(config.seed, "ground");
  return m;
}

AdamConfig adam_config(const PipelineConfig & config, int epochs, std::size_t samples)
{
  AdamConfig a;
  a.learning_rate = config.train.learning_rate;
  a.weight_decay = config.train.weight_decay;
  const auto batch = static_cast<std::size_t>(std::max(1, config.train.batch_size));
  a.total_steps = static_cast<std::int64_t>(epochs) * static_cast<std::int64_t>((samples + batch - 1) / batch);
  a.final_lr_fraction = config.train.final_lr_fraction;
  return a;
}

DetectorTrainConfig detector_train_config(const PipelineConfig & config, std::size_t samples, bool end_to_end)
{
  DetectorTrainConfig tc;
  tc.epochs = config.train.detector_epochs;
  tc.batch_size = config.train.batch_size;
  tc.adam = adam_config(config, tc.epochs, samples);
  tc.seed = stream_key(config.seed, "det-train");
  tc.augment = config.train.augment;
  tc.end_to_end = end_to_end;
  return tc;
}

std::vector<MosSample> mos_samples(const std::vector<FrameSequence> & seqs, int frames)
{
  std::vector<MosSample> out;
  out.reserve(seqs.size());
  for (const auto & seq : seqs) {
    const auto stacked = stack_frames(seq, std::min<int>(frames, static_cast<int>(seq.frames.size())));
    out.push_back({velocity_encode(stacked.cloud), stacked.labels});
  }
  return out;
}

MosEvaluation evaluate_mos(const MosNetwork & net, const std::vector<FrameSequence> & seqs, int frames, double alpha,
  double speed_threshold)
{
  const auto samples = mos_samples(seqs, frames);
  std::vector<MosMetrics> per_net(samples.size());
  std::vector<MosMetrics> per_base(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) {
    const auto & s = samples[k];
    per_base[k] = mos_metrics(threshold_mask(s.cloud, speed_threshold).labels, s.labels);
    if (static_cast<int>(s.cloud.size()) >= net.spec().sa[2].samples) {
      const auto mask = predict_mask(mos_forward(s.cloud, net).moving_probability(), alpha);
      per_net[k] = mos_metrics(mask.labels, s.labels);
    } else {
      per_net[k] = mos_metrics(std::vector<std::uint8_t>(s.labels.size(), 0), s.labels);
    }
  });
  MosEvaluation e;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    e.network += per_net[k];
    e.threshold_baseline += per_base[k];
  }
  return e;
}

namespace
{

std::vector<MosSample> usable_mos_samples(const std::vector<FrameSequence> & train, const PipelineConfig & config)
{
  auto samples = mos_samples(train, config.model.frames);
  std::erase_if(samples, [&](const MosSample & s) {
    return static_cast<int>(s.cloud.size()) < config.model.mos.sa[2].samples;
  });
  return samples;
}

}  // namespace

Adam mos_optimizer(const PipelineConfig & config, const std::vector<FrameSequence> & train)
{
  return Adam(adam_config(config, config.train.mos_epochs, usable_mos_samples(train, config).size()));
}

MosTrainResult train_mos_stage(MosNetwork & net, const std::vector<FrameSequence> & train,
  const PipelineConfig & config, Adam & optimizer, int start_epoch)
{
  MosTrainConfig tc;
  tc.epochs = config.train.mos_epochs;
  tc.batch_size = config.train.batch_size;
  tc.adam = optimizer.config();
  tc.seed = stream_key(config.seed, "mos-train");
  return train_mos(net, usable_mos_samples(train, config), tc, optimizer, start_epoch);
}

std::vector<PreparedSample> prepare_samples(const DetectorModel & model, const std::vector<FrameSequence> & seqs)
{
  std::vector<PreparedSample> out(seqs.size());
  parallel_for(seqs.size(), [&](std::size_t k) {
    out[k] = model.prepare(seqs[k]);
    out[k].frame_id = static_cast<int>(k);
  });
  return out;
}

std::vector<GroundTruthBox> ground_truth(const std::vector<FrameSequence> & seqs)
{
  std::vector<GroundTruthBox> gts;
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    if (seqs[k].frames.empty()) {
      continue;
    }
    for (const auto & b : seqs[k].frames.back().boxes) {
      gts.push_back({b, static_cast<int>(k)});
    }
  }
  return gts;
}

std::vector<Detection> run_inference(const DetectorModel & model, const std::vector<PreparedSample> & samples)
{
  std::vector<std::vector<Detection>> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t k) { per[k] = model.infer(samples[k], samples[k].frame_id); });
  std::vector<Detection> all;
  for (auto & p : per) {
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

// ---------------------------------------------------------------------------

std::string Variant::key() const
{
  char buf[96];
  std::snprintf(buf, sizeof(buf), "mre=%d magf=%d K=%d alpha=%.6f", use_mre ? 1 : 0, use_magf ? 1 : 0, frames, alpha);
  return buf;
}

std::vector<Variant> ablation_preset(std::string_view preset)
{
  if (preset == "frames") {
    return {{"1 frame", true, true, 1, 0.5}, {"3 frames", true, true, 3, 0.5}, {"5 frames", true, true, 5, 0.5}};
  }
  if (preset == "alpha") {
    return {{"alpha=0.3", true, true, 5, 0.3}, {"alpha=0.5", true, true, 5, 0.5}, {"alpha=0.7", true, true, 5, 0.7}};
  }
  if (preset == "modules") {
    return {{"neither", false, false, 5, 0.5}, {"MRE only", true, false, 5, 0.5}, {"MAGF only", false, true, 5, 0.5},
      {"MRE+MAGF", true, true, 5, 0.5}};
  }
  fail(ErrorCode::InvalidConfig, "unknown ablation preset '" + std::string(preset) + "' (frames, alpha, modules)");
}

BenchmarkSession::BenchmarkSession(PipelineConfig config, std::uint64_t seed) : config_(std::move(config))
{
  config_.seed = seed;
}

const Dataset & BenchmarkSession::dataset()
{
  if (!dataset_) {
    dataset_ = generate_dataset(config_);
  }
  return *dataset_;
}

const MosNetwork & BenchmarkSession::mos()
{
  if (!mos_) {
    mos_ = std::make_unique<MosNetwork>(config_.model.mos);
    mos_->init(config_.seed);
    Adam adam = mos_optimizer(config_, dataset().train);
    mos_history_ = train_mos_stage(*mos_, dataset().train, config_, adam);
  }
  return *mos_;
}

const MosTrainResult & BenchmarkSession::mos_history()
{
  mos();
  return mos_history_;
}

MosEvaluation BenchmarkSession::mos_evaluation()
{
  return evaluate_mos(mos(), dataset().test, config_.model.frames, config_.model.alpha);
}

const BenchmarkSession::Result & BenchmarkSession::run(const Variant & variant)
{
  const auto key = variant.key();
  if (auto it = results_.find(key); it != results_.end()) {
    return it->second;
  }
  const auto & net = mos();
  DetectorModel model(model_config(config_));
  model.init(config_.seed);
  model.mos = net;
  model.set_runtime(variant.use_mre, variant.use_magf, variant.frames, variant.alpha);
  const auto train = prepare_samples(model, dataset().train);
  const auto test = prepare_samples(model, dataset().test);

  const auto tc = detector_train_config(config_, train.size());
  Adam adam(tc.adam);
  Result r;
  r.history = train_detector(model, train, tc, adam);
  const auto detections = run_inference(model, test);
  r.report = evaluate_detections(detections, ground_truth(dataset().test), config_.eval, test.size());
  return results_.emplace(key, std::move(r)).first->second;
}

AblationTable run_ablation(std::string_view preset, const std::vector<std::uint64_t> & seeds,
  std::map<std::uint64_t, BenchmarkSession> & sessions, const PipelineConfig & config)
{
  AblationTable t;
  t.preset = std::string(preset);
  t.variants = ablation_preset(preset);
  t.seeds = seeds;
  t.reports.assign(t.variants.size(), {});
  for (auto seed : seeds) {
    auto it = sessions.find(seed);
    if (it == sessions.end()) {
      it = sessions.emplace(seed, BenchmarkSession(config, seed)).first;
    }
    for (std::size_t v = 0; v < t.variants.size(); ++v) {
      t.reports[v].push_back(it->second.run(t.variants[v]).report);
    }
  }
  return t;
}

namespace
{

double region_map(const EvalReport & r, std::size_t region)
{
  return region < r.regions.size() ? r.regions[region].map : 0.0;
}

}  // namespace

std::string format_ablation(const AblationTable & table)
{
  std::ostringstream os;
  char buf[64];
  os << "Preset: " << table.preset << "  (mAP %, entire area per seed)\n";
  std::snprintf(buf, sizeof(buf), "%-12s", "Variant");
  os << buf;
  for (auto s : table.seeds) {
    std::snprintf(buf, sizeof(buf), " %9s", ("seed " + std::to_string(s)).c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), " %9s %9s\n", "mean", "corridor");
  os << buf;
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    std::snprintf(buf, sizeof(buf), "%-12s", table.variants[v].label.c_str());
    os << buf;
    double sum = 0.0;
    double corridor = 0.0;
    for (const auto & r : table.reports[v]) {
      std::snprintf(buf, sizeof(buf), " %9.2f", 100.0 * region_map(r, 0));
      os << buf;
      sum += region_map(r, 0);
      corridor += region_map(r, 1);
    }
    const double n = std::max<double>(1.0, static_cast<double>(table.reports[v].size()));
    std::snprintf(buf, sizeof(buf), " %9.2f %9.2f\n", 100.0 * sum / n, 100.0 * corridor / n);
    os << buf;
  }
  return os.str();
}

nlohmann::json to_json(const AblationTable & table)
{
  nlohmann::json j;
  j["preset"] = table.preset;
  j["seeds"] = table.seeds;
  j["variants"] = nlohmann::json::array();
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    nlohmann::json vj;
    vj["label"] = table.variants[v].label;
    vj["use_mre"] = table.variants[v].use_mre;
    vj["use_magf"] = table.variants[v].use_magf;
    vj["frames"] = table.variants[v].frames;
    vj["alpha"] = table.variants[v].alpha;
    vj["reports"] = nlohmann::json::array();
    for (const auto & r : table.reports[v]) {
      vj["reports"].push_back(to_json(r));
    }
    j["variants"].push_back(vj);
  }
  return j;
}

}  // namespace moralkit
