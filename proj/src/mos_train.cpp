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

#include "moralkit/errors.hpp"
#include "moralkit/mre.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace moralkit
{

namespace
{

struct BatchWeights
{
  std::array<double, 2> per_class{0.0, 0.0};
  double total = 0.0;
};

BatchWeights balance(const std::vector<const MosSample *> & batch)
{
  std::array<double, 2> counts{0.0, 0.0};
  for (const auto * s : batch) {
    for (auto l : s->labels) {
      counts[l != 0 ? 1 : 0] += 1.0;
    }
  }
  BatchWeights w;
  const double n = counts[0] + counts[1];
  for (std::size_t c = 0; c < 2; ++c) {
    w.per_class[c] = counts[c] > 0.0 ? n / (2.0 * counts[c]) : 0.0;
    w.total += w.per_class[c] * counts[c];
  }
  return w;
}

void check_sample(const MosSample & s)
{
  if (s.labels.size() != s.cloud.size()) {
    fail(ErrorCode::LengthMismatch, "training sample has " + std::to_string(s.labels.size()) + " labels for " +
                                      std::to_string(s.cloud.size()) + " points");
  }
}

// Loss contribution of one sample and, when `d_logits` is set, its gradient.
double sample_loss(const MosOutput & out, const MosSample & s, const BatchWeights & w, Mat * d_logits)
{
  double loss = 0.0;
  if (d_logits != nullptr) {
    d_logits->setZero(out.logits.rows(), 2);
  }
  for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
    const int y = s.labels[static_cast<std::size_t>(i)] != 0 ? 1 : 0;
    const double scale = w.per_class[static_cast<std::size_t>(y)] / w.total;
    const double z = out.logits(i, 1 - y) - out.logits(i, y);
    // -log softmax_y = log(1 + exp(z))
    const double nll = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += scale * nll;
    if (d_logits != nullptr) {
      (*d_logits)(i, 0) = scale * (out.probabilities(i, 0) - (y == 0 ? 1.0 : 0.0));
      (*d_logits)(i, 1) = scale * (out.probabilities(i, 1) - (y == 1 ? 1.0 : 0.0));
    }
  }
  return loss;
}

}  // namespace

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::string_view stream, int epoch)
{
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, stream, static_cast<std::uint64_t>(epoch));
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double mos_loss(const MosNetwork & net, const std::vector<MosSample> & batch)
{
  std::vector<const MosSample *> ptrs;
  for (const auto & s : batch) {
    check_sample(s);
    ptrs.push_back(&s);
  }
  const auto w = balance(ptrs);
  if (w.total <= 0.0) {
    fail(ErrorCode::EmptyDataset, "loss over an empty batch");
  }
  double loss = 0.0;
  for (const auto & s : batch) {
    loss += sample_loss(mos_forward(s.cloud, net), s, w, nullptr);
  }
  return loss;
}

MosTrainResult train_mos(MosNetwork & net, const std::vector<MosSample> & data, const MosTrainConfig & config,
  Adam & optimizer, int start_epoch)
{
  if (data.empty()) {
    fail(ErrorCode::EmptyDataset, "motion segmentation training set is empty");
  }
  if (config.batch_size < 1 || config.epochs < 0) {
    fail(ErrorCode::InvalidConfig, "batch_size must be >= 1 and epochs >= 0");
  }
  std::array<std::size_t, 2> seen{0, 0};
  for (const auto & s : data) {
    check_sample(s);
    for (auto l : s.labels) {
      ++seen[l != 0 ? 1 : 0];
    }
  }
  MosTrainResult result;
  result.degenerate_labels = seen[0] == 0 || seen[1] == 0;

  const auto params = collect_params(net);
  const auto slots_needed = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), data.size());
  std::vector<MosNetwork> slots(slots_needed, net);
  std::vector<ParamList> slot_params;
  for (auto & s : slots) {
    slot_params.push_back(collect_params(s));
  }

  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), config.seed, "mos-batches", epoch);
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += slots_needed) {
      const auto end = std::min(order.size(), begin + slots_needed);
      std::vector<const MosSample *> batch;
      for (std::size_t k = begin; k < end; ++k) {
        batch.push_back(&data[order[k]]);
      }
      const auto w = balance(batch);
      std::vector<double> losses(batch.size(), 0.0);
      parallel_for(batch.size(), [&](std::size_t b) {
        auto & slot = slots[b];
        for (std::size_t p = 0; p < params.size(); ++p) {
          slot_params[b][p].second->value = params[p].second->value;
        }
        zero_grads(slot_params[b]);
        MosCache cache;
        const auto out = mos_forward(batch[b]->cloud, slot, &cache);
        Mat d_logits;
        losses[b] = sample_loss(out, *batch[b], w, &d_logits);
        mos_backward(cache, d_logits, nullptr, nullptr, slot);
      });
      zero_grads(params);
      double step_loss = 0.0;
      for (std::size_t b = 0; b < batch.size(); ++b) {
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
