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

#ifndef MORALKIT__NN_HPP_
#define MORALKIT__NN_HPP_

#include "moralkit/rng.hpp"
#include "moralkit/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace moralkit
{

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

double sigmoid(double x);

/// Trainable tensor with its gradient accumulator.
struct Param
{
  Param() = default;
  Param(Eigen::Index rows, Eigen::Index cols) : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }

  Mat value;
  Mat grad;
};

using ParamVisitor = std::function<void(const std::string &, Param &)>;
using ParamList = std::vector<std::pair<std::string, Param *>>;

template <class Model>
ParamList collect_params(Model & model, const std::string & prefix = {})
{
  ParamList list;
  model.visit(prefix, [&list](const std::string & name, Param & p) { list.emplace_back(name, &p); });
  return list;
}

void zero_grads(const ParamList & params);
void add_grads(const ParamList & into, const ParamList & from);
/// Rounds every value to the nearest binary32 so parameters survive the
/// float container bit-exactly.
void round_to_float(const ParamList & params);

/// y = x W^T + b, row per sample.
class Linear
{
public:
  Linear() = default;
  Linear(int in, int out);

  int in() const { return static_cast<int>(weight.value.cols()); }
  int out() const { return static_cast<int>(weight.value.rows()); }

  Mat forward(const Mat & x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Mat backward(const Mat & x, const Mat & dy);
  /// Same as backward() but skips dL/dx.
  void backward_params(const Mat & x, const Mat & dy);

  /// He-normal weights, zero bias.
  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Param weight;  // out x in
  Param bias;    // 1 x out
};

/// Stack of Linear layers with ReLU after each hidden layer (and after the
/// last one when relu_last is set).
class Mlp
{
public:
  struct Cache
  {
    std::vector<Mat> inputs;
    std::vector<Mat> outputs;
  };

  Mlp() = default;
  Mlp(int in, const std::vector<int> & widths, bool relu_last);

  int in() const { return layers_.empty() ? 0 : layers_.front().in(); }
  int out() const { return layers_.empty() ? 0 : layers_.back().out(); }
  bool relu_last() const { return relu_last_; }
  std::size_t depth() const { return layers_.size(); }
  Linear & layer(std::size_t i) { return layers_[i]; }
  const Linear & layer(std::size_t i) const { return layers_[i]; }

  Mat forward(const Mat & x, Cache * cache = nullptr) const;
  Mat backward(const Cache & cache, Mat dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

private:
  std::vector<Linear> layers_;
  bool relu_last_ = true;
};

/// Same-size 2D convolution over a FeatureMap (odd kernel, zero padding).
class Conv2d
{
public:
  Conv2d() = default;
  Conv2d(int in, int out, int kernel);

  int in() const { return in_; }
  int out() const { return static_cast<int>(weight.value.rows()); }
  int kernel() const { return kernel_; }

  /// `columns` receives the im2col matrix needed by backward().
  FeatureMap forward(const FeatureMap & x, Mat * columns = nullptr) const;
  /// Accumulates parameter gradients; returns dL/dx.
  FeatureMap backward(const FeatureMap & x, const Mat & columns, const FeatureMap & dy);

  void init(Rng & rng);
  void visit(const std::string & prefix, const ParamVisitor & f);

  Param weight;  // out x (in * k * k), column = c * k * k + di * k + dj
  Param bias;    // 1 x out

private:
  Mat im2col(const FeatureMap & x) const;
  int in_ = 0;
  int kernel_ = 1;
};

struct AdamConfig
{
  double learning_rate = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // decoupled
  bool float_state = true;     // keep params and moments binary32-representable
  // Cosine decay from learning_rate to final_lr_fraction * learning_rate
  // over total_steps; constant when total_steps is 0.
  std::int64_t total_steps = 0;
  double final_lr_fraction = 1.0;
};

/// Adam with decoupled weight decay.
class Adam
{
public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const ParamList & params);

  std::int64_t steps() const { return steps_; }
  /// Learning rate applied by step number `step` (1-based).
  double learning_rate(std::int64_t step) const;
  const AdamConfig & config() const { return config_; }

  /// Moments keyed by parameter name, for checkpointing.
  std::map<std::string, std::pair<Mat, Mat>> & moments() { return moments_; }
  const std::map<std::string, std::pair<Mat, Mat>> & moments() const { return moments_; }
  void set_steps(std::int64_t steps) { steps_ = steps; }

private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::string, std::pair<Mat, Mat>> moments_;
};

/// Worker count from MORALKIT_THREADS (defaults to hardware concurrency).
int thread_count();

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Callers must
/// write results into per-index slots so output is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> & fn);

}  // namespace moralkit

#endif  // MORALKIT__NN_HPP_
