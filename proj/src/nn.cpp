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

#include "moralkit/nn.hpp"

#include "moralkit/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace moralkit
{

double sigmoid(double x)
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void zero_grads(const ParamList & params)
{
  for (const auto & [name, p] : params) {
    p->zero_grad();
  }
}

void add_grads(const ParamList & into, const ParamList & from)
{
  if (into.size() != from.size()) {
    fail(ErrorCode::ShapeMismatch, "parameter lists differ");
  }
  for (std::size_t i = 0; i < into.size(); ++i) {
    into[i].second->grad += from[i].second->grad;
  }
}

void round_to_float(const ParamList & params)
{
  for (const auto & [name, p] : params) {
    p->value = p->value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
}

// ---------------------------------------------------------------------------

Linear::Linear(int in, int out) : weight(out, in), bias(1, out) {}

Mat Linear::forward(const Mat & x) const
{
  Mat y = x * weight.value.transpose();
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Linear::backward(const Mat & x, const Mat & dy)
{
  backward_params(x, dy);
  return dy * weight.value;
}

void Linear::backward_params(const Mat & x, const Mat & dy)
{
  weight.grad.noalias() += dy.transpose() * x;
  bias.grad += dy.colwise().sum();
}

void Linear::init(Rng & rng)
{
  const double stddev = std::sqrt(2.0 / std::max(1, in()));
  for (Eigen::Index r = 0; r < weight.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < weight.value.cols(); ++c) {
      weight.value(r, c) = static_cast<float>(rng.normal(0.0, stddev));
    }
  }
  bias.value.setZero();
}

void Linear::visit(const std::string & prefix, const ParamVisitor & f)
{
  f(prefix + ".weight", weight);
  f(prefix + ".bias", bias);
}

// ---------------------------------------------------------------------------

Mlp::Mlp(int in, const std::vector<int> & widths, bool relu_last) : relu_last_(relu_last)
{
  int prev = in;
  for (int w : widths) {
    layers_.emplace_back(prev, w);
    prev = w;
  }
}

Mat Mlp::forward(const Mat & x, Cache * cache) const
{
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Mat h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Mat y = layers_[l].forward(h);
    if (l + 1 < layers_.size() || relu_last_) {
      y = y.cwiseMax(0.0);
    }
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
      cache->outputs.push_back(y);
    }
    h = std::move(y);
  }
  return h;
}

Mat Mlp::backward(const Cache & cache, Mat dy)
{
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size() || relu_last_) {
      dy = (cache.outputs[l].array() > 0.0).select(dy, 0.0);
    }
    dy = layers_[l].backward(cache.inputs[l], dy);
  }
  return dy;
}

void Mlp::init(Rng & rng)
{
  for (auto & layer : layers_) {
    layer.init(rng);
  }
}

void Mlp::visit(const std::string & prefix, const ParamVisitor & f)
{
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].visit(prefix + "." + std::to_string(l), f);
  }
}

// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in, int out, int kernel)
: weight(out, in * kernel * kernel), bias(1, out), in_(in), kernel_(kernel)
{
  if (kernel < 1 || kernel % 2 == 0) {
    fail(ErrorCode::InvalidConfig, "convolution kernel must be odd and positive");
  }
}

Mat Conv2d::im2col(const FeatureMap & x) const
{
  const int h = x.height();
  const int w = x.width();
  const int k = kernel_;
  const int r = k / 2;
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(in_) * k * k, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < in_; ++c) {
    for (int di = 0; di < k; ++di) {
      for (int dj = 0; dj < k; ++dj) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + di) * k + dj;
        const int j0 = std::max(0, r - dj);
        const int j1 = std::min(w, w + r - dj);
        for (int i = std::max(0, r - di); i < std::min(h, h + r - di); ++i) {
          const int si = i + di - r;
          for (int j = j0; j < j1; ++j) {
            cols(row, static_cast<Eigen::Index>(i) * w + j) = x.at(c, si, j + dj - r);
          }
        }
      }
    }
  }
  return cols;
}

FeatureMap Conv2d::forward(const FeatureMap & x, Mat * columns) const
{
  if (x.channels() != in_) {
    fail(ErrorCode::ShapeMismatch, "convolution input channels");
  }
  FeatureMap y(out(), x.height(), x.width(), x.grid_origin(), x.cell_size());
  auto ym = y.matrix();
  if (kernel_ == 1) {
    ym.noalias() = weight.value * x.matrix();
    ym.colwise() += bias.value.row(0).transpose();
    if (columns != nullptr) {
      columns->resize(0, 0);
    }
    return y;
  }
  Mat cols = im2col(x);  // (in k k) x cells
  ym.noalias() = weight.value * cols;
  ym.colwise() += bias.value.row(0).transpose();
  if (columns != nullptr) {
    *columns = std::move(cols);
  }
  return y;
}

FeatureMap Conv2d::backward(const FeatureMap & x, const Mat & columns, const FeatureMap & dy)
{
  FeatureMap dx(in_, x.height(), x.width(), x.grid_origin(), x.cell_size());
  const auto dym = dy.matrix();
  bias.grad += dym.rowwise().sum().transpose();
  if (kernel_ == 1) {
    weight.grad.noalias() += dym * x.matrix().transpose();
    dx.matrix().noalias() = weight.value.transpose() * dym;
    return dx;
  }
  weight.grad.noalias() += dym * columns.transpose();
  Mat dcols(columns.rows(), columns.cols());
  dcols.noalias() = weight.value.transpose() * dym;
  const int h = x.height();
  const int w = x.width();
  const int k = kernel_;
  const int r = k / 2;
  for (int c = 0; c < in_; ++c) {
    for (int di = 0; di < k; ++di) {
      for (int dj = 0; dj < k; ++dj) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + di) * k + dj;
        const int j0 = std::max(0, r - dj);
        const int j1 = std::min(w, w + r - dj);
        for (int i = std::max(0, r - di); i < std::min(h, h + r - di); ++i) {
          const int si = i + di - r;
          for (int j = j0; j < j1; ++j) {
            dx.at(c, si, j + dj - r) += dcols(row, static_cast<Eigen::Index>(i) * w + j);
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::init(Rng & rng)
{
  const double stddev = std::sqrt(2.0 / std::max<Eigen::Index>(1, weight.value.cols()));
  for (Eigen::Index r = 0; r < weight.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < weight.value.cols(); ++c) {
      weight.value(r, c) = static_cast<float>(rng.normal(0.0, stddev));
    }
  }
  bias.value.setZero();
}

void Conv2d::visit(const std::string & prefix, const ParamVisitor & f)
{
  f(prefix + ".weight", weight);
  f(prefix + ".bias", bias);
}

// ---------------------------------------------------------------------------

namespace
{

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

double Adam::learning_rate(std::int64_t step) const
{
  if (config_.total_steps <= 0) {
    return config_.learning_rate;
  }
  const double progress =
    static_cast<double>(std::min(step - 1, config_.total_steps)) / static_cast<double>(config_.total_steps);
  const double f = config_.final_lr_fraction;
  return config_.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

void Adam::step(const ParamList & params)
{
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = learning_rate(steps_);
  for (const auto & [name, p] : params) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_
             .emplace(name, std::make_pair(Mat::Zero(p->value.rows(), p->value.cols()),
                              Mat::Zero(p->value.rows(), p->value.cols())))
             .first;
    }
    Mat & m = it->second.first;
    Mat & v = it->second.second;
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double g = p->grad(r, c);
        double mi = config_.beta1 * m(r, c) + (1.0 - config_.beta1) * g;
        double vi = config_.beta2 * v(r, c) + (1.0 - config_.beta2) * g * g;
        double w = p->value(r, c);
        w -= lr * config_.weight_decay * w;
        w -= lr * (mi / c1) / (std::sqrt(vi / c2) + config_.epsilon);
        if (config_.float_state) {
          mi = to_float(mi);
          vi = to_float(vi);
          w = to_float(w);
        }
        m(r, c) = mi;
        v(r, c) = vi;
        p->value(r, c) = w;
      }
    }
  }
}

// ---------------------------------------------------------------------------

int thread_count()
{
  if (const char * env = std::getenv("MORALKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) {
      return n;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> & fn)
{
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto & t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace moralkit
