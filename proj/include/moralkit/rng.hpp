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

#ifndef MORALKIT__RNG_HPP_
#define MORALKIT__RNG_HPP_

#include <cstdint>
#include <string_view>

namespace moralkit
{

/// 64-bit finalizer from SplitMix64.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over a string, used to name random sub-streams.
std::uint64_t hash_name(std::string_view name);

/// Key for the sub-stream `name` (and optional index) under a root seed.
std::uint64_t stream_key(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

/// Counter-based generator: draw k of a stream is a pure function of
/// (key, k), so independent streams can be generated in any order or in
/// parallel without changing their values.
class Rng
{
public:
  explicit Rng(std::uint64_t key) : key_(key) {}
  Rng(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0)
  : key_(stream_key(root_seed, name, index))
  {
  }

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  int poisson(double lambda);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace moralkit

#endif  // MORALKIT__RNG_HPP_
