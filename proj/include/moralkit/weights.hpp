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

#ifndef MORALKIT__WEIGHTS_HPP_
#define MORALKIT__WEIGHTS_HPP_

#include "moralkit/nn.hpp"
#include "moralkit/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace moralkit
{

// Binary layout (little-endian):
//   "MKWT" | u32 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] | f32 data[prod(dims)]
inline constexpr char kWeightsMagic[4] = {'M', 'K', 'W', 'T'};
inline constexpr std::uint32_t kWeightsVersion = 1;

struct NamedTensor
{
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_container(const std::vector<NamedTensor> & tensors);
std::vector<NamedTensor> decode_container(const std::vector<std::uint8_t> & bytes);

void write_container(const std::filesystem::path & path, const std::vector<NamedTensor> & tensors);
std::vector<NamedTensor> read_container(const std::filesystem::path & path);

NamedTensor to_tensor(const std::string & name, const Mat & m);
Mat to_matrix(const NamedTensor & t);

std::vector<NamedTensor> export_params(const ParamList & params);
/// Loads every parameter in `params` by name; throws ShapeMismatch or Parse
/// when a tensor is missing or has a different shape. Extra tensors are ignored.
void import_params(const ParamList & params, const std::vector<NamedTensor> & tensors);

NamedTensor to_tensor(const std::string & name, const FeatureMap & map);
FeatureMap to_feature_map(const NamedTensor & t, Vec2 grid_origin = Vec2::Zero(), double cell_size = 1.0);

const NamedTensor * find_tensor(const std::vector<NamedTensor> & tensors, const std::string & name);

}  // namespace moralkit

#endif  // MORALKIT__WEIGHTS_HPP_
