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

#include "moralkit/weights.hpp"

#include "moralkit/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace moralkit
{

std::size_t NamedTensor::element_count() const
{
  std::size_t n = 1;
  for (auto d : shape) {
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

namespace
{

template <class T>
void put_le(std::vector<std::uint8_t> & out, T value)
{
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
  }
}

class Reader
{
public:
  explicit Reader(const std::vector<std::uint8_t> & bytes) : bytes_(bytes) {}

  template <class T>
  T get()
  {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_string(std::size_t n)
  {
    need(n);
    std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (pos_ + n > bytes_.size()) {
      fail(ErrorCode::Parse, "weight container truncated");
    }
  }

  const std::vector<std::uint8_t> & bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_container(const std::vector<NamedTensor> & tensors)
{
  std::vector<std::uint8_t> out(std::begin(kWeightsMagic), std::end(kWeightsMagic));
  put_le<std::uint32_t>(out, kWeightsVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto & t : tensors) {
    if (t.data.size() != t.element_count()) {
      fail(ErrorCode::ShapeMismatch, "tensor '" + t.name + "' data does not match its shape");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) {
      put_le<std::uint64_t>(out, d);
    }
    for (float v : t.data) {
      put_le<float>(out, v);
    }
  }
  return out;
}

std::vector<NamedTensor> decode_container(const std::vector<std::uint8_t> & bytes)
{
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) {
    fail(ErrorCode::Parse, "not a weight container (bad magic)");
  }
  const std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightsVersion) {
    fail(ErrorCode::VersionMismatch,
      "weight container version " + std::to_string(version) + ", expected " +
        std::to_string(kWeightsVersion));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.get_string(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.shape.push_back(r.get<std::uint64_t>());
    }
    t.data.resize(t.element_count());
    for (auto & v : t.data) {
      v = r.get<float>();
    }
    tensors.push_back(std::move(t));
  }
  if (!r.done()) {
    fail(ErrorCode::Parse, "trailing bytes after weight container");
  }
  return tensors;
}

void write_container(const std::filesystem::path & path, const std::vector<NamedTensor> & tensors)
{
  const auto bytes = encode_container(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(ErrorCode::Io, "write failed for " + path.string());
  }
}

std::vector<NamedTensor> read_container(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot read " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

NamedTensor to_tensor(const std::string & name, const Mat & m)
{
  NamedTensor t{name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, {}};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.data.push_back(static_cast<float>(m(r, c)));
    }
  }
  return t;
}

Mat to_matrix(const NamedTensor & t)
{
  if (t.shape.size() != 2) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + t.name + "' is not rank 2");
  }
  Mat m(static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = t.data[k++];
    }
  }
  return m;
}

std::vector<NamedTensor> export_params(const ParamList & params)
{
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto & [name, p] : params) {
    out.push_back(to_tensor(name, p->value));
  }
  return out;
}

const NamedTensor * find_tensor(const std::vector<NamedTensor> & tensors, const std::string & name)
{
  for (const auto & t : tensors) {
    if (t.name == name) {
      return &t;
    }
  }
  return nullptr;
}

void import_params(const ParamList & params, const std::vector<NamedTensor> & tensors)
{
  for (const auto & [name, p] : params) {
    const auto * t = find_tensor(tensors, name);
    if (t == nullptr) {
      fail(ErrorCode::Parse, "weight container lacks tensor '" + name + "'");
    }
    Mat m = to_matrix(*t);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      fail(ErrorCode::ShapeMismatch, "tensor '" + name + "' has incompatible shape");
    }
    p->value = std::move(m);
  }
}

NamedTensor to_tensor(const std::string & name, const FeatureMap & map)
{
  NamedTensor t{name,
    {static_cast<std::uint64_t>(map.channels()), static_cast<std::uint64_t>(map.height()),
      static_cast<std::uint64_t>(map.width())},
    {}};
  t.data.reserve(map.data().size());
  for (double v : map.data()) {
    t.data.push_back(static_cast<float>(v));
  }
  return t;
}

FeatureMap to_feature_map(const NamedTensor & t, Vec2 grid_origin, double cell_size)
{
  if (t.shape.size() != 3) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + t.name + "' is not C x H x W");
  }
  FeatureMap map(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
    static_cast<int>(t.shape[2]), std::move(grid_origin), cell_size);
  for (std::size_t k = 0; k < t.data.size(); ++k) {
    map.data()[k] = t.data[k];
  }
  return map;
}

}  // namespace moralkit
