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

#include "support.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"
#include "moralkit/nn.hpp"
#include "moralkit/rng.hpp"
#include "moralkit/weights.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <set>

namespace moralkit
{
namespace
{

using testing::random_matrix;

// ---------------------------------------------------------------------------
// Rng

TEST(Rng, StreamsAreReproducible)
{
  Rng a(42, "scene", 3);
  Rng b(42, "scene", 3);
  for (int k = 0; k < 1000; ++k) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
}

TEST(Rng, DistinctNamesGiveDistinctStreams)
{
  std::set<std::uint64_t> keys;
  for (const char * name : {"scene", "mos-train", "det-train", "augment"}) {
    for (std::uint64_t i = 0; i < 8; ++i) {
      keys.insert(stream_key(0, name, i));
    }
  }
  EXPECT_EQ(keys.size(), 32u);
  EXPECT_NE(stream_key(0, "scene"), stream_key(1, "scene"));
}

TEST(Rng, HashNameIsFnv1a)
{
  EXPECT_EQ(hash_name(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_name("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, UniformRanges)
{
  Rng rng(7);
  double sum = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const auto i = rng.uniform_int(-3, 5);
    ASSERT_GE(i, -3);
    ASSERT_LE(i, 5);
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments)
{
  Rng rng(11);
  const int n = 50000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, PoissonMean)
{
  Rng rng(5);
  double s = 0.0;
  for (int k = 0; k < 20000; ++k) {
    s += rng.poisson(4.0);
  }
  EXPECT_NEAR(s / 20000.0, 4.0, 0.06);
}

// ---------------------------------------------------------------------------
// Errors

TEST(Errors, CodeAndMessage)
{
  try {
    fail(ErrorCode::InvalidTau, "tau must be positive");
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidTau);
    EXPECT_EQ(e.message(), "tau must be positive");
    EXPECT_NE(std::string(e.what()).find("InvalidTau"), std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Geometry

TEST(Geometry, RadialUnitVectorExamples)
{
  const Vec3 u = radial_unit_vector(Vec3(3, 4, 0));
  EXPECT_DOUBLE_EQ(u.x(), 0.6);
  EXPECT_DOUBLE_EQ(u.y(), 0.8);
  EXPECT_DOUBLE_EQ(u.z(), 0.0);
  EXPECT_EQ(radial_unit_vector(Vec3(0, 0, 5)), Vec3(0, 0, 1));
  try {
    radial_unit_vector(Vec3::Zero());
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePoint);
  }
}

TEST(Geometry, RadialUnitVectorHasUnitNorm)
{
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const double scale = std::pow(10.0, rng.uniform(-4.0, 3.0));
    const Vec3 p(rng.normal() * scale, rng.normal() * scale, rng.normal() * scale);
    if (p.norm() <= kDegenerateRange) {
      continue;
    }
    ASSERT_NEAR(radial_unit_vector(p).norm(), 1.0, 1e-12);
  }
}

TEST(Geometry, TransformExamples)
{
  const EgoPose identity;
  EgoPose shifted;
  shifted.translation = Vec3(1, 0, 0);
  EgoPose turned;
  turned.yaw = std::numbers::pi / 2;

  const Vec3 p(1, 0, 0);
  EXPECT_EQ(transform_point(p, identity, identity), p);
  EXPECT_NEAR((transform_point(p, identity, shifted) - Vec3::Zero()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((transform_point(p, identity, turned) - Vec3(0, -1, 0)).norm(), 0.0, 1e-15);
}

TEST(Geometry, TransformRoundTrip)
{
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    EgoPose a, b;
    a.translation = Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-1, 1));
    b.translation = Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-1, 1));
    a.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Vec3 p(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 3));
    const Vec3 back = transform_point(transform_point(p, a, b), b, a);
    ASSERT_LT((back - p).norm(), 1e-9);
  }
}

TEST(Geometry, BoxTransformKeepsYawNormalized)
{
  Rng rng(4);
  for (int k = 0; k < 500; ++k) {
    Box3D box = testing::random_box(rng, ObjectClass::Car);
    EgoPose a, b;
    a.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Box3D out = transform_to_frame(box, a, b);
    ASSERT_GT(out.yaw, -std::numbers::pi);
    ASSERT_LE(out.yaw, std::numbers::pi);
    ASSERT_LT((transform_point(box.center, a, b) - out.center).norm(), 1e-12);
  }
}

TEST(Geometry, NormalizeAngle)
{
  EXPECT_DOUBLE_EQ(normalize_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(normalize_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(normalize_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(normalize_angle(0.25 + 8 * std::numbers::pi), 0.25, 1e-12);
}

TEST(Geometry, EnhanceIsPureAndExact)
{
  Rng rng(9);
  const auto cloud = testing::random_radar_cloud(rng, 2000);
  for (const auto & p : cloud) {
    const auto a = enhance(p);
    const auto b = enhance(p);
    ASSERT_EQ(std::memcmp(&a, &b, sizeof(a)), 0);
    const auto f = a.features();
    ASSERT_EQ(f[0], p.x);
    ASSERT_EQ(f[5], p.v_abs);
    ASSERT_EQ(f[6], static_cast<double>(p.t));
    ASSERT_EQ(f[7], std::abs(p.v_abs));
    ASSERT_EQ(f[8], p.v_abs * p.v_abs);
    ASSERT_EQ(f[9], p.v_abs > 0 ? 1.0 : (p.v_abs < 0 ? -1.0 : 0.0));
  }
  RadarPoint zero;
  EXPECT_EQ(enhance(zero).v_dir, 0.0);
}

TEST(Geometry, BevCornersCounterClockwise)
{
  Box3D box;
  box.center = Vec3(2, 1, 0);
  box.size = Vec3(4, 2, 1);
  const auto c = bev_corners(box);
  double area = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto & p = c[k];
    const auto & q = c[(k + 1) % 4];
    area += p.x() * q.y() - q.x() * p.y();
  }
  EXPECT_NEAR(area / 2.0, 8.0, 1e-12);
}

TEST(Types, ClassNamesRoundTrip)
{
  for (auto cls : kAllClasses) {
    EXPECT_EQ(parse_class(class_name(cls)), cls);
  }
  EXPECT_FALSE(parse_class("Truck").has_value());
}

TEST(Types, FeatureMapLayout)
{
  FeatureMap m(2, 3, 4, Vec2(1, -2), 0.5);
  EXPECT_EQ(m.data().size(), 24u);
  m.at(1, 2, 3) = 7.0;
  EXPECT_EQ(m.data()[(1 * 3 + 2) * 4 + 3], 7.0);
  EXPECT_EQ(m.matrix()(1, 2 * 4 + 3), 7.0);
  EXPECT_TRUE(m.all_finite());
  m.at(0, 0, 0) = std::nan("");
  EXPECT_FALSE(m.all_finite());
}

// ---------------------------------------------------------------------------
// Weight container

std::vector<std::uint8_t> le32(std::uint32_t v)
{
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16),
    static_cast<std::uint8_t>(v >> 24)};
}

std::vector<std::uint8_t> le64(std::uint64_t v)
{
  auto lo = le32(static_cast<std::uint32_t>(v));
  const auto hi = le32(static_cast<std::uint32_t>(v >> 32));
  lo.insert(lo.end(), hi.begin(), hi.end());
  return lo;
}

TEST(Weights, EncodesDocumentedLayout)
{
  NamedTensor t{"ab", {1, 2}, {1.0f, -2.0f}};
  std::vector<std::uint8_t> expected = {'M', 'K', 'W', 'T'};
  for (const auto & part : {le32(1), le32(1), le32(2)}) {
    expected.insert(expected.end(), part.begin(), part.end());
  }
  expected.push_back('a');
  expected.push_back('b');
  for (const auto & part : {le32(2), le64(1), le64(2), le32(0x3f800000u), le32(0xc0000000u)}) {
    expected.insert(expected.end(), part.begin(), part.end());
  }
  EXPECT_EQ(encode_container({t}), expected);
}

TEST(Weights, MatchesGoldenFile)
{
  const auto path = std::filesystem::path(MORALKIT_GOLDEN_DIR) / "container.mkwt";
  std::vector<NamedTensor> tensors = {
    {"layer.weight", {2, 3}, {0.5f, -1.25f, 3.0f, 0.0f, 1e-3f, -7.5f}},
    {"layer.bias", {1, 2}, {0.125f, -0.25f}},
    {"scalar", {1}, {42.0f}},
  };
  const auto loaded = read_container(path);
  ASSERT_EQ(loaded.size(), tensors.size());
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    EXPECT_EQ(loaded[k].name, tensors[k].name);
    EXPECT_EQ(loaded[k].shape, tensors[k].shape);
    EXPECT_EQ(loaded[k].data, tensors[k].data);
  }
  EXPECT_EQ(encode_container(loaded), encode_container(tensors));
}

TEST(Weights, RandomRoundTrip)
{
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NamedTensor> tensors;
    const auto n = rng.uniform_int(0, 5);
    for (std::int64_t k = 0; k < n; ++k) {
      NamedTensor t;
      t.name = "t" + std::to_string(k);
      const auto rank = rng.uniform_int(1, 3);
      for (std::int64_t r = 0; r < rank; ++r) {
        t.shape.push_back(static_cast<std::uint64_t>(rng.uniform_int(1, 4)));
      }
      for (std::size_t e = 0; e < t.element_count(); ++e) {
        t.data.push_back(static_cast<float>(rng.normal()));
      }
      tensors.push_back(t);
    }
    const auto back = decode_container(encode_container(tensors));
    ASSERT_EQ(back.size(), tensors.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
      ASSERT_EQ(back[k].name, tensors[k].name);
      ASSERT_EQ(back[k].shape, tensors[k].shape);
      ASSERT_EQ(back[k].data, tensors[k].data);
    }
  }
}

TEST(Weights, RejectsCorruptInput)
{
  auto bytes = encode_container({{"x", {2}, {1.0f, 2.0f}}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_container(bad_magic), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  try {
    decode_container(bad_version);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::VersionMismatch);
  }
  bytes.pop_back();
  try {
    decode_container(bytes);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

TEST(Weights, ImportChecksShapes)
{
  Linear a(3, 2), b(3, 2), c(4, 2);
  Rng rng(2);
  a.init(rng);
  round_to_float(collect_params(a));
  const auto tensors = export_params(collect_params(a, "l."));
  import_params(collect_params(b, "l."), tensors);
  EXPECT_EQ(a.weight.value, b.weight.value);
  EXPECT_EQ(a.bias.value, b.bias.value);
  try {
    import_params(collect_params(c, "l."), tensors);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW(import_params(collect_params(b, "other."), tensors), Error);
}

TEST(Weights, FeatureMapRoundTrip)
{
  Rng rng(8);
  FeatureMap m = testing::random_map(rng, 3, 4, 5);
  for (auto & v : m.data()) {
    v = static_cast<float>(v);
  }
  const FeatureMap back = to_feature_map(to_tensor("map", m));
  ASSERT_TRUE(back.same_shape(m));
  EXPECT_EQ(back.data(), m.data());
}

// ---------------------------------------------------------------------------
// Layers and optimizer

TEST(Linear, MatchesExplicitSum)
{
  Rng rng(12);
  Linear layer(4, 3);
  layer.init(rng);
  layer.bias.value = random_matrix(rng, 1, 3);
  const Mat x = random_matrix(rng, 5, 4);
  const Mat y = layer.forward(x);
  for (int n = 0; n < 5; ++n) {
    for (int o = 0; o < 3; ++o) {
      double s = layer.bias.value(0, o);
      for (int i = 0; i < 4; ++i) {
        s += x(n, i) * layer.weight.value(o, i);
      }
      ASSERT_NEAR(y(n, o), s, 1e-12);
    }
  }
}

TEST(Conv2d, MatchesDirectConvolution)
{
  Rng rng(13);
  Conv2d conv(2, 3, 3);
  conv.init(rng);
  conv.bias.value = random_matrix(rng, 1, 3);
  const FeatureMap x = testing::random_map(rng, 2, 5, 6);
  const FeatureMap y = conv.forward(x);
  for (int o = 0; o < 3; ++o) {
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 6; ++j) {
        double s = conv.bias.value(0, o);
        for (int c = 0; c < 2; ++c) {
          for (int di = 0; di < 3; ++di) {
            for (int dj = 0; dj < 3; ++dj) {
              const int ii = i + di - 1;
              const int jj = j + dj - 1;
              if (ii < 0 || jj < 0 || ii >= 5 || jj >= 6) {
                continue;
              }
              s += conv.weight.value(o, c * 9 + di * 3 + dj) * x.at(c, ii, jj);
            }
          }
        }
        ASSERT_NEAR(y.at(o, i, j), s, 1e-12);
      }
    }
  }
}

TEST(Adam, FirstStepMovesByLearningRate)
{
  Param p(1, 3);
  p.value << 1.0, -1.0, 0.5;
  p.grad << 2.0, -0.5, 0.0;
  AdamConfig config;
  config.weight_decay = 0.0;
  config.float_state = false;
  config.learning_rate = 0.01;
  Adam adam(config);
  adam.step({{"p", &p}});
  // bias-corrected first step is lr * g / (|g| + eps)
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value(0, 1), -1.0 + 0.01, 1e-9);
  EXPECT_EQ(p.value(0, 2), 0.5);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, CosineScheduleEndpoints)
{
  AdamConfig config;
  config.learning_rate = 0.004;
  config.total_steps = 100;
  config.final_lr_fraction = 0.01;
  const Adam adam(config);
  EXPECT_DOUBLE_EQ(adam.learning_rate(1), 0.004);
  EXPECT_NEAR(adam.learning_rate(51), 0.004 * (0.01 + 0.99 * 0.5), 1e-15);
  EXPECT_NEAR(adam.learning_rate(101), 0.004 * 0.01, 1e-15);
  EXPECT_NEAR(adam.learning_rate(500), 0.004 * 0.01, 1e-15);
  for (std::int64_t s = 2; s <= 101; ++s) {
    ASSERT_LE(adam.learning_rate(s), adam.learning_rate(s - 1));
  }
  EXPECT_DOUBLE_EQ(Adam(AdamConfig{}).learning_rate(1000), AdamConfig{}.learning_rate);
}

TEST(Adam, FloatStateKeepsValuesRepresentable)
{
  Rng rng(14);
  Linear layer(6, 4);
  layer.init(rng);
  const auto params = collect_params(layer);
  round_to_float(params);
  Adam adam;
  for (int s = 0; s < 5; ++s) {
    layer.weight.grad = random_matrix(rng, 4, 6);
    layer.bias.grad = random_matrix(rng, 1, 4);
    adam.step(params);
  }
  for (const auto & [name, p] : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const double v = p->value.data()[k];
      ASSERT_EQ(static_cast<double>(static_cast<float>(v)), v) << name;
    }
  }
}

TEST(Parallel, ForCoversEveryIndexOnce)
{
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) {
    ASSERT_EQ(h, 1);
  }
}

}  // namespace
}  // namespace moralkit
