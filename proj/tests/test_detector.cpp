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

#include "moralkit/detector.hpp"
#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"
#include "moralkit/scene.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace moralkit
{
namespace
{

FeatureMap grid_like(int height = 16, int width = 16)
{
  return FeatureMap(1, height, width, Vec2(0.0, -0.4 * width), 0.8);
}

ModelConfig small_model()
{
  ModelConfig c;
  c.radar_grid = {0.0, 12.8, -6.4, 6.4, 0.8, 16, 16};
  c.lidar_grid = c.radar_grid;
  c.head.hidden = 8;
  return c;
}

TaskConfig near_task()
{
  TaskConfig t;
  t.object_x_max = 12.0;
  t.object_y_abs_max = 5.5;
  t.lidar_ground_points = 600;
  return t;
}

std::vector<PreparedSample> prepared(const DetectorModel & model, int count)
{
  std::vector<PreparedSample> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(model.prepare(simulate(make_task_scene(near_task(), 0, k))));
  }
  return out;
}

std::vector<double> snapshot(DetectorModel & model)
{
  std::vector<double> values;
  model.visit("", [&](const std::string &, Param & p) {
    values.insert(values.end(), p.value.data(), p.value.data() + p.value.size());
  });
  return values;
}

// ---------------------------------------------------------------------------
// Box coding

TEST(BoxCoding, RoundTrip)
{
  Rng rng(1);
  const auto like = grid_like();
  int tested = 0;
  for (int k = 0; k < 2000; ++k) {
    Box3D box = testing::random_box(rng, kAllClasses[static_cast<std::size_t>(k) % kNumClasses]);
    box.center.x() = rng.uniform(0.0, 12.8);
    box.center.y() = rng.uniform(-6.4, 6.4);
    CellRef cell;
    ASSERT_TRUE(center_cell(box, like, cell));
    const auto v = encode_box(box, like, cell);
    ASSERT_GE(v[0], -0.5);
    ASSERT_LT(v[0], 0.5);
    ASSERT_GE(v[1], -0.5);
    ASSERT_LT(v[1], 0.5);
    const Box3D back = decode_box(v, like, cell, box.cls);
    ASSERT_LT((back.center - box.center).norm(), 1e-6);
    ASSERT_LT((back.size - box.size).norm(), 1e-6);
    ASSERT_LT(std::abs(normalize_angle(back.yaw - box.yaw)), 1e-6);
    ASSERT_EQ(back.cls, box.cls);
    ++tested;
  }
  EXPECT_EQ(tested, 2000);
  Box3D outside;
  outside.center = Vec3(-0.1, 0.0, 0.0);
  CellRef cell;
  EXPECT_FALSE(center_cell(outside, like, cell));
  outside.center = Vec3(1.0, 6.4, 0.0);
  EXPECT_FALSE(center_cell(outside, like, cell));
}

// ---------------------------------------------------------------------------
// Peak decoding and NMS

HeadOutput flat_output(double logit)
{
  HeadOutput out;
  out.heatmap = FeatureMap(static_cast<int>(kNumClasses), 16, 16, Vec2(0.0, -6.4), 0.8);
  out.regression = FeatureMap(kRegressionChannels, 16, 16, Vec2(0.0, -6.4), 0.8);
  for (auto & v : out.heatmap.data()) {
    v = logit;
  }
  return out;
}

TEST(Detect, FlatLogitsGiveNothing)
{
  EXPECT_TRUE(detect(flat_output(0.0), DetectParams{}).empty());
  EXPECT_TRUE(detect(flat_output(-10.0), DetectParams{}).empty());
}

TEST(Detect, SinglePeakDecodes)
{
  auto out = flat_output(-5.0);
  Box3D box;
  box.center = Vec3(4.1, 1.3, 0.8);
  box.size = Vec3(1.7, 0.6, 1.7);
  box.yaw = 0.4;
  box.cls = ObjectClass::Cyclist;
  CellRef cell;
  ASSERT_TRUE(center_cell(box, out.heatmap, cell));
  const auto v = encode_box(box, out.heatmap, cell);
  for (int r = 0; r < kRegressionChannels; ++r) {
    out.regression.at(r, cell.i, cell.j) = v[static_cast<std::size_t>(r)];
  }
  out.heatmap.at(static_cast<int>(ObjectClass::Cyclist), cell.i, cell.j) = 2.0;
  const auto dets = detect(out, DetectParams{}, 7);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].frame_id, 7);
  EXPECT_EQ(dets[0].box.cls, ObjectClass::Cyclist);
  EXPECT_NEAR(dets[0].score, 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
  EXPECT_LT((dets[0].box.center - box.center).norm(), 1e-9);
  EXPECT_NEAR(dets[0].box.yaw, 0.4, 1e-12);

  // a plateau is not a strict peak, and the threshold is inclusive
  out.heatmap.at(static_cast<int>(ObjectClass::Cyclist), cell.i, cell.j + 1) = 2.0;
  EXPECT_TRUE(detect(out, DetectParams{}).empty());
  out.heatmap.at(static_cast<int>(ObjectClass::Cyclist), cell.i, cell.j + 1) = -5.0;
  DetectParams strict;
  strict.score_threshold = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_EQ(detect(out, strict).size(), 1u);
  strict.score_threshold = std::nextafter(strict.score_threshold, 1.0);
  EXPECT_TRUE(detect(out, strict).empty());
}

TEST(Detect, MaxDetectionsKeepsHighestScores)
{
  auto out = flat_output(-5.0);
  for (int k = 0; k < 5; ++k) {
    out.heatmap.at(0, 2 + 3 * k, 4) = static_cast<double>(k);
    out.regression.at(3, 2 + 3 * k, 4) = std::log(4.0);
    out.regression.at(4, 2 + 3 * k, 4) = std::log(1.8);
    out.regression.at(7, 2 + 3 * k, 4) = 1.0;
  }
  DetectParams params;
  params.max_detections = 2;
  const auto dets = detect(out, params);
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_NEAR(dets[0].score, 1.0 / (1.0 + std::exp(-4.0)), 1e-12);
  EXPECT_NEAR(dets[1].score, 1.0 / (1.0 + std::exp(-3.0)), 1e-12);
}

Detection car_at(double x, double y, double score, int frame = 0, ObjectClass cls = ObjectClass::Car)
{
  Detection d;
  d.box.center = Vec3(x, y, 0.75);
  d.box.size = Vec3(4.0, 1.8, 1.5);
  d.box.cls = cls;
  d.score = score;
  d.frame_id = frame;
  return d;
}

TEST(Nms, Cases)
{
  EXPECT_TRUE(non_max_suppression({}, 0.5).empty());

  auto kept = non_max_suppression({car_at(10, 0, 0.6), car_at(10.2, 0, 0.9)}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);

  kept = non_max_suppression({car_at(10, 0, 0.6), car_at(10.2, 0, 0.9, 0, ObjectClass::Cyclist)}, 0.5);
  EXPECT_EQ(kept.size(), 2u);
  kept = non_max_suppression({car_at(10, 0, 0.6, 0), car_at(10.2, 0, 0.9, 1)}, 0.5);
  EXPECT_EQ(kept.size(), 2u);

  // IoU of a 2 m shift is 1/3: suppressed at 0.3, kept at 0.5
  EXPECT_EQ(non_max_suppression({car_at(10, 0, 0.6), car_at(12, 0, 0.9)}, 0.3).size(), 1u);
  EXPECT_EQ(non_max_suppression({car_at(10, 0, 0.6), car_at(12, 0, 0.9)}, 0.5).size(), 2u);

  // suppression is transitive only through survivors
  kept = non_max_suppression({car_at(10, 0, 0.9), car_at(10.8, 0, 0.8), car_at(11.6, 0, 0.7)}, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[1].score, 0.7);
}

TEST(Nms, SurvivorsArePairwiseSeparated)
{
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Detection> dets;
    for (int k = 0; k < 40; ++k) {
      Detection d;
      d.box = testing::random_box(rng, kAllClasses[static_cast<std::size_t>(k) % kNumClasses]);
      d.box.center.x() = rng.uniform(0, 10);
      d.box.center.y() = rng.uniform(0, 10);
      d.score = rng.uniform();
      dets.push_back(d);
    }
    const auto kept = non_max_suppression(dets, 0.4);
    for (std::size_t a = 0; a < kept.size(); ++a) {
      if (a > 0) {
        ASSERT_GE(kept[a - 1].score, kept[a].score);
      }
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        if (kept[a].box.cls == kept[b].box.cls) {
          ASSERT_LE(bev_iou(kept[a].box, kept[b].box), 0.4);
        }
      }
    }
    // every dropped detection overlaps a higher-scoring survivor of its class
    for (const auto & d : dets) {
      bool survived = false;
      bool covered = false;
      for (const auto & k : kept) {
        survived |= k.score == d.score && k.box.center == d.box.center;
        covered |= k.box.cls == d.box.cls && k.score >= d.score && bev_iou(k.box, d.box) > 0.4;
      }
      ASSERT_TRUE(survived || covered);
    }
  }
}

// ---------------------------------------------------------------------------
// Targets and loss

TEST(Targets, PeaksAndMirrorSymmetry)
{
  Rng rng(3);
  const auto like = grid_like();
  std::vector<Box3D> boxes, mirrored;
  for (int k = 0; k < 6; ++k) {
    Box3D b = testing::random_box(rng, kAllClasses[static_cast<std::size_t>(k) % kNumClasses]);
    b.center.x() = rng.uniform(0.5, 12.3);
    b.center.y() = rng.uniform(-6.0, 6.0);
    boxes.push_back(b);
    b.center.y() = -b.center.y();
    b.yaw = -b.yaw;
    mirrored.push_back(b);
  }
  Box3D far = boxes[0];
  far.center.x() = 40.0;
  boxes.push_back(far);
  mirrored.push_back(far);

  const auto t = build_targets(boxes, like);
  const auto m = build_targets(mirrored, like);
  ASSERT_EQ(t.positives.size(), 6u);
  EXPECT_EQ(t.heatmap.channels(), static_cast<int>(kNumClasses));
  for (const auto & p : t.positives) {
    EXPECT_EQ(t.heatmap.at(static_cast<int>(p.cls), p.cell.i, p.cell.j), 1.0);
  }
  for (double v : t.heatmap.data()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  for (int c = 0; c < t.heatmap.channels(); ++c) {
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        ASSERT_NEAR(t.heatmap.at(c, i, j), m.heatmap.at(c, i, 15 - j), 1e-12);
      }
    }
  }
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(t.positives[k].target[1], -m.positives[k].target[1], 1e-12);
    EXPECT_NEAR(t.positives[k].target[6], -m.positives[k].target[6], 1e-12);
    EXPECT_NEAR(t.positives[k].target[7], m.positives[k].target[7], 1e-12);
  }
}

TEST(DetectionLoss, PerfectAndMirroredPredictions)
{
  Rng rng(4);
  const auto like = grid_like();
  std::vector<Box3D> boxes;
  Box3D b = testing::random_box(rng, ObjectClass::Pedestrian);
  b.center = Vec3(5.0, 1.0, 0.9);
  boxes.push_back(b);
  const auto t = build_targets(boxes, like);
  auto out = flat_output(-30.0);
  const auto & p = t.positives[0];
  out.heatmap.at(static_cast<int>(p.cls), p.cell.i, p.cell.j) = 30.0;
  for (int r = 0; r < kRegressionChannels; ++r) {
    out.regression.at(r, p.cell.i, p.cell.j) = p.target[static_cast<std::size_t>(r)];
  }
  HeadOutput grad;
  const auto loss = detection_loss(out, t, 1.0, &grad);
  EXPECT_EQ(loss.regression, 0.0);
  EXPECT_LT(loss.heatmap, 1e-9);
  EXPECT_NEAR(loss.total, loss.heatmap + loss.regression, 1e-15);
  for (double g : grad.regression.data()) {
    ASSERT_EQ(g, 0.0);
  }
  out.regression.at(0, p.cell.i, p.cell.j) += 0.25;
  const auto worse = detection_loss(out, t, 2.0);
  EXPECT_NEAR(worse.regression, 0.5 * 0.25 * 0.25, 1e-12);
  EXPECT_NEAR(worse.total, worse.heatmap + 2.0 * worse.regression, 1e-12);

  HeadOutput bad = out;
  bad.heatmap = FeatureMap(3, 15, 16);
  EXPECT_THROW(detection_loss(bad, t, 1.0), Error);
}

TEST(DetectionLoss, EmptyTargetsOnlyPenalizeScores)
{
  const auto like = grid_like();
  const auto t = build_targets(std::vector<Box3D>{}, like);
  EXPECT_TRUE(t.positives.empty());
  const auto low = detection_loss(flat_output(-8.0), t, 1.0);
  const auto high = detection_loss(flat_output(0.0), t, 1.0);
  EXPECT_EQ(low.regression, 0.0);
  EXPECT_LT(low.heatmap, high.heatmap);
  EXPECT_GT(low.heatmap, 0.0);
}

// ---------------------------------------------------------------------------
// Augmentation

TEST(Augment, FlipAndRotationAreRigid)
{
  const DetectorModel model(small_model());
  const auto s = prepared(model, 1)[0];
  ASSERT_FALSE(s.boxes.empty());
  Augmentation flip;
  flip.flip_y = true;
  const auto once = augment(s, flip);
  const auto twice = augment(once, flip);
  for (std::size_t k = 0; k < s.radar.size(); ++k) {
    ASSERT_EQ(twice.radar[k].y, s.radar[k].y);
    ASSERT_EQ(once.radar[k].y, -s.radar[k].y);
    ASSERT_EQ(once.radar[k].v_abs, s.radar[k].v_abs);
  }
  for (std::size_t k = 0; k < s.boxes.size(); ++k) {
    EXPECT_EQ(once.boxes[k].center.y(), -s.boxes[k].center.y());
    EXPECT_NEAR(normalize_angle(once.boxes[k].yaw + s.boxes[k].yaw), 0.0, 1e-12);
  }

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto aug = draw_augmentation(rng);
    ASSERT_GE(aug.scale, 0.95);
    ASSERT_LE(aug.scale, 1.05);
    ASSERT_LE(std::abs(aug.rotation), 10.0 * std::numbers::pi / 180.0 + 1e-12);
    const auto a = augment(s, aug);
    for (std::size_t k = 0; k + 1 < s.lidar.size(); k += 7) {
      const double d0 = (s.lidar[k].position() - s.lidar[k + 1].position()).norm();
      const double d1 = (a.lidar[k].position() - a.lidar[k + 1].position()).norm();
      ASSERT_NEAR(d1, aug.scale * d0, 1e-9);
    }
    for (std::size_t k = 0; k < s.boxes.size(); ++k) {
      // corners move with the box
      const auto c0 = bev_corners(s.boxes[k]);
      const auto c1 = bev_corners(a.boxes[k]);
      const double e0 = (c0[0] - c0[1]).norm();
      const double e1 = (c1[0] - c1[1]).norm();
      ASSERT_NEAR(e1, aug.scale * e0, 1e-9);
    }
  }
}

// ---------------------------------------------------------------------------
// Model and training

TEST(DetectorModel, PrepareAndForwardShapes)
{
  DetectorModel model(small_model());
  model.init(0);
  const auto s = prepared(model, 1)[0];
  EXPECT_TRUE(s.mos_ran);
  EXPECT_EQ(s.motion_labels.size(), s.stacked.size());
  EXPECT_EQ(s.mask.labels.size(), s.stacked.size());
  const auto out = model.forward(s);
  EXPECT_EQ(out.heatmap.channels(), static_cast<int>(kNumClasses));
  EXPECT_EQ(out.heatmap.height(), 16);
  EXPECT_EQ(out.regression.channels(), kRegressionChannels);
  EXPECT_TRUE(out.heatmap.all_finite());
  EXPECT_TRUE(out.regression.all_finite());
  for (double v : out.heatmap.data()) {
    ASSERT_LT(std::abs(v - kHeatmapPriorBias), 2.0);
  }

  DetectorModel plain(small_model());
  plain.init(0);
  plain.set_runtime(false, false, 5, kDefaultAlpha);
  const auto p = plain.prepare(simulate(make_task_scene(near_task(), 0, 0)));
  EXPECT_TRUE(p.motion.sa_features.size() == 0);
  EXPECT_TRUE(plain.forward(p).heatmap.all_finite());
}

TEST(DetectorModel, InitIsSeeded)
{
  DetectorModel a(small_model()), b(small_model()), c(small_model());
  a.init(3);
  b.init(3);
  c.init(4);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(TrainDetector, ZeroEpochsLeaveParameters)
{
  DetectorModel model(small_model());
  model.init(1);
  const auto data = prepared(model, 2);
  const auto before = snapshot(model);
  DetectorTrainConfig tc;
  tc.epochs = 0;
  Adam adam(tc.adam);
  const auto r = train_detector(model, data, tc, adam);
  EXPECT_TRUE(r.step_losses.empty());
  EXPECT_EQ(snapshot(model), before);
  try {
    train_detector(model, {}, tc, adam);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(TrainDetector, LossDecreasesAndIsDeterministic)
{
  auto run = [](std::vector<double> & params) {
    DetectorModel model(small_model());
    model.init(2);
    const auto data = prepared(model, 4);
    double before = 0.0;
    for (const auto & s : data) {
      before += sample_loss(model, s).total;
    }
    DetectorTrainConfig tc;
    tc.epochs = 15;
    tc.batch_size = 2;
    tc.augment = false;
    tc.adam.learning_rate = 3e-3;
    Adam adam(tc.adam);
    const auto r = train_detector(model, data, tc, adam);
    EXPECT_EQ(r.epoch_losses.size(), 15u);
    EXPECT_EQ(r.step_losses.size(), 30u);
    double after = 0.0;
    for (const auto & s : data) {
      after += sample_loss(model, s).total;
    }
    EXPECT_LT(after, 0.5 * before);
    params = snapshot(model);
    return r.epoch_losses;
  };
  std::vector<double> pa, pb;
  const auto a = run(pa);
  const auto b = run(pb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(pa, pb);
}

TEST(TrainDetector, StagedTrainingFreezesMotionNetwork)
{
  DetectorModel model(small_model());
  model.init(3);
  const auto data = prepared(model, 2);
  std::vector<double> mos_before;
  model.mos.visit("", [&](const std::string &, Param & p) {
    mos_before.insert(mos_before.end(), p.value.data(), p.value.data() + p.value.size());
  });
  DetectorTrainConfig tc;
  tc.epochs = 2;
  Adam adam(tc.adam);
  train_detector(model, data, tc, adam);
  std::vector<double> mos_after;
  model.mos.visit("", [&](const std::string &, Param & p) {
    mos_after.insert(mos_after.end(), p.value.data(), p.value.data() + p.value.size());
  });
  EXPECT_EQ(mos_before, mos_after);
}

}  // namespace
}  // namespace moralkit
