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

#include "moralkit/scene.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/geometry.hpp"
#include "moralkit/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace moralkit
{

namespace
{

void require(bool ok, const std::string & field, const std::string & why)
{
  if (!ok) {
    fail(ErrorCode::InvalidConfig, "scene." + field + " " + why);
  }
}

constexpr double kRadarHeight = 0.5;

struct Face
{
  Vec3 origin;  // world
  Vec3 edge_u;
  Vec3 edge_v;
  double area() const { return edge_u.cross(edge_v).norm(); }
};

Box3D box_at(const SceneObject & obj, double t)
{
  Box3D b = obj.box;
  b.center = obj.box.center + obj.velocity * t;
  return b;
}

/// Faces of a box seen from `sensor` (world coordinates). Side faces span
/// [clearance, height]; the roof is included when the sensor is above it.
std::vector<Face> visible_faces(const Box3D & box, const Vec3 & sensor, double clearance, bool allow_roof)
{
  std::vector<Face> faces;
  const auto corners = bev_corners(box);
  const double z_lo = box.center.z() - 0.5 * box.size.z() + clearance;
  const double z_hi = box.center.z() + 0.5 * box.size.z();
  for (int k = 0; k < 4; ++k) {
    const Vec2 & a = corners[k];
    const Vec2 & b = corners[(k + 1) % 4];
    const Vec2 edge = b - a;
    const Vec2 normal(edge.y(), -edge.x());  // outward for CCW corners
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 to_face = mid - Vec2(sensor.x(), sensor.y());
    if (normal.dot(to_face) < 0.0) {
      faces.push_back({Vec3(a.x(), a.y(), z_lo), Vec3(edge.x(), edge.y(), 0.0), Vec3(0.0, 0.0, z_hi - z_lo)});
    }
  }
  if (allow_roof && sensor.z() > z_hi) {
    const Vec2 & c0 = corners[2];
    const Vec2 u = corners[3] - c0;
    const Vec2 v = corners[1] - c0;
    faces.push_back({Vec3(c0.x(), c0.y(), z_hi), Vec3(u.x(), u.y(), 0.0), Vec3(v.x(), v.y(), 0.0)});
  }
  return faces;
}

Vec3 sample_surface(const std::vector<Face> & faces, Rng & rng)
{
  double total = 0.0;
  for (const auto & f : faces) {
    total += f.area();
  }
  double pick = rng.uniform() * total;
  const Face * chosen = &faces.back();
  for (const auto & f : faces) {
    if (pick < f.area()) {
      chosen = &f;
      break;
    }
    pick -= f.area();
  }
  const double a = rng.uniform();
  const double b = rng.uniform();
  return chosen->origin + a * chosen->edge_u + b * chosen->edge_v;
}

Vec3 world_to_ego(const Vec3 & p, const EgoPose & pose)
{
  const Eigen::Matrix3d r = Eigen::AngleAxisd(pose.yaw, Vec3::UnitZ()).toRotationMatrix();
  return r.transpose() * (p - pose.translation);
}

Vec3 world_dir_to_ego(const Vec3 & v, const EgoPose & pose)
{
  const Eigen::Matrix3d r = Eigen::AngleAxisd(pose.yaw, Vec3::UnitZ()).toRotationMatrix();
  return r.transpose() * v;
}

bool inside_footprint(const Box3D & box, double x, double y, double margin)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = x - box.center.x();
  const double dy = y - box.center.y();
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * box.size.x() + margin && std::abs(ly) <= 0.5 * box.size.y() + margin;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void SceneConfig::validate() const
{
  require(n_frames >= 1, "n_frames", "must be >= 1");
  require(std::isfinite(frame_period) && frame_period > 0.0, "frame_period", "must be > 0");
  require(std::isfinite(ego_speed), "ego_speed", "must be finite");
  require(std::isfinite(ego_yaw_rate), "ego_yaw_rate", "must be finite");
  require(clutter_rate >= 0, "clutter_rate", "must be >= 0");
  require(multipath_rate >= 0, "multipath_rate", "must be >= 0");
  require(noise_sigma_pos >= 0.0, "noise_sigma_pos", "must be >= 0");
  require(noise_sigma_vel >= 0.0, "noise_sigma_vel", "must be >= 0");
  require(clutter_outlier_fraction >= 0.0 && clutter_outlier_fraction <= 1.0, "clutter_outlier_fraction",
    "must be in [0, 1]");
  require(clutter_outlier_speed >= 1.0, "clutter_outlier_speed", "must be >= 1");
  require(lidar_ground_points >= 0, "lidar_ground_points", "must be >= 0");
  require(lidar_clutter_points >= 0, "lidar_clutter_points", "must be >= 0");
  require(lidar_noise_sigma >= 0.0, "lidar_noise_sigma", "must be >= 0");
  require(extent.x_max > extent.x_min && extent.y_max > extent.y_min, "extent", "must be non-degenerate");
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto & o = objects[k];
    const std::string field = "objects[" + std::to_string(k) + "]";
    require(is_valid(o.box), field + ".box", "must have finite pose and positive size");
    require(o.velocity.allFinite() && o.velocity.norm() <= kMaxObjectSpeed, field + ".velocity",
      "must be finite with magnitude <= 40 m/s");
    require(o.point_density >= 0.0, field + ".point_density", "must be >= 0");
    require(o.lidar_density >= 0.0, field + ".lidar_density", "must be >= 0");
  }
}

RadialVelocity radar_project(const Vec3 & point_pos, const Vec3 & point_world_vel, const Vec3 & ego_vel)
{
  const Vec3 u = radial_unit_vector(point_pos);
  return {(point_world_vel - ego_vel).dot(u), point_world_vel.dot(u)};
}

EgoPose ego_pose_at(const SceneConfig & config, int index)
{
  const double t = config.frame_period * index;
  const double w = config.ego_yaw_rate;
  const double v = config.ego_speed;
  EgoPose pose;
  if (std::abs(w) < 1e-12) {
    pose.translation = Vec3(v * t, 0.0, 0.0);
  } else {
    pose.translation = Vec3(v / w * std::sin(w * t), v / w * (1.0 - std::cos(w * t)), 0.0);
  }
  pose.yaw = normalize_angle(w * t);
  return pose;
}

FrameSequence simulate(const SceneConfig & config)
{
  config.validate();
  FrameSequence seq;
  seq.frame_period = config.frame_period;
  seq.frames.resize(static_cast<std::size_t>(config.n_frames));

  // Per-object reflector offsets for multipath ghosts.
  std::vector<double> reflector_y(config.objects.size());
  for (std::size_t k = 0; k < config.objects.size(); ++k) {
    Rng rng(config.seed, "sim-reflector", k);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    reflector_y[k] = config.objects[k].box.center.y() + side * rng.uniform(2.0, 5.0);
  }

  for (int f = 0; f < config.n_frames; ++f) {
    Rng rng(config.seed, "sim-frame", static_cast<std::uint64_t>(f));
    Frame & frame = seq.frames[static_cast<std::size_t>(f)];
    frame.pose = ego_pose_at(config, f);
    const double time = config.frame_period * f;
    const Vec3 ego_vel_world =
      config.ego_speed * Vec3(std::cos(frame.pose.yaw), std::sin(frame.pose.yaw), 0.0);
    const Vec3 ego_vel = world_dir_to_ego(ego_vel_world, frame.pose);
    const Vec3 radar_origin = frame.pose.translation + Vec3(0.0, 0.0, kRadarHeight);
    const Vec3 lidar_origin = frame.pose.translation + Vec3(0.0, 0.0, config.lidar_height);

    auto add_radar = [&](const Vec3 & pos_ego_true, const Vec3 & vel_ego, double rcs, std::uint8_t label,
                       int source, double vel_scale) {
      RadialVelocity rv = radar_project(pos_ego_true, vel_ego, ego_vel);
      const Vec3 u = radial_unit_vector(pos_ego_true);
      const double v_abs = rv.v_abs * vel_scale + config.noise_sigma_vel * rng.normal();
      RadarPoint p;
      p.x = pos_ego_true.x() + config.noise_sigma_pos * rng.normal();
      p.y = pos_ego_true.y() + config.noise_sigma_pos * rng.normal();
      p.z = pos_ego_true.z() + 3.0 * config.noise_sigma_pos * rng.normal();
      p.rcs = rcs;
      p.v_abs = v_abs;
      p.v_rel = v_abs - ego_vel.dot(u);
      p.t = 0;
      frame.radar.push_back(p);
      frame.motion_labels.push_back(label);
      frame.radar_source.push_back(source);
    };

    std::vector<Box3D> world_boxes;
    for (std::size_t k = 0; k < config.objects.size(); ++k) {
      const auto & obj = config.objects[k];
      const Box3D wb = box_at(obj, time);
      world_boxes.push_back(wb);
      Box3D eb = wb;
      eb.center = world_to_ego(wb.center, frame.pose);
      eb.yaw = normalize_angle(wb.yaw - frame.pose.yaw);
      frame.boxes.push_back(eb);
      frame.box_velocities.push_back(world_dir_to_ego(obj.velocity, frame.pose));
    }

    // Object radar returns.
    std::vector<std::size_t> moving_returns;
    for (std::size_t k = 0; k < config.objects.size(); ++k) {
      const auto & obj = config.objects[k];
      const auto profile = class_profile(obj.box.cls);
      const auto faces = visible_faces(world_boxes[k], radar_origin, profile.clearance, false);
      if (faces.empty()) {
        continue;
      }
      const int count = static_cast<int>(std::lround(obj.point_density));
      const Vec3 vel_ego = world_dir_to_ego(obj.velocity, frame.pose);
      for (int i = 0; i < count; ++i) {
        const Vec3 pw = sample_surface(faces, rng);
        const double rcs = profile.rcs_mean + 2.0 * rng.normal();
        add_radar(world_to_ego(pw, frame.pose), vel_ego, rcs, obj.moving() ? 1 : 0, static_cast<int>(k), 1.0);
        if (obj.moving()) {
          moving_returns.push_back(frame.radar.size() - 1);
        }
      }
    }

    // Multipath ghosts: mirrored copies of moving-object returns.
    if (!moving_returns.empty()) {
      for (int i = 0; i < config.multipath_rate; ++i) {
        const auto src_idx = moving_returns[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(moving_returns.size()) - 1))];
        const int k = frame.radar_source[src_idx];
        const auto & obj = config.objects[static_cast<std::size_t>(k)];
        const RadarPoint & src = frame.radar[src_idx];
        const Vec3 src_world =
          Eigen::AngleAxisd(frame.pose.yaw, Vec3::UnitZ()).toRotationMatrix() * src.position() + frame.pose.translation;
        Vec3 ghost_world = src_world;
        ghost_world.y() = 2.0 * reflector_y[static_cast<std::size_t>(k)] - src_world.y();
        Vec3 mirrored_vel = obj.velocity;
        mirrored_vel.y() = -mirrored_vel.y();
        const Vec3 ghost_ego = world_to_ego(ghost_world, frame.pose);
        if (ghost_ego.norm() <= 1.0) {
          continue;
        }
        const double scale = 1.0 + 0.3 * rng.normal();
        add_radar(ghost_ego, world_dir_to_ego(mirrored_vel, frame.pose), src.rcs - 6.0 + 2.0 * rng.normal(), 1,
          kSourceMultipath, scale);
      }
    }

    // Static clutter, some with spurious Doppler.
    for (int i = 0; i < config.clutter_rate; ++i) {
      const Vec3 pos(rng.uniform(config.extent.x_min, config.extent.x_max),
        rng.uniform(config.extent.y_min, config.extent.y_max), rng.uniform(0.0, 2.5));
      const double rcs = -2.0 + 4.0 * rng.normal();
      const bool outlier = rng.bernoulli(config.clutter_outlier_fraction);
      const double fake = outlier ? (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(1.0, config.clutter_outlier_speed)
                                  : 0.0;
      RadialVelocity rv = radar_project(pos, Vec3::Zero(), ego_vel);
      const Vec3 u = radial_unit_vector(pos);
      const double v_abs = rv.v_abs + fake + config.noise_sigma_vel * rng.normal();
      RadarPoint p;
      p.x = pos.x();
      p.y = pos.y();
      p.z = pos.z();
      p.rcs = rcs;
      p.v_abs = v_abs;
      p.v_rel = v_abs - ego_vel.dot(u);
      frame.radar.push_back(p);
      frame.motion_labels.push_back(0);
      frame.radar_source.push_back(kSourceClutter);
    }

    // LiDAR: objects, ground, elevated clutter.
    for (std::size_t k = 0; k < config.objects.size(); ++k) {
      const auto & obj = config.objects[k];
      const auto profile = class_profile(obj.box.cls);
      const auto faces = visible_faces(world_boxes[k], lidar_origin, profile.clearance, true);
      const int count = static_cast<int>(std::lround(obj.lidar_density));
      if (faces.empty()) {
        continue;
      }
      const double base_intensity = obj.box.cls == ObjectClass::Car ? 0.6 : 0.35;
      for (int i = 0; i < count; ++i) {
        Vec3 p = world_to_ego(sample_surface(faces, rng), frame.pose);
        p += config.lidar_noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
        frame.lidar.push_back({p.x(), p.y(), p.z(), clamp01(base_intensity + 0.15 * rng.normal())});
        frame.lidar_source.push_back(static_cast<int>(k));
      }
    }
    for (int i = 0; i < config.lidar_ground_points; ++i) {
      const double x = rng.uniform(config.extent.x_min, config.extent.x_max);
      const double y = rng.uniform(config.extent.y_min, config.extent.y_max);
      const double z = config.lidar_noise_sigma * rng.normal();
      const double intensity = clamp01(0.1 + 0.05 * rng.normal());
      bool covered = false;
      for (const auto & b : frame.boxes) {
        covered = covered || inside_footprint(b, x, y, 0.0);
      }
      if (covered) {
        continue;
      }
      frame.lidar.push_back({x, y, z, intensity});
      frame.lidar_source.push_back(kSourceGround);
    }
    for (int i = 0; i < config.lidar_clutter_points; ++i) {
      const double x = rng.uniform(config.extent.x_min, config.extent.x_max);
      const double y = rng.uniform(config.extent.y_min, config.extent.y_max);
      const double z = rng.uniform(0.6, 3.0);
      frame.lidar.push_back({x, y, z, clamp01(0.4 + 0.2 * rng.normal())});
      frame.lidar_source.push_back(kSourceLidarClutter);
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------

ClassProfile class_profile(ObjectClass cls)
{
  switch (cls) {
    case ObjectClass::Car: return {Vec3(4.2, 1.8, 1.5), 0.30, 10.0, 5.0, 12.0, 6.0, 80.0};
    case ObjectClass::Pedestrian: return {Vec3(0.6, 0.6, 1.7), 0.15, -5.0, 0.8, 1.8, 2.0, 25.0};
    case ObjectClass::Cyclist: return {Vec3(1.8, 0.6, 1.7), 0.15, 2.0, 3.0, 6.0, 3.0, 35.0};
  }
  return {};
}

SceneConfig make_task_scene(const TaskConfig & task, std::uint64_t seed, int index)
{
  Rng rng(seed, "task-scene", static_cast<std::uint64_t>(index));
  SceneConfig cfg;
  cfg.n_frames = task.n_frames;
  cfg.frame_period = task.frame_period;
  cfg.ego_speed = rng.uniform(0.0, task.ego_speed_max);
  cfg.clutter_rate = task.clutter_rate;
  cfg.multipath_rate = task.multipath_rate;
  cfg.clutter_outlier_fraction = task.clutter_outlier_fraction;
  cfg.noise_sigma_pos = task.noise_sigma_pos;
  cfg.noise_sigma_vel = task.noise_sigma_vel;
  cfg.lidar_ground_points = task.lidar_ground_points;
  cfg.lidar_clutter_points = task.lidar_clutter_points;
  cfg.seed = mix64(stream_key(seed, "task-sim", static_cast<std::uint64_t>(index)));

  std::vector<ObjectClass> classes;
  auto push = [&](ObjectClass cls, int lo, int hi) {
    const auto n = rng.uniform_int(lo, hi);
    for (std::int64_t i = 0; i < n; ++i) {
      classes.push_back(cls);
    }
  };
  push(ObjectClass::Car, task.cars_min, task.cars_max);
  push(ObjectClass::Pedestrian, task.pedestrians_min, task.pedestrians_max);
  push(ObjectClass::Cyclist, task.cyclists_min, task.cyclists_max);

  const double travel = task.frame_period * std::max(0, task.n_frames - 1);
  for (auto cls : classes) {
    const auto profile = class_profile(cls);
    for (int attempt = 0; attempt < 50; ++attempt) {
      SceneObject obj;
      obj.box.cls = cls;
      obj.box.size = profile.size;
      obj.box.center = Vec3(rng.uniform(task.object_x_min, task.object_x_max),
        rng.uniform(-task.object_y_abs_max, task.object_y_abs_max), 0.5 * profile.size.z());
      const bool forward = rng.bernoulli(0.5);
      obj.box.yaw = normalize_angle((forward ? 0.0 : std::numbers::pi) + rng.uniform(-0.2, 0.2));
      if (rng.bernoulli(task.moving_probability)) {
        const double speed = rng.uniform(profile.speed_min, profile.speed_max);
        obj.velocity = speed * Vec3(std::cos(obj.box.yaw), std::sin(obj.box.yaw), 0.0);
      }
      // Keep clear of the sensor and of other objects over the whole sequence.
      const Vec3 end = obj.box.center + obj.velocity * travel;
      const double radius = 0.5 * profile.size.head<2>().norm();
      bool ok = obj.box.center.head<2>().norm() > 4.0 + radius && end.head<2>().norm() > 4.0 + radius &&
                end.x() > 1.0 + radius;
      for (const auto & other : cfg.objects) {
        const double r_other = 0.5 * other.box.size.head<2>().norm();
        for (double s : {0.0, 0.5, 1.0}) {
          const Vec3 a = obj.box.center + obj.velocity * travel * s;
          const Vec3 b = other.box.center + other.velocity * travel * s;
          ok = ok && (a - b).head<2>().norm() > radius + r_other + 1.0;
        }
      }
      if (!ok) {
        continue;
      }
      const double range = std::max(task.lidar_reference_range, obj.box.center.head<2>().norm());
      const double falloff = std::pow(task.lidar_reference_range / range, 2.0);
      obj.point_density = profile.radar_density;
      obj.lidar_density = rng.bernoulli(task.lidar_occlusion_probability)
                            ? 0.0
                            : std::max(1.0, std::round(profile.lidar_density * falloff));
      cfg.objects.push_back(obj);
      break;
    }
  }
  return cfg;
}

SceneConfig default_tail_scene(std::uint64_t seed)
{
  SceneConfig cfg;
  cfg.n_frames = 5;
  cfg.frame_period = 0.1;
  cfg.clutter_rate = 20;
  cfg.noise_sigma_pos = 0.05;
  cfg.noise_sigma_vel = 0.1;
  cfg.lidar_ground_points = 500;
  cfg.seed = seed;
  SceneObject car;
  car.box.cls = ObjectClass::Car;
  car.box.size = class_profile(ObjectClass::Car).size;
  car.box.center = Vec3(25.0, 0.0, 0.75);
  car.box.yaw = std::numbers::pi;
  car.velocity = Vec3(-10.0, 0.0, 0.0);
  car.point_density = 10.0;
  car.lidar_density = 60.0;
  cfg.objects.push_back(car);
  return cfg;
}

}  // namespace moralkit
