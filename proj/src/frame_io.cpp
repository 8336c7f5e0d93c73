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

#include "moralkit/frame_io.hpp"

#include "moralkit/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace moralkit
{

using nlohmann::json;

std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::Parse, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string format_radar(const RadarCloud & cloud, const std::vector<std::uint8_t> & labels)
{
  if (labels.size() != cloud.size()) {
    fail(ErrorCode::LengthMismatch, "radar labels do not match the cloud");
  }
  std::string out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto & p = cloud[i];
    out += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z) + ' ' + format_double(p.rcs) +
           ' ' + format_double(p.v_rel) + ' ' + format_double(p.v_abs) + ' ' + std::to_string(p.t) + ' ' +
           std::to_string(static_cast<int>(labels[i])) + '\n';
  }
  return out;
}

std::string format_lidar(const LidarCloud & cloud)
{
  std::string out;
  for (const auto & p : cloud) {
    out += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z) + ' ' +
           format_double(p.intensity) + '\n';
  }
  return out;
}

namespace
{

std::vector<std::string_view> split_ws(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

template <class Fn>
void for_each_line(std::string_view text, const std::string & source, std::size_t columns, Fn && fn)
{
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() != columns) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                               " columns, found " + std::to_string(fields.size()));
    }
    try {
      fn(fields);
    } catch (const Error & e) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

int parse_int(std::string_view text)
{
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::Parse, "not an integer: '" + std::string(text) + "'");
  }
  return v;
}

json vec_json(const Vec3 & v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json & j)
{
  if (!j.is_array() || j.size() != 3) {
    fail(ErrorCode::Parse, "expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string frame_name(const char * prefix, std::size_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04zu.txt", prefix, index);
  return buf;
}

}  // namespace

void parse_radar(std::string_view text, RadarCloud & cloud, std::vector<std::uint8_t> & labels,
  const std::string & source_name)
{
  cloud.clear();
  labels.clear();
  for_each_line(text, source_name, 8, [&](const std::vector<std::string_view> & f) {
    RadarPoint p;
    p.x = parse_double(f[0]);
    p.y = parse_double(f[1]);
    p.z = parse_double(f[2]);
    p.rcs = parse_double(f[3]);
    p.v_rel = parse_double(f[4]);
    p.v_abs = parse_double(f[5]);
    p.t = parse_int(f[6]);
    const int label = parse_int(f[7]);
    if (label != 0 && label != 1) {
      fail(ErrorCode::Parse, "label must be 0 or 1");
    }
    cloud.push_back(p);
    labels.push_back(static_cast<std::uint8_t>(label));
  });
}

LidarCloud parse_lidar(std::string_view text, const std::string & source_name)
{
  LidarCloud cloud;
  for_each_line(text, source_name, 4, [&](const std::vector<std::string_view> & f) {
    cloud.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  });
  return cloud;
}

json to_json(const Box3D & box)
{
  return {{"class", std::string(class_name(box.cls))}, {"center", vec_json(box.center)},
    {"size", vec_json(box.size)}, {"yaw", box.yaw}};
}

Box3D box_from_json(const json & j)
{
  Box3D b;
  const auto cls = parse_class(j.at("class").get<std::string>());
  if (!cls) {
    fail(ErrorCode::Parse, "unknown class '" + j.at("class").get<std::string>() + "'");
  }
  b.cls = *cls;
  b.center = vec_from_json(j.at("center"));
  b.size = vec_from_json(j.at("size"));
  b.yaw = j.at("yaw").get<double>();
  return b;
}

json to_json(const SceneConfig & c)
{
  json objects = json::array();
  for (const auto & o : c.objects) {
    objects.push_back({{"box", to_json(o.box)}, {"velocity", vec_json(o.velocity)},
      {"point_density", o.point_density}, {"lidar_density", o.lidar_density}});
  }
  return {{"n_frames", c.n_frames}, {"frame_period", c.frame_period}, {"ego_speed", c.ego_speed},
    {"ego_yaw_rate", c.ego_yaw_rate}, {"objects", objects}, {"clutter_rate", c.clutter_rate},
    {"multipath_rate", c.multipath_rate}, {"noise_sigma_pos", c.noise_sigma_pos},
    {"noise_sigma_vel", c.noise_sigma_vel}, {"clutter_outlier_fraction", c.clutter_outlier_fraction},
    {"clutter_outlier_speed", c.clutter_outlier_speed}, {"lidar_ground_points", c.lidar_ground_points},
    {"lidar_clutter_points", c.lidar_clutter_points}, {"lidar_noise_sigma", c.lidar_noise_sigma},
    {"lidar_height", c.lidar_height},
    {"extent", {{"x_min", c.extent.x_min}, {"x_max", c.extent.x_max}, {"y_min", c.extent.y_min},
                 {"y_max", c.extent.y_max}}},
    {"seed", c.seed}};
}

SceneConfig scene_config_from_json(const json & j)
{
  SceneConfig c;
  c.n_frames = j.at("n_frames").get<int>();
  c.frame_period = j.at("frame_period").get<double>();
  c.ego_speed = j.at("ego_speed").get<double>();
  c.ego_yaw_rate = j.at("ego_yaw_rate").get<double>();
  for (const auto & o : j.at("objects")) {
    SceneObject obj;
    obj.box = box_from_json(o.at("box"));
    obj.velocity = vec_from_json(o.at("velocity"));
    obj.point_density = o.at("point_density").get<double>();
    obj.lidar_density = o.at("lidar_density").get<double>();
    c.objects.push_back(obj);
  }
  c.clutter_rate = j.at("clutter_rate").get<int>();
  c.multipath_rate = j.at("multipath_rate").get<int>();
  c.noise_sigma_pos = j.at("noise_sigma_pos").get<double>();
  c.noise_sigma_vel = j.at("noise_sigma_vel").get<double>();
  c.clutter_outlier_fraction = j.at("clutter_outlier_fraction").get<double>();
  c.clutter_outlier_speed = j.at("clutter_outlier_speed").get<double>();
  c.lidar_ground_points = j.at("lidar_ground_points").get<int>();
  c.lidar_clutter_points = j.at("lidar_clutter_points").get<int>();
  c.lidar_noise_sigma = j.at("lidar_noise_sigma").get<double>();
  c.lidar_height = j.at("lidar_height").get<double>();
  const auto & e = j.at("extent");
  c.extent = {e.at("x_min").get<double>(), e.at("x_max").get<double>(), e.at("y_min").get<double>(),
    e.at("y_max").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path & path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorCode::Io, "cannot write " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    fail(ErrorCode::Io, "write failed for " + path.string());
  }
}

void write_sequence(const std::filesystem::path & dir, const FrameSequence & seq, const SceneConfig & config)
{
  std::filesystem::create_directories(dir);
  json frames = json::array();
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto & frame = seq.frames[f];
    const auto radar_name = frame_name("radar", f);
    const auto lidar_name = frame_name("lidar", f);
    write_text_file(dir / radar_name, format_radar(frame.radar, frame.motion_labels));
    write_text_file(dir / lidar_name, format_lidar(frame.lidar));
    json boxes = json::array();
    for (std::size_t b = 0; b < frame.boxes.size(); ++b) {
      json jb = to_json(frame.boxes[b]);
      jb["velocity"] = vec_json(b < frame.box_velocities.size() ? frame.box_velocities[b] : Vec3::Zero());
      boxes.push_back(jb);
    }
    frames.push_back({{"index", f}, {"radar_file", radar_name}, {"lidar_file", lidar_name},
      {"pose", {{"translation", vec_json(frame.pose.translation)}, {"yaw", frame.pose.yaw}}}, {"boxes", boxes}});
  }
  const json sidecar = {{"format", std::string(kFramesFormat)}, {"frame_period", seq.frame_period},
    {"n_frames", seq.frames.size()}, {"config", to_json(config)}, {"frames", frames}};
  write_text_file(dir / "sequence.json", sidecar.dump(2) + "\n");
}

FrameSequence read_sequence(const std::filesystem::path & dir, SceneConfig * config)
{
  json sidecar;
  try {
    sidecar = json::parse(read_text_file(dir / "sequence.json"));
  } catch (const json::exception & e) {
    fail(ErrorCode::Parse, (dir / "sequence.json").string() + ": " + e.what());
  }
  try {
    if (sidecar.at("format").get<std::string>() != kFramesFormat) {
      fail(ErrorCode::VersionMismatch, "unsupported frame format '" + sidecar.at("format").get<std::string>() + "'");
    }
    FrameSequence seq;
    seq.frame_period = sidecar.at("frame_period").get<double>();
    for (const auto & jf : sidecar.at("frames")) {
      Frame frame;
      const auto radar_path = dir / jf.at("radar_file").get<std::string>();
      const auto lidar_path = dir / jf.at("lidar_file").get<std::string>();
      parse_radar(read_text_file(radar_path), frame.radar, frame.motion_labels, radar_path.string());
      frame.lidar = parse_lidar(read_text_file(lidar_path), lidar_path.string());
      frame.pose.translation = vec_from_json(jf.at("pose").at("translation"));
      frame.pose.yaw = jf.at("pose").at("yaw").get<double>();
      for (const auto & jb : jf.at("boxes")) {
        frame.boxes.push_back(box_from_json(jb));
        frame.box_velocities.push_back(vec_from_json(jb.at("velocity")));
      }
      seq.frames.push_back(std::move(frame));
    }
    if (config != nullptr) {
      *config = scene_config_from_json(sidecar.at("config"));
    }
    return seq;
  } catch (const json::exception & e) {
    fail(ErrorCode::Parse, (dir / "sequence.json").string() + ": " + e.what());
  }
}

}  // namespace moralkit
