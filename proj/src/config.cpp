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

#include "moralkit/config.hpp"

#include "moralkit/errors.hpp"
#include "moralkit/frame_io.hpp"
#include "moralkit/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace moralkit
{

namespace
{

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void parse_error(const std::string & source, int line, const std::string & msg)
{
  fail(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + msg);
}

bool parse_number(std::string_view text, double & out)
{
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  const auto * end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

std::string_view strip_comment(std::string_view line)
{
  bool in_string = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '\\' && in_string) {
      ++k;
    } else if (line[k] == '"') {
      in_string = !in_string;
    } else if (line[k] == '#' && !in_string) {
      return line.substr(0, k);
    }
  }
  return line;
}

}  // namespace

TomlTable parse_toml(std::string_view text, const std::string & source)
{
  TomlTable table;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        parse_error(source, line_no, "malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parse_error(source, line_no, "expected `key = value`");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      parse_error(source, line_no, "expected `key = value`");
    }
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    TomlValue v;
    v.line = line_no;
    if (value == "true" || value == "false") {
      v.value = value == "true";
    } else if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        parse_error(source, line_no, "unterminated string for '" + full + "'");
      }
      std::string s;
      for (std::size_t k = 1; k + 1 < value.size(); ++k) {
        if (value[k] == '\\' && k + 2 < value.size()) {
          ++k;
        }
        s.push_back(value[k]);
      }
      v.value = s;
    } else if (value.front() == '[') {
      if (value.back() != ']') {
        parse_error(source, line_no, "unterminated array for '" + full + "'");
      }
      std::vector<double> items;
      auto body = trim(value.substr(1, value.size() - 2));
      while (!body.empty()) {
        const auto comma = body.find(',');
        const auto item = trim(body.substr(0, comma));
        double d = 0.0;
        if (!parse_number(item, d)) {
          parse_error(source, line_no, "array '" + full + "' holds a non-numeric item '" + std::string(item) + "'");
        }
        items.push_back(d);
        if (comma == std::string_view::npos) {
          break;
        }
        body = trim(body.substr(comma + 1));
      }
      v.value = items;
    } else {
      double d = 0.0;
      if (!parse_number(value, d)) {
        parse_error(source, line_no, "cannot parse value of '" + full + "': " + std::string(value));
      }
      v.value = d;
    }
    if (!table.emplace(full, v).second) {
      parse_error(source, line_no, "duplicate key '" + full + "'");
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

namespace
{

using Getter = std::function<std::string(const PipelineConfig &)>;
using Setter = std::function<void(PipelineConfig &, const TomlValue &, const std::string & where)>;

struct Binding
{
  std::string key;
  Getter get;
  Setter set;
};

std::string format_array(const std::vector<double> & v)
{
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) {
    s += (k > 0 ? ", " : "") + format_double(v[k]);
  }
  return s + "]";
}

double as_double(const TomlValue & v, const std::string & where)
{
  if (const auto * d = std::get_if<double>(&v.value)) {
    return *d;
  }
  fail(ErrorCode::Parse, where + " must be a number");
}

long long as_integer(const TomlValue & v, const std::string & where)
{
  const double d = as_double(v, where);
  if (std::floor(d) != d || std::abs(d) > 9.0e15) {
    fail(ErrorCode::Parse, where + " must be an integer");
  }
  return static_cast<long long>(d);
}

template <class Ref>
Binding real(std::string key, Ref ref)
{
  return {key, [ref](const PipelineConfig & c) { return format_double(ref(const_cast<PipelineConfig &>(c))); },
    [ref](PipelineConfig & c, const TomlValue & v, const std::string & w) { ref(c) = as_double(v, w); }};
}

template <class Ref>
Binding integer(std::string key, Ref ref)
{
  return {key, [ref](const PipelineConfig & c) { return std::to_string(ref(const_cast<PipelineConfig &>(c))); },
    [ref](PipelineConfig & c, const TomlValue & v, const std::string & w) {
      using T = std::remove_reference_t<decltype(ref(c))>;
      ref(c) = static_cast<T>(as_integer(v, w));
    }};
}

template <class Ref>
Binding boolean(std::string key, Ref ref)
{
  return {key,
    [ref](const PipelineConfig & c) { return std::string(ref(const_cast<PipelineConfig &>(c)) ? "true" : "false"); },
    [ref](PipelineConfig & c, const TomlValue & v, const std::string & w) {
      const auto * b = std::get_if<bool>(&v.value);
      if (b == nullptr) {
        fail(ErrorCode::Parse, w + " must be true or false");
      }
      ref(c) = *b;
    }};
}

std::vector<Binding> bindings()
{
  using C = PipelineConfig;
  std::vector<Binding> b;
  b.push_back({"seed", [](const C & c) { return std::to_string(c.seed); },
    [](C & c, const TomlValue & v, const std::string & w) {
      const double d = as_double(v, w);
      if (d < 0.0 || std::floor(d) != d || d > 9.0e15) {
        fail(ErrorCode::Parse, w + " must be a non-negative integer");
      }
      c.seed = static_cast<std::uint64_t>(d);
    }});
  b.push_back({"out", [](const C & c) { return "\"" + c.out + "\""; },
    [](C & c, const TomlValue & v, const std::string & w) {
      const auto * s = std::get_if<std::string>(&v.value);
      if (s == nullptr) {
        fail(ErrorCode::Parse, w + " must be a string");
      }
      c.out = *s;
    }});

  b.push_back(integer("scene.n_frames", [](C & c) -> int & { return c.scene.n_frames; }));
  b.push_back(real("scene.frame_period", [](C & c) -> double & { return c.scene.frame_period; }));
  b.push_back(real("scene.ego_speed_max", [](C & c) -> double & { return c.scene.ego_speed_max; }));
  b.push_back(integer("scene.cars_min", [](C & c) -> int & { return c.scene.cars_min; }));
  b.push_back(integer("scene.cars_max", [](C & c) -> int & { return c.scene.cars_max; }));
  b.push_back(integer("scene.pedestrians_min", [](C & c) -> int & { return c.scene.pedestrians_min; }));
  b.push_back(integer("scene.pedestrians_max", [](C & c) -> int & { return c.scene.pedestrians_max; }));
  b.push_back(integer("scene.cyclists_min", [](C & c) -> int & { return c.scene.cyclists_min; }));
  b.push_back(integer("scene.cyclists_max", [](C & c) -> int & { return c.scene.cyclists_max; }));
  b.push_back(real("scene.moving_probability", [](C & c) -> double & { return c.scene.moving_probability; }));
  b.push_back(integer("scene.clutter_rate", [](C & c) -> int & { return c.scene.clutter_rate; }));
  b.push_back(integer("scene.multipath_rate", [](C & c) -> int & { return c.scene.multipath_rate; }));
  b.push_back(
    real("scene.clutter_outlier_fraction", [](C & c) -> double & { return c.scene.clutter_outlier_fraction; }));
  b.push_back(real("scene.noise_sigma_pos", [](C & c) -> double & { return c.scene.noise_sigma_pos; }));
  b.push_back(real("scene.noise_sigma_vel", [](C & c) -> double & { return c.scene.noise_sigma_vel; }));
  b.push_back(real("scene.lidar_reference_range", [](C & c) -> double & { return c.scene.lidar_reference_range; }));
  b.push_back(real("scene.lidar_occlusion_probability",
    [](C & c) -> double & { return c.scene.lidar_occlusion_probability; }));
  b.push_back(integer("scene.lidar_ground_points", [](C & c) -> int & { return c.scene.lidar_ground_points; }));
  b.push_back(integer("scene.lidar_clutter_points", [](C & c) -> int & { return c.scene.lidar_clutter_points; }));
  b.push_back(real("scene.object_x_min", [](C & c) -> double & { return c.scene.object_x_min; }));
  b.push_back(real("scene.object_x_max", [](C & c) -> double & { return c.scene.object_x_max; }));
  b.push_back(real("scene.object_y_abs_max", [](C & c) -> double & { return c.scene.object_y_abs_max; }));

  b.push_back(integer("data.train_sequences", [](C & c) -> int & { return c.data.train_sequences; }));
  b.push_back(integer("data.test_sequences", [](C & c) -> int & { return c.data.test_sequences; }));

  b.push_back(real("ground.coarse_tolerance", [](C & c) -> double & { return c.model.ground.coarse_tolerance; }));
  b.push_back(real("ground.fine_tolerance", [](C & c) -> double & { return c.model.ground.fine_tolerance; }));
  b.push_back(integer("ground.iterations", [](C & c) -> int & { return c.model.ground.iterations; }));
  b.push_back(real("ground.height_margin", [](C & c) -> double & { return c.model.ground.height_margin; }));
  b.push_back(
    real("ground.max_removal_height", [](C & c) -> double & { return c.model.ground.max_removal_height; }));
  b.push_back(
    real("ground.min_inlier_fraction", [](C & c) -> double & { return c.model.ground.min_inlier_fraction; }));
  b.push_back(integer("ground.min_inliers", [](C & c) -> int & { return c.model.ground.min_inliers; }));
  b.push_back(real("ground.max_tilt_deg", [](C & c) -> double & { return c.model.ground.max_tilt_deg; }));
  b.push_back(real("ground.max_ground_offset", [](C & c) -> double & { return c.model.ground.max_ground_offset; }));

  b.push_back(integer("mre.frames", [](C & c) -> int & { return c.model.frames; }));
  b.push_back(real("mre.alpha", [](C & c) -> double & { return c.model.alpha; }));
  b.push_back(real("mre.tau", [](C & c) -> double & { return c.model.tau; }));
  b.push_back(boolean("mre.strict", [](C & c) -> bool & { return c.model.strict; }));
  b.push_back({"mre.sa_samples",
    [](const C & c) {
      std::vector<double> v;
      for (const auto & s : c.model.mos.sa) {
        v.push_back(s.samples);
      }
      return format_array(v);
    },
    [](C & c, const TomlValue & v, const std::string & w) {
      const auto * a = std::get_if<std::vector<double>>(&v.value);
      if (a == nullptr || a->size() != 3) {
        fail(ErrorCode::Parse, w + " must be an array of 3 integers");
      }
      for (std::size_t l = 0; l < 3; ++l) {
        c.model.mos.sa[l].samples = static_cast<int>((*a)[l]);
      }
    }});
  b.push_back({"mre.sa_radii",
    [](const C & c) {
      std::vector<double> v;
      for (const auto & s : c.model.mos.sa) {
        v.push_back(s.radius);
      }
      return format_array(v);
    },
    [](C & c, const TomlValue & v, const std::string & w) {
      const auto * a = std::get_if<std::vector<double>>(&v.value);
      if (a == nullptr || a->size() != 3) {
        fail(ErrorCode::Parse, w + " must be an array of 3 numbers");
      }
      for (std::size_t l = 0; l < 3; ++l) {
        c.model.mos.sa[l].radius = (*a)[l];
      }
    }});
  b.push_back({"mre.max_neighbors", [](const C & c) { return std::to_string(c.model.mos.sa[0].max_neighbors); },
    [](C & c, const TomlValue & v, const std::string & w) {
      const auto n = static_cast<int>(as_integer(v, w));
      for (auto & s : c.model.mos.sa) {
        s.max_neighbors = n;
      }
    }});

  auto grid = [](const std::string & key, double GridSpec::*field) {
    return Binding{key, [field](const C & c) { return format_double(c.model.lidar_grid.*field); },
      [field](C & c, const TomlValue & v, const std::string & w) {
        const double d = as_double(v, w);
        c.model.lidar_grid.*field = d;
        c.model.radar_grid.*field = d;
      }};
  };
  b.push_back(grid("encoder.x_min", &GridSpec::x_min));
  b.push_back(grid("encoder.x_max", &GridSpec::x_max));
  b.push_back(grid("encoder.y_min", &GridSpec::y_min));
  b.push_back(grid("encoder.y_max", &GridSpec::y_max));
  b.push_back(grid("encoder.cell_size", &GridSpec::cell_size));
  b.push_back({"encoder.max_points_per_pillar",
    [](const C & c) { return std::to_string(c.model.lidar_grid.max_points_per_pillar); },
    [](C & c, const TomlValue & v, const std::string & w) {
      const auto n = static_cast<int>(as_integer(v, w));
      c.model.lidar_grid.max_points_per_pillar = n;
      c.model.radar_grid.max_points_per_pillar = n;
    }});
  b.push_back(integer("encoder.radar_channels", [](C & c) -> int & { return c.model.radar_grid.feature_width; }));
  b.push_back(integer("encoder.lidar_channels", [](C & c) -> int & { return c.model.lidar_grid.feature_width; }));

  b.push_back(boolean("fusion.use_mre", [](C & c) -> bool & { return c.model.use_mre; }));
  b.push_back(boolean("fusion.use_magf", [](C & c) -> bool & { return c.model.use_magf; }));
  b.push_back(integer("fusion.attention_reduction", [](C & c) -> int & { return c.model.attention_reduction; }));
  b.push_back(integer("fusion.gate_kernel", [](C & c) -> int & { return c.model.gate_kernel; }));

  b.push_back(integer("detector.head_hidden", [](C & c) -> int & { return c.model.head.hidden; }));
  b.push_back(integer("detector.head_kernel", [](C & c) -> int & { return c.model.head.kernel; }));
  b.push_back(integer("detector.head_layers", [](C & c) -> int & { return c.model.head.layers; }));
  b.push_back(real("detector.score_threshold", [](C & c) -> double & { return c.model.detect.score_threshold; }));
  b.push_back(real("detector.nms_iou", [](C & c) -> double & { return c.model.detect.nms_iou; }));
  b.push_back(integer("detector.max_detections", [](C & c) -> int & { return c.model.detect.max_detections; }));
  b.push_back(real("detector.regression_weight", [](C & c) -> double & { return c.model.regression_weight; }));

  b.push_back(integer("train.mos_epochs", [](C & c) -> int & { return c.train.mos_epochs; }));
  b.push_back(integer("train.detector_epochs", [](C & c) -> int & { return c.train.detector_epochs; }));
  b.push_back(integer("train.batch_size", [](C & c) -> int & { return c.train.batch_size; }));
  b.push_back(real("train.learning_rate", [](C & c) -> double & { return c.train.learning_rate; }));
  b.push_back(real("train.weight_decay", [](C & c) -> double & { return c.train.weight_decay; }));
  b.push_back(real("train.final_lr_fraction", [](C & c) -> double & { return c.train.final_lr_fraction; }));
  b.push_back(boolean("train.augment", [](C & c) -> bool & { return c.train.augment; }));

  b.push_back(real("eval.iou_car", [](C & c) -> double & { return c.eval.iou_thresholds[0]; }));
  b.push_back(real("eval.iou_pedestrian", [](C & c) -> double & { return c.eval.iou_thresholds[1]; }));
  b.push_back(real("eval.iou_cyclist", [](C & c) -> double & { return c.eval.iou_thresholds[2]; }));
  auto corridor = [](C & c) -> RegionSpec & {
    for (auto & r : c.eval.regions) {
      if (r.kind == RegionKind::DrivingCorridor) {
        return r;
      }
    }
    c.eval.regions.push_back(RegionSpec::driving_corridor());
    return c.eval.regions.back();
  };
  b.push_back(real("eval.corridor_x_min", [corridor](C & c) -> double & { return corridor(c).x_min; }));
  b.push_back(real("eval.corridor_x_max", [corridor](C & c) -> double & { return corridor(c).x_max; }));
  b.push_back(real("eval.corridor_y_min", [corridor](C & c) -> double & { return corridor(c).y_min; }));
  b.push_back(real("eval.corridor_y_max", [corridor](C & c) -> double & { return corridor(c).y_max; }));
  b.push_back(integer("eval.recall_points", [](C & c) -> int & { return c.eval.recall_points; }));
  return b;
}

void require(bool ok, const std::string & field, const std::string & rule)
{
  if (!ok) {
    fail(ErrorCode::InvalidConfig, field + " " + rule);
  }
}

}  // namespace

void PipelineConfig::validate() const
{
  require(scene.n_frames >= 1, "scene.n_frames", "must be >= 1");
  require(scene.frame_period > 0.0, "scene.frame_period", "must be positive");
  require(scene.cars_min >= 0 && scene.cars_max >= scene.cars_min, "scene.cars_max", "must be >= scene.cars_min >= 0");
  require(scene.pedestrians_min >= 0 && scene.pedestrians_max >= scene.pedestrians_min, "scene.pedestrians_max",
    "must be >= scene.pedestrians_min >= 0");
  require(scene.cyclists_min >= 0 && scene.cyclists_max >= scene.cyclists_min, "scene.cyclists_max",
    "must be >= scene.cyclists_min >= 0");
  require(scene.moving_probability >= 0.0 && scene.moving_probability <= 1.0, "scene.moving_probability",
    "must lie in [0, 1]");
  require(scene.clutter_rate >= 0, "scene.clutter_rate", "must be >= 0");
  require(scene.multipath_rate >= 0, "scene.multipath_rate", "must be >= 0");
  require(scene.noise_sigma_pos >= 0.0, "scene.noise_sigma_pos", "must be >= 0");
  require(scene.noise_sigma_vel >= 0.0, "scene.noise_sigma_vel", "must be >= 0");
  require(scene.object_x_max > scene.object_x_min, "scene.object_x_max", "must exceed scene.object_x_min");
  require(data.train_sequences >= 0, "data.train_sequences", "must be >= 0");
  require(data.test_sequences >= 0, "data.test_sequences", "must be >= 0");
  require(model.tau > 0.0, "mre.tau", "must be positive");
  require(model.alpha > 0.0 && model.alpha < 1.0, "mre.alpha", "must lie in (0, 1)");
  require(model.frames >= 1 && model.frames <= scene.n_frames, "mre.frames", "must lie in [1, scene.n_frames]");
  require(model.ground.iterations >= 1, "ground.iterations", "must be >= 1");
  require(model.ground.min_inliers >= 0, "ground.min_inliers", "must be >= 0");
  require(model.ground.coarse_tolerance > 0.0, "ground.coarse_tolerance", "must be positive");
  require(model.ground.fine_tolerance > 0.0, "ground.fine_tolerance", "must be positive");
  require(model.lidar_grid.cell_size > 0.0, "encoder.cell_size", "must be positive");
  require(train.mos_epochs >= 0, "train.mos_epochs", "must be >= 0");
  require(train.detector_epochs >= 0, "train.detector_epochs", "must be >= 0");
  require(train.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(train.learning_rate > 0.0, "train.learning_rate", "must be positive");
  require(train.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  require(train.final_lr_fraction > 0.0 && train.final_lr_fraction <= 1.0, "train.final_lr_fraction",
    "must lie in (0, 1]");
  model.validate();
  MosNetwork check(model.mos);
  (void)check;
  eval.validate();
}

PipelineConfig parse_config(std::string_view text, const std::string & source)
{
  const auto table = parse_toml(text, source);
  const auto binds = bindings();
  PipelineConfig config;
  for (const auto & [key, value] : table) {
    const auto it = std::find_if(binds.begin(), binds.end(), [&](const Binding & b) { return b.key == key; });
    if (it == binds.end()) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(value.line) + ": unknown field '" + key + "'");
    }
    try {
      it->set(config, value, key);
    } catch (const Error & e) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(value.line) + ": " + e.message());
    }
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path & path)
{
  return parse_config(read_text_file(path), path.string());
}

std::string to_toml(const PipelineConfig & config)
{
  std::ostringstream os;
  std::string section;
  for (const auto & b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : b.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? b.key : b.key.substr(dot + 1);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << name << " = " << b.get(config) << "\n";
  }
  return os.str();
}

std::string config_hash(const PipelineConfig & config)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_name(to_toml(config))));
  return buf;
}

}  // namespace moralkit
