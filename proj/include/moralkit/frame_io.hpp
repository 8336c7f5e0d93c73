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

#ifndef MORALKIT__FRAME_IO_HPP_
#define MORALKIT__FRAME_IO_HPP_

#include "moralkit/scene.hpp"
#include "moralkit/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace moralkit
{

inline constexpr std::string_view kFramesFormat = "moralkit-frames/1";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Radar: one `x y z rcs v_rel v_abs t label` line per point.
std::string format_radar(const RadarCloud & cloud, const std::vector<std::uint8_t> & labels);
/// LiDAR: one `x y z intensity` line per point.
std::string format_lidar(const LidarCloud & cloud);

void parse_radar(std::string_view text, RadarCloud & cloud, std::vector<std::uint8_t> & labels,
  const std::string & source_name = "radar");
LidarCloud parse_lidar(std::string_view text, const std::string & source_name = "lidar");

nlohmann::json to_json(const Box3D & box);
Box3D box_from_json(const nlohmann::json & j);
nlohmann::json to_json(const SceneConfig & config);
SceneConfig scene_config_from_json(const nlohmann::json & j);

/// Writes radar_NNNN.txt, lidar_NNNN.txt and the sequence.json sidecar.
void write_sequence(const std::filesystem::path & dir, const FrameSequence & seq, const SceneConfig & config);
/// Loads a sequence; point source tags are not stored and come back empty.
FrameSequence read_sequence(const std::filesystem::path & dir, SceneConfig * config = nullptr);

std::string read_text_file(const std::filesystem::path & path);
void write_text_file(const std::filesystem::path & path, std::string_view text);

}  // namespace moralkit

#endif  // MORALKIT__FRAME_IO_HPP_
