/*
 * Copyright (c) 2026, The SwinRMT Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "swinrmt/model.hpp"

namespace swinrmt {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"variant", to_string(c.variant)},
                        {"img_size", c.img_size},
                        {"in_channels", c.in_channels},
                        {"embed_dims", c.embed_dims},
                        {"depths", c.depths},
                        {"num_heads", c.num_heads},
                        {"window_sizes", c.window_sizes},
                        {"layerscale_init", c.layerscale_init},
                        {"droppath_max", c.droppath_max},
                        {"num_classes", c.num_classes},
                        {"mlp_ratio", c.mlp_ratio},
                        {"baseline_lce", c.baseline_lce}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model config must be a JSON object");
  static const std::set<std::string> known{"variant",      "img_size",     "in_channels",     "embed_dims",
                                           "depths",       "num_heads",    "window_sizes",    "layerscale_init",
                                           "droppath_max", "num_classes",  "mlp_ratio",       "baseline_lce"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw FormatError("unknown model config key '" + key + "'");
  }
  ModelConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("img_size")) c.img_size = j.at("img_size").get<std::size_t>();
    if (j.contains("in_channels")) c.in_channels = j.at("in_channels").get<std::size_t>();
    if (j.contains("embed_dims")) c.embed_dims = j.at("embed_dims").get<std::vector<std::size_t>>();
    if (j.contains("depths")) c.depths = j.at("depths").get<std::vector<std::size_t>>();
    if (j.contains("num_heads")) c.num_heads = j.at("num_heads").get<std::vector<std::size_t>>();
    if (j.contains("window_sizes")) c.window_sizes = j.at("window_sizes").get<std::vector<std::size_t>>();
    if (j.contains("layerscale_init")) c.layerscale_init = j.at("layerscale_init").get<double>();
    if (j.contains("droppath_max")) c.droppath_max = j.at("droppath_max").get<double>();
    if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<std::size_t>();
    if (j.contains("mlp_ratio")) c.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
    if (j.contains("baseline_lce")) c.baseline_lce = j.at("baseline_lce").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model config value: ") + e.what());
  }
  c.validate();
  return c;
}

inline std::string serialize_config(const ModelConfig& c) { return config_to_json(c).dump(2) + "\n"; }

inline ModelConfig parse_config(const std::string& text) {
  try {
    return config_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("model config is not valid JSON: ") + e.what());
  }
}

inline ModelConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// FNV-1a over the compact JSON form, as 16 hex digits.
inline std::string config_hash(const ModelConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : config_to_json(c).dump()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace swinrmt
