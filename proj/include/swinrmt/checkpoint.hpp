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

// Checkpoint = <prefix>.manifest.json + <prefix>.bin
//
// The manifest lists every stored tensor (name, shape, kind, offset) in blob
// order together with the model config and its hash. The blob is the
// concatenation of all values as little-endian IEEE-754 binary64.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swinrmt/config_io.hpp"
#include "swinrmt/model.hpp"

namespace swinrmt {

inline constexpr const char* kCheckpointFormat = "swinrmt-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointPaths {
  std::filesystem::path manifest;
  std::filesystem::path blob;

  static CheckpointPaths from_prefix(const std::filesystem::path& prefix) {
    return {std::filesystem::path(prefix.string() + ".manifest.json"), std::filesystem::path(prefix.string() + ".bin")};
  }
};

namespace detail {

inline void put_f64_le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& prefix, Model& model) {
  const CheckpointPaths paths = CheckpointPaths::from_prefix(prefix);
  if (paths.manifest.has_parent_path()) std::filesystem::create_directories(paths.manifest.parent_path());
  nlohmann::json tensors = nlohmann::json::array();
  std::string blob;
  std::size_t offset = 0;
  model.visit([&](const std::string& name, Tensor& t, bool buffer) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"kind", buffer ? "buffer" : "param"}, {"offset", offset}});
    for (double v : t.data()) detail::put_f64_le(blob, v);
    offset += t.numel();
  });
  const nlohmann::json manifest{{"format", kCheckpointFormat},
                                {"version", kCheckpointVersion},
                                {"config", config_to_json(model.config())},
                                {"config_hash", config_hash(model.config())},
                                {"blob", paths.blob.filename().string()},
                                {"total_values", offset},
                                {"tensors", tensors}};
  std::ofstream m(paths.manifest);
  if (!m) throw FormatError("cannot write " + paths.manifest.string());
  m << manifest.dump(2) << '\n';
  std::ofstream b(paths.blob, std::ios::binary);
  if (!b) throw FormatError("cannot write " + paths.blob.string());
  b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!b) throw FormatError("short write to " + paths.blob.string());
}

inline Model load_checkpoint(const std::filesystem::path& prefix) {
  const CheckpointPaths paths = CheckpointPaths::from_prefix(prefix);
  std::ifstream m(paths.manifest);
  if (!m) throw FormatError("cannot open " + paths.manifest.string());
  nlohmann::json manifest;
  try {
    m >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kCheckpointFormat || manifest.value("version", 0) != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint format in " + paths.manifest.string());
  }
  const ModelConfig config = config_from_json(manifest.at("config"));
  if (manifest.value("config_hash", "") != config_hash(config)) throw FormatError("checkpoint config hash mismatch");

  std::ifstream b(paths.blob, std::ios::binary);
  if (!b) throw FormatError("cannot open " + paths.blob.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  const std::size_t total = manifest.at("total_values").get<std::size_t>();
  if (bytes.size() != total * 8) throw FormatError("checkpoint blob size does not match manifest");

  Model model = Model::init(config, 0);
  const auto& entries = manifest.at("tensors");
  std::size_t index = 0;
  model.visit([&](const std::string& name, Tensor& t, bool) {
    if (index >= entries.size()) throw FormatError("checkpoint is missing tensor " + name);
    const auto& e = entries[index++];
    if (e.at("name").get<std::string>() != name) {
      throw FormatError("checkpoint tensor order mismatch: expected " + name + ", found " + e.at("name").get<std::string>());
    }
    if (e.at("shape").get<Shape>() != t.shape()) throw FormatError("checkpoint shape mismatch for " + name);
    const std::size_t off = e.at("offset").get<std::size_t>();
    if (off + t.numel() > total) throw FormatError("checkpoint tensor " + name + " runs past the blob");
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = detail::get_f64_le(bytes.data() + 8 * (off + i));
  });
  if (index != entries.size()) throw FormatError("checkpoint has tensors the model does not define");
  return model;
}

}  // namespace swinrmt
