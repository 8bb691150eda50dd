// Copyright 2026 The fraudcnn Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Checkpoint layout (all integers little-endian):
//
//   magic      8 bytes  "FRDCNNCK"
//   version    u32      1
//   json_len   u32      length of the JSON header that follows
//   json       bytes    {"model": ModelConfig, "adam_step": n, "extra": {...}}
//   count      u32      number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8)
//     rank     u32, dims u32 x rank
//     data     float32 x product(dims), row-major
//
// Tensors are the 12 parameters (conv1.weight ... dense2.bias) followed by
// the Adam moments "adam.m.<name>" and "adam.v.<name>".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fraudcnn/bytes.hpp"
#include "fraudcnn/error.hpp"
#include "fraudcnn/model.hpp"

namespace fraudcnn {

inline constexpr char kCheckpointMagic[9] = "FRDCNNCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_tensor(std::ostream& out, const std::string& name, const Tensor<T>& t) {
  bytes::put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  bytes::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) bytes::put_u32(out, static_cast<std::uint32_t>(d));
  for (auto v : t.data()) bytes::put_f32(out, static_cast<float>(v));
}

}  // namespace detail

template <typename T>
void save_checkpoint(const Model<T>& model, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::ordered_json header;
  header["model"] = model.config.to_json();
  header["adam_step"] = model.adam.step;
  header["extra"] = extra;
  const std::string json = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out.write(kCheckpointMagic, 8);
  bytes::put_u32(out, kCheckpointVersion);
  bytes::put_u32(out, static_cast<std::uint32_t>(json.size()));
  out.write(json.data(), static_cast<std::streamsize>(json.size()));
  bytes::put_u32(out, static_cast<std::uint32_t>(3 * kParamCount));
  for (std::size_t p = 0; p < kParamCount; ++p) detail::put_tensor(out, kParamNames[p], model.params[p]);
  for (std::size_t p = 0; p < kParamCount; ++p)
    detail::put_tensor(out, std::string("adam.m.") + kParamNames[p], model.adam.m[p]);
  for (std::size_t p = 0; p < kParamCount; ++p)
    detail::put_tensor(out, std::string("adam.v.") + kParamNames[p], model.adam.v[p]);
  if (!out) throw Error("write failed: '" + path.string() + "'");
}

struct LoadedCheckpoint {
  Model<float> model;
  nlohmann::json extra;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw Error("'" + path.string() + "' is not a fraudcnn checkpoint");
  const auto version = bytes::get_u32(in);
  require(version == kCheckpointVersion, "checkpoint: unsupported version " + std::to_string(version));
  const auto json_len = bytes::get_u32(in);
  std::string json(json_len, '\0');
  in.read(json.data(), json_len);
  if (!in) throw Error("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: bad header: ") + e.what());
  }
  LoadedCheckpoint ck;
  ck.model = Model<float>(ModelConfig::from_json(header.at("model")));
  ck.model.adam.step = header.at("adam_step").get<std::uint64_t>();
  ck.extra = header.value("extra", nlohmann::json::object());

  const auto count = bytes::get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = bytes::get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = bytes::get_u32(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = bytes::get_u32(in);
    Tensor<float>* target = nullptr;
    for (std::size_t p = 0; p < kParamCount; ++p) {
      if (name == kParamNames[p]) target = &ck.model.params[p];
      if (name == std::string("adam.m.") + kParamNames[p]) target = &ck.model.adam.m[p];
      if (name == std::string("adam.v.") + kParamNames[p]) target = &ck.model.adam.v[p];
    }
    require(target != nullptr, "checkpoint: unknown tensor '" + name + "'");
    require(target->shape() == shape, "checkpoint: shape mismatch for '" + name + "'");
    for (auto& v : target->data()) v = bytes::get_f32(in);
  }
  return ck;
}

}  // namespace fraudcnn
