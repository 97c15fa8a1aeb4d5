// Copyright 2026 The EventGraph Authors.
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

#include "evgraph/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace evgraph {

using nlohmann::ordered_json;

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

void put_u32(std::string& out, std::uint32_t v) {
  v = to_le(v);
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return to_le(v);
}

}  // namespace

std::string config_hash(const ordered_json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_checkpoint(const std::filesystem::path& path, const ordered_json& config,
                     const ordered_json& meta, const ParamStore<float>& params) {
  ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = config;
  header["config_hash"] = config_hash(config);
  header["meta"] = meta;
  ordered_json tensors = ordered_json::array();
  for (const auto& p : params)
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape}, {"group", p.group}});
  header["params"] = std::move(tensors);

  const std::string text = header.dump();
  std::string blob(kCheckpointMagic, 4);
  put_u32(blob, static_cast<std::uint32_t>(text.size()));
  blob += text;
  for (const auto& p : params) {
    for (float f : p.value.data) put_u32(blob, std::bit_cast<std::uint32_t>(f));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint '" + path.string() + "': ";
  if (blob.size() < 8 || std::memcmp(blob.data(), kCheckpointMagic, 4) != 0)
    throw CheckpointError(where + "bad magic, not an EVG1 file");
  const std::uint32_t header_len = get_u32(blob.data() + 4);
  if (blob.size() < 8 + static_cast<std::size_t>(header_len))
    throw CheckpointError(where + "truncated header");
  ordered_json header;
  try {
    header = ordered_json::parse(blob.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(where + "corrupt header: " + e.what());
  }
  if (header.value("format_version", -1) != kCheckpointVersion)
    throw CheckpointError(where + "unsupported format version " +
                          header.value("format_version", ordered_json(-1)).dump());
  Checkpoint ck;
  ck.config = header.at("config");
  ck.meta = header.value("meta", ordered_json::object());
  if (header.at("config_hash").get<std::string>() != config_hash(ck.config))
    throw CheckpointError(where + "config hash mismatch");

  std::size_t expected = 8 + header_len;
  for (const auto& t : header.at("params"))
    expected += 4 * shape_size(t.at("shape").get<Shape>());
  if (blob.size() != expected)
    throw CheckpointError(where + "length " + std::to_string(blob.size()) +
                          " bytes, header describes " + std::to_string(expected));

  const char* cursor = blob.data() + 8 + header_len;
  for (const auto& t : header.at("params")) {
    Tensor<float> value(t.at("shape").get<Shape>());
    for (float& f : value.data) {
      f = std::bit_cast<float>(get_u32(cursor));
      cursor += 4;
    }
    ck.params.add(t.at("name").get<std::string>(), std::move(value), t.value("group", 0));
  }
  return ck;
}

}  // namespace evgraph
