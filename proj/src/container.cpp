// Copyright 2026 The DeepBall Authors. All Rights Reserved.
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

#include "deepball/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "deepball/errors.hpp"

namespace deepball {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'P', 'B', 'L'};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
  throw FormatError(path.string() + ": " + what + " at byte offset " + std::to_string(offset));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw FormatError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_container(const std::filesystem::path& path, std::uint32_t version, const nlohmann::json& meta,
                     const std::vector<NamedArray>& arrays) {
  nlohmann::json header = meta;
  header["arrays"] = nlohmann::json::array();
  std::size_t payload = 0;
  for (const auto& a : arrays) {
    std::size_t count = 1;
    for (int d : a.shape) count *= static_cast<std::size_t>(d);
    if (count != a.values.size()) {
      throw FormatError("array " + a.name + " shape does not match its value count");
    }
    header["arrays"].push_back({{"name", a.name}, {"shape", a.shape}});
    payload += count * sizeof(float);
  }
  const std::string text = header.dump();
  std::string bytes;
  bytes.reserve(12 + text.size() + payload);
  bytes.append(kMagic, 4);
  put_u32(bytes, version);
  put_u32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes += text;
  for (const auto& a : arrays) {
    bytes.append(reinterpret_cast<const char*>(a.values.data()), a.values.size() * sizeof(float));
  }
  write_file_atomic(path, bytes);
}

ContainerContents read_container(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() < 4) fail(path, bytes.size(), "truncated magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(path, 0, "bad magic");
  if (bytes.size() < 12) fail(path, bytes.size(), "truncated header");
  ContainerContents out;
  std::memcpy(&out.version, bytes.data() + 4, 4);
  std::uint32_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 8, 4);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) fail(path, bytes.size(), "truncated header text");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    fail(path, 12, std::string("malformed header (") + e.what() + ")");
  }
  if (!header.is_object() || !header.contains("arrays") || !header["arrays"].is_array()) {
    fail(path, 12, "header lacks an array table");
  }
  std::size_t offset = 12 + header_len;
  try {
    for (const auto& entry : header["arrays"]) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      a.shape = entry.at("shape").get<std::vector<int>>();
      std::size_t count = 1;
      for (int d : a.shape) {
        if (d < 0) fail(path, 12, "negative dimension in array " + a.name);
        count *= static_cast<std::size_t>(d);
      }
      const std::size_t len = count * sizeof(float);
      if (bytes.size() < offset + len) fail(path, bytes.size(), "truncated payload for array " + a.name);
      a.values.resize(count);
      std::memcpy(a.values.data(), bytes.data() + offset, len);
      offset += len;
      out.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(path, 12, std::string("malformed array table (") + e.what() + ")");
  }
  if (offset != bytes.size()) fail(path, offset, "trailing bytes after payload");
  header.erase("arrays");
  out.meta = std::move(header);
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace deepball
