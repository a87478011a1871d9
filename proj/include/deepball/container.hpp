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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace deepball {

/// A named float32 array stored in a "DPBL" file.
struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

struct ContainerContents {
  std::uint32_t version = 0;
  nlohmann::json meta;  // header minus the "arrays" table
  std::vector<NamedArray> arrays;
};

/// Layout: "DPBL" | u32 version | u32 header length | UTF-8 JSON header |
/// little-endian float32 payloads in header order. The file is written to a
/// sibling temporary and renamed into place.
void write_container(const std::filesystem::path& path, std::uint32_t version, const nlohmann::json& meta,
                     const std::vector<NamedArray>& arrays);
ContainerContents read_container(const std::filesystem::path& path);

/// FNV-1a 64 of a file's bytes, rendered as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace deepball
