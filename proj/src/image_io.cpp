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

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "deepball/container.hpp"
#include "deepball/dataio.hpp"

namespace deepball {

namespace {

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image decode_png(const std::string& bytes, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()) == 0) {
    throw FormatError(path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError(path.string() + ": " + msg);
  }
  return out;
}

// P6 with maxval 255; '#' comments are allowed in the header.
Image decode_ppm(const std::string& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  auto next_token = [&]() -> int {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw FormatError(path.string() + ": malformed PPM header at byte offset " + std::to_string(start));
    return std::stoi(bytes.substr(start, pos - start));
  };
  const int w = next_token();
  const int h = next_token();
  const int maxval = next_token();
  if (w < 1 || h < 1 || maxval != 255) throw FormatError(path.string() + ": unsupported PPM (need 8-bit P6)");
  ++pos;  // single whitespace before the raster
  Image out(w, h);
  if (bytes.size() < pos + out.rgb.size()) {
    throw FormatError(path.string() + ": truncated PPM raster at byte offset " + std::to_string(bytes.size()));
  }
  std::memcpy(out.rgb.data(), bytes.data() + pos, out.rgb.size());
  return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
  throw FormatError(path.string() + ": not a PNG or binary PPM image");
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (png_image_write_get_memory_size(img, size, 0, image.rgb.data(), 0, nullptr) == 0) {
    throw FormatError(path.string() + ": " + img.message);
  }
  std::string buffer(size, '\0');
  if (png_image_write_to_memory(&img, buffer.data(), &size, 0, image.rgb.data(), 0, nullptr) == 0) {
    throw FormatError(path.string() + ": " + img.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ostringstream os;
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes = os.str();
  bytes.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  write_file_atomic(path, bytes);
}

}  // namespace deepball
