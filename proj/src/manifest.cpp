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

#include <fstream>
#include <sstream>

#include "deepball/dataio.hpp"

namespace deepball {

void AnnotatedFrame::validate() const {
  for (const BallPosition& b : balls) {
    if (b.x < 0 || b.y < 0 || b.x >= image.width || b.y >= image.height) {
      throw ParameterError(source_id + ": ball (" + std::to_string(b.x) + ", " + std::to_string(b.y) +
                           ") outside " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                           " image");
    }
  }
}

std::vector<FrameDescriptor> load_annotations(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open manifest " + manifest_path.string());
  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<FrameDescriptor> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto malformed = [&](const std::string& why) {
      return FormatError(manifest_path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    std::istringstream fields(line);
    FrameDescriptor d;
    long long count = -1;
    if (!(fields >> d.source_id)) throw malformed("missing image path");
    if (!(fields >> count) || count < 0) throw malformed("missing or negative ball count");
    for (long long i = 0; i < count; ++i) {
      BallPosition b;
      if (!(fields >> b.x >> b.y)) throw malformed("expected " + std::to_string(count) + " coordinate pairs");
      if (b.x < 0 || b.y < 0) throw malformed("negative ball coordinate");
      d.balls.push_back(b);
    }
    std::string extra;
    if (fields >> extra) throw malformed("unexpected trailing field '" + extra + "'");
    d.image_path = base / d.source_id;
    out.push_back(std::move(d));
  }
  for (const FrameDescriptor& d : out) {
    if (!std::filesystem::exists(d.image_path)) throw FormatError("missing image file " + d.image_path.string());
  }
  return out;
}

AnnotatedFrame load_frame(const FrameDescriptor& descriptor) {
  AnnotatedFrame f{read_image(descriptor.image_path), descriptor.balls, descriptor.source_id};
  f.validate();
  return f;
}

std::string format_manifest_line(const std::string& relative_path, const std::vector<BallPosition>& balls) {
  std::string s = relative_path + " " + std::to_string(balls.size());
  for (const BallPosition& b : balls) s += " " + std::to_string(b.x) + " " + std::to_string(b.y);
  return s;
}

Tensor4 normalize_batch(const std::vector<const Image*>& images, const InputNormalization& norm) {
  if (images.empty()) throw ShapeError("normalize_batch: no images");
  const int w = images.front()->width;
  const int h = images.front()->height;
  Tensor4 t(static_cast<int>(images.size()), 3, h, w);
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (img.width != w || img.height != h) {
      throw ShapeError("normalize_batch: image " + std::to_string(n) + " is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", expected " + std::to_string(w) + "x" + std::to_string(h));
    }
    for (int c = 0; c < 3; ++c) {
      float* dst = t.plane(static_cast<int>(n), c);
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = (static_cast<float>(img.rgb[i * 3 + c]) / 255.0f - norm.offset) / norm.scale;
      }
    }
  }
  return t;
}

Tensor4 normalize_image(const Image& image, const InputNormalization& norm) {
  return normalize_batch({&image}, norm);
}

}  // namespace deepball
