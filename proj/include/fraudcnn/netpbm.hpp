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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "fraudcnn/error.hpp"

namespace fraudcnn {

// Row-major grayscale image with values in [0, 1].
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
};

struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;  // height x width x 3
};

inline std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

// Binary PGM (P5, maxval 255), top-left origin.
inline void write_pgm(const GrayImage& img, const std::string& path) {
  require(img.values.size() == img.height * img.width, "pgm: size mismatch");
  for (double v : img.values)
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "pgm: grayscale values must lie in [0, 1]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.values) out.put(static_cast<char>(quantize_unit(v)));
  if (!out) throw Error("write failed: '" + path + "'");
}

// Binary PPM (P6, maxval 255).
inline void write_ppm(const RgbImage& img, const std::string& path) {
  require(img.rgb.size() == img.height * img.width * 3, "ppm: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw Error("write failed: '" + path + "'");
}

struct NetpbmData {
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  std::vector<std::uint8_t> bytes;
};

inline NetpbmData read_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  NetpbmData d;
  in >> d.magic >> d.width >> d.height >> d.maxval;
  require(in && (d.magic == "P5" || d.magic == "P6") && d.maxval == 255, "netpbm: unsupported header in '" + path + "'");
  in.get();  // single whitespace before the raster
  d.bytes.resize(d.width * d.height * (d.magic == "P6" ? 3 : 1));
  in.read(reinterpret_cast<char*>(d.bytes.data()), static_cast<std::streamsize>(d.bytes.size()));
  require(static_cast<std::size_t>(in.gcount()) == d.bytes.size(), "netpbm: truncated raster");
  return d;
}

}  // namespace fraudcnn
