// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "colln/errors.hpp"

namespace colln {

namespace {

class PpmReader {
 public:
  explicit PpmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw IngestionError(std::string("PPM ") + what + " too large");
    }
    if (digits == 0) throw IngestionError(std::string("PPM header: missing ") + what);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image parse_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw IngestionError("not a binary PPM (expected P6 magic)");
  }
  PpmReader rd(bytes);
  rd.pos_ = 2;
  Image img;
  img.width = rd.number("width");
  img.height = rd.number("height");
  const std::size_t maxval = rd.number("maxval");
  if (maxval == 0 || maxval > 255) {
    throw IngestionError("unsupported PPM maxval " + std::to_string(maxval));
  }
  if (rd.pos_ >= bytes.size() || !std::isspace(bytes[rd.pos_])) {
    throw IngestionError("PPM header not terminated by whitespace");
  }
  ++rd.pos_;
  const std::size_t n = img.width * img.height * 3;
  if (bytes.size() - rd.pos_ < n) {
    throw IngestionError("PPM pixel data truncated: need " + std::to_string(n) + " bytes, have " +
                         std::to_string(bytes.size() - rd.pos_));
  }
  img.rgb.resize(n);
  const float inv = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < n; ++i) img.rgb[i] = static_cast<float>(bytes[rd.pos_ + i]) * inv;
  return img;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_ppm(bytes);
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.rgb.size());
  for (float v : image.rgb) {
    const float c = std::fmin(std::fmax(v, 0.0f), 1.0f);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0f)));
  }
  return out;
}

PatchBatch patchify(const Image& image, const ModelSpec& spec) {
  if (image.width != spec.image_size || image.height != spec.image_size) {
    throw IngestionError("image is " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + ", model expects " +
                         std::to_string(spec.image_size) + "x" + std::to_string(spec.image_size));
  }
  const std::size_t p = spec.patch_size;
  const std::size_t g = spec.grid();
  PatchBatch out{Matrix(g * g, spec.patch_values()), {}};
  out.patch_ids.reserve(g * g);
  for (std::size_t gy = 0; gy < g; ++gy) {
    for (std::size_t gx = 0; gx < g; ++gx) {
      const std::size_t id = gy * g + gx;
      auto dst = out.patches.row(id);
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x)
            dst[(c * p + y) * p + x] =
                (image.at(gy * p + y, gx * p + x, c) - spec.mean[c]) / spec.std[c];
      out.patch_ids.push_back(static_cast<std::uint32_t>(id));
    }
  }
  return out;
}

}  // namespace colln
