// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <ostream>

#include "colln/errors.hpp"
#include "colln/flops.hpp"
#include "colln/weights_io.hpp"
#include "commands.hpp"

namespace colln::cli {

int cmd_flops(const FlopsOptions& opts, std::ostream& out) {
  const ModelSpec spec = preset_spec(opts.model);
  PruneConfig cfg;
  cfg.keep_rule = opts.keep_rule;
  cfg.schedule = parse_schedule(opts.schedule, spec.depth);
  const FlopsReport report = schedule_macs(spec, cfg);
  out << "model " << opts.model << ", schedule [" << format_schedule(cfg.schedule) << "], "
      << describe(cfg.keep_rule) << "\n";
  out << format_report_text(report) << "\n" << format_report_kv(report);
  return kOk;
}

Image tiny_sample_image(std::uint64_t variant) {
  const ModelSpec spec = preset_spec("tiny");
  Image img{spec.image_size, spec.image_size, {}};
  img.rgb.resize(img.width * img.height * 3);
  const double cx = 5.5 + static_cast<double>(variant % 3) - 1.0;
  const double cy = 5.5 + static_cast<double>((variant / 3) % 3) - 1.0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
      const bool object = r < 3.5;
      const double bg = 0.15 + 0.05 * static_cast<double>((x + 2 * y + variant) % 5);
      float* px = &img.rgb[(y * img.width + x) * 3];
      px[0] = static_cast<float>(object ? 0.9 - 0.05 * r : bg);
      px[1] = static_cast<float>(object ? 0.4 + 0.1 * std::sin(r) : bg * 1.2);
      px[2] = static_cast<float>(object ? 0.2 : 0.5 - bg);
    }
  }
  // Round-trip through 8 bits so the in-memory image equals the PPM on disk.
  return parse_ppm(encode_ppm(img));
}

int cmd_tiny_fixture(const std::filesystem::path& dir, std::ostream& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_bundle(make_random_bundle(preset_spec("tiny"), kTinySeed), dir / "tiny.vitw");
  write_file_bytes(dir / "sample.ppm", encode_ppm(tiny_sample_image()));
  out << "wrote " << (dir / "tiny.vitw").string() << " and " << (dir / "sample.ppm").string()
      << "\n";
  return kOk;
}

}  // namespace colln::cli
