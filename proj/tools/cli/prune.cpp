// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "colln/errors.hpp"
#include "colln/viz.hpp"
#include "colln/weights_io.hpp"
#include "commands.hpp"
#include "json.hpp"

namespace colln::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json keep_rule_json(const KeepRule& rule) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, KeepRate>) return {{"kind", "keep-rate"}, {"value", r.rate}};
        else if constexpr (std::is_same_v<T, KeepCount>) return {{"kind", "keep-count"}, {"value", r.count}};
        else return {{"kind", "prune-count"}, {"value", r.count}};
      },
      rule);
}

KeepRule keep_rule_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "keep-rate") return KeepRate{j.at("value").get<double>()};
  if (kind == "keep-count") return KeepCount{j.at("value").get<std::size_t>()};
  if (kind == "prune-count") return PruneCount{j.at("value").get<std::size_t>()};
  throw ConfigError("unknown keep rule kind '" + kind + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string file_crc32(const fs::path& path) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", crc32_of(read_file_bytes(path)));
  return buf;
}

int cmd_prune(const PruneOptions& opts, std::ostream& out) {
  ModelBundle bundle = load_bundle(opts.weights);
  Image image = read_ppm(opts.image);
  PruneConfig cfg = opts.config;
  cfg.schedule = parse_schedule(opts.schedule, bundle.spec.depth);
  cfg.validate(bundle.spec.depth);

  const TraceLevel level = opts.heatmaps && opts.trace == TraceLevel::None ? TraceLevel::Decisions
                                                                            : opts.trace;
  const ForwardTrace trace = forward(image, bundle, cfg, level);

  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + opts.out_dir.string() + "': " + ec.message());
  std::vector<std::string> outputs;
  auto emit_text = [&](const std::string& rel, const std::string& text) {
    write_text(opts.out_dir / rel, text);
    outputs.push_back(rel);
  };
  auto emit_bytes = [&](const std::string& rel, const std::vector<std::uint8_t>& bytes) {
    fs::create_directories((opts.out_dir / rel).parent_path());
    write_file_bytes(opts.out_dir / rel, bytes);
    outputs.push_back(rel);
  };

  std::vector<std::size_t> order(trace.logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trace.logits[a] > trace.logits[b]; });
  std::string top5 = "rank,class,logit\n";
  for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
    top5 += std::to_string(k + 1) + "," + std::to_string(order[k]) + "," +
            fmt(trace.logits[order[k]]) + "\n";
  }
  emit_text("logits.csv", top5);
  std::string all;
  for (float v : trace.logits) all += fmt(v) + "\n";
  emit_text("logits_full.txt", all);

  std::string tokens = "layer,tokens_before,tokens_after,pruned\n";
  for (const auto& l : trace.layers) {
    tokens += std::to_string(l.layer) + "," + std::to_string(l.tokens_before) + "," +
              std::to_string(l.tokens_after) + "," + (l.decision ? "1" : "0") + "\n";
  }
  emit_text("tokens.csv", tokens);
  emit_text("layers.csv", scores_csv(trace));

  char name[64];
  std::vector<PruneDecision> decisions;
  for (const auto& l : trace.layers) {
    if (l.decision) decisions.push_back(*l.decision);
  }
  const std::size_t grid = bundle.spec.grid();
  const auto masks = render_kept_mask(decisions, grid, opts.upscale);
  for (std::size_t d = 0; d < masks.size(); ++d) {
    std::snprintf(name, sizeof name, "masks/mask_layer_%02zu.pgm", decisions[d].layer);
    emit_bytes(name, masks[d]);
  }
  if (opts.heatmaps) {
    for (const auto& l : trace.layers) {
      if (!l.scores) continue;
      std::snprintf(name, sizeof name, "heatmaps/heatmap_layer_%02zu.pgm", l.layer);
      emit_bytes(name, render_heatmap(*l.scores, l.scored_patch_ids, {grid, opts.upscale}));
    }
  }

  json manifest = {
      {"engine_version", kEngineVersion},
      {"subcommand", "prune"},
      {"config",
       {{"metric", std::string(to_string(cfg.selector))},
        {"norm_order", cfg.norm_order},
        {"keep_rule", keep_rule_json(cfg.keep_rule)},
        {"rescue_ratio", cfg.rescue_ratio},
        {"schedule", format_schedule(cfg.schedule)},
        {"seed", cfg.seed},
        {"aggregation", cfg.aggregation == HeadAggregation::Mean ? "mean" : "max"},
        {"trace", std::string(to_string(opts.trace))},
        {"heatmaps", opts.heatmaps},
        {"upscale", opts.upscale}}},
      {"inputs",
       {{"weights", {{"path", opts.weights.string()}, {"crc32", file_crc32(opts.weights)}}},
        {"image", {{"path", opts.image.string()}, {"crc32", file_crc32(opts.image)}}}}},
      {"out_dir", opts.out_dir.string()},
      {"outputs", outputs},
  };
  write_text(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");

  out << "top-1 class " << order.front() << " (logit " << fmt(trace.logits[order.front()])
      << ")\n";
  for (const auto& l : trace.layers) {
    if (l.decision) {
      out << "layer " << l.layer << ": " << l.tokens_before << " -> " << l.tokens_after
          << " tokens\n";
    }
  }
  out << "wrote " << outputs.size() + 1 << " files to " << opts.out_dir.string() << "\n";
  return kOk;
}

int cmd_replay(const fs::path& manifest_path, const std::optional<fs::path>& out_dir,
               std::ostream& out) {
  const auto bytes = read_file_bytes(manifest_path);
  json m;
  PruneOptions opts;
  try {
    m = json::parse(bytes.begin(), bytes.end());
    if (m.at("subcommand").get<std::string>() != "prune") {
      throw ConfigError("only prune manifests can be replayed");
    }
    const json& c = m.at("config");
    opts.weights = m.at("inputs").at("weights").at("path").get<std::string>();
    opts.image = m.at("inputs").at("image").at("path").get<std::string>();
    opts.out_dir = out_dir ? *out_dir : fs::path(m.at("out_dir").get<std::string>());
    opts.schedule = c.at("schedule").get<std::string>();
    opts.config.selector = parse_selector(c.at("metric").get<std::string>());
    opts.config.norm_order = c.at("norm_order").get<double>();
    opts.config.keep_rule = keep_rule_from_json(c.at("keep_rule"));
    opts.config.rescue_ratio = c.at("rescue_ratio").get<double>();
    opts.config.seed = c.at("seed").get<std::uint64_t>();
    opts.config.aggregation =
        c.at("aggregation").get<std::string>() == "max" ? HeadAggregation::Max : HeadAggregation::Mean;
    opts.trace = parse_trace_level(c.at("trace").get<std::string>());
    opts.heatmaps = c.at("heatmaps").get<bool>();
    opts.upscale = c.at("upscale").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  }
  for (const char* key : {"weights", "image"}) {
    const json& in = m.at("inputs").at(key);
    const fs::path p = in.at("path").get<std::string>();
    if (file_crc32(p) != in.at("crc32").get<std::string>()) {
      throw IoError(std::string(key) + " input '" + p.string() + "' changed since the manifest was written");
    }
  }
  return cmd_prune(opts, out);
}

}  // namespace colln::cli
