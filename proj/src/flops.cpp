// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/flops.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "colln/errors.hpp"

namespace colln {

BlockMacs block_macs(std::uint64_t tokens, std::uint64_t dim, std::uint64_t mlp_ratio) {
  if (tokens == 0) throw ConfigError("block_macs needs at least one token");
  return {4 * tokens * dim * dim + 2 * tokens * tokens * dim, 2 * mlp_ratio * tokens * dim * dim};
}

FlopsReport schedule_macs(const ModelSpec& spec, const PruneConfig& cfg) {
  spec.validate();
  cfg.validate(spec.depth);

  FlopsReport r;
  r.patch_embed = static_cast<std::uint64_t>(spec.patch_count()) * spec.dim * spec.patch_values();
  r.head = static_cast<std::uint64_t>(spec.dim) * spec.num_classes;
  r.total = r.patch_embed + r.head;

  std::size_t patches = spec.patch_count();
  for (std::size_t l = 0; l < spec.depth; ++l) {
    LayerMacs lm;
    lm.layer = l;
    lm.tokens_in = patches + 1;
    if (std::find(cfg.schedule.begin(), cfg.schedule.end(), l) != cfg.schedule.end()) {
      patches = keep_count(cfg.keep_rule, patches);
    }
    lm.tokens_out = patches + 1;
    lm.attn = block_macs(lm.tokens_in, spec.dim, spec.mlp_ratio).attn;
    lm.mlp = block_macs(lm.tokens_out, spec.dim, spec.mlp_ratio).mlp;
    r.total += lm.attn + lm.mlp;
    r.layers.push_back(lm);
  }
  return r;
}

std::string format_report_text(const FlopsReport& r) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-7s %9s %10s %16s %16s\n", "layer", "tokens_in", "tokens_out",
                "attn_macs", "mlp_macs");
  os << line;
  for (const auto& l : r.layers) {
    std::snprintf(line, sizeof line, "%-7zu %9zu %10zu %16llu %16llu\n", l.layer, l.tokens_in,
                  l.tokens_out, static_cast<unsigned long long>(l.attn),
                  static_cast<unsigned long long>(l.mlp));
    os << line;
  }
  std::snprintf(line, sizeof line, "%-28s %16llu\n", "patch_embed",
                static_cast<unsigned long long>(r.patch_embed));
  os << line;
  std::snprintf(line, sizeof line, "%-28s %16llu\n", "head", static_cast<unsigned long long>(r.head));
  os << line;
  std::snprintf(line, sizeof line, "%-28s %16llu  (%.2f GMACs)\n", "total",
                static_cast<unsigned long long>(r.total), r.gmacs());
  os << line;
  return os.str();
}

std::string format_report_kv(const FlopsReport& r) {
  std::ostringstream os;
  for (const auto& l : r.layers) {
    os << "layer." << l.layer << ".tokens_in=" << l.tokens_in << '\n';
    os << "layer." << l.layer << ".tokens_out=" << l.tokens_out << '\n';
    os << "layer." << l.layer << ".attn_macs=" << l.attn << '\n';
    os << "layer." << l.layer << ".mlp_macs=" << l.mlp << '\n';
  }
  os << "patch_embed_macs=" << r.patch_embed << '\n';
  os << "head_macs=" << r.head << '\n';
  os << "total_macs=" << r.total << '\n';
  char g[32];
  std::snprintf(g, sizeof g, "%.4f", r.gmacs());
  os << "gmacs=" << g << '\n';
  return os.str();
}

}  // namespace colln
