// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/pruning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "colln/errors.hpp"

namespace colln {

namespace {

// Products like 100 * (1 - 0.8) land one ulp off the integer they denote.
constexpr double kRoundingSlack = 1e-9;

}  // namespace

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::ColLn: return "colln";
    case Selector::Cls: return "cls";
    case Selector::Random: return "random";
    case Selector::Correcting: return "correcting";
  }
  return "unknown";
}

Selector parse_selector(std::string_view name) {
  for (Selector s : {Selector::ColLn, Selector::Cls, Selector::Random, Selector::Correcting}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown metric '" + std::string(name) +
                    "' (expected colln, cls, random or correcting)");
}

void PruneConfig::validate(std::size_t depth) const {
  if (const auto* kr = std::get_if<KeepRate>(&keep_rule)) {
    if (!(kr->rate > 0.0 && kr->rate <= 1.0)) {
      throw ConfigError("keep rate must be in (0, 1], got " + std::to_string(kr->rate));
    }
  }
  if (!(rescue_ratio >= 0.0 && rescue_ratio <= 1.0)) {
    throw ConfigError("rescue ratio must be in [0, 1], got " + std::to_string(rescue_ratio));
  }
  if ((selector == Selector::ColLn || selector == Selector::Correcting) && !(norm_order >= 1.0)) {
    throw ConfigError("norm order must be >= 1, got " + std::to_string(norm_order));
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] >= depth) {
      throw ConfigError("schedule layer " + std::to_string(schedule[i]) + " outside depth " +
                        std::to_string(depth));
    }
    if (i > 0 && schedule[i] <= schedule[i - 1]) {
      throw ConfigError("schedule must be strictly increasing");
    }
  }
}

std::string describe(const KeepRule& rule) {
  std::ostringstream os;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, KeepRate>) os << "keep-rate=" << r.rate;
        else if constexpr (std::is_same_v<T, KeepCount>) os << "keep-count=" << r.count;
        else os << "prune-count=" << r.count;
      },
      rule);
  return os.str();
}

std::vector<std::size_t> parse_schedule(std::string_view text, std::size_t depth) {
  std::vector<std::size_t> out;
  if (text.empty() || text == "none") return out;
  if (text == "early") {
    for (std::size_t l = 0; l < std::min<std::size_t>(6, depth); ++l) out.push_back(l);
    return out;
  }
  if (text == "all") {
    for (std::size_t l = 0; l < depth; ++l) out.push_back(l);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(start, end - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    std::size_t layer = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), layer);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ConfigError("bad schedule entry '" + std::string(tok) + "' in '" + std::string(text) +
                        "'");
    }
    out.push_back(layer);
    start = end + 1;
  }
  return out;
}

std::string format_schedule(std::span<const std::size_t> schedule) {
  std::string s;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(schedule[i]);
  }
  return s;
}

std::size_t keep_count(const KeepRule& rule, std::size_t patches) {
  if (patches == 0) throw ConfigError("keep_count needs at least one patch");
  std::size_t r = std::visit(
      [&](const auto& k) -> std::size_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, KeepRate>) {
          const double want = std::ceil(k.rate * static_cast<double>(patches) - kRoundingSlack);
          return want <= 1.0 ? 1 : static_cast<std::size_t>(want);
        } else if constexpr (std::is_same_v<T, KeepCount>) {
          return k.count;
        } else {
          return k.count >= patches ? 1 : patches - k.count;
        }
      },
      rule);
  return std::clamp<std::size_t>(r, 1, patches);
}

std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k) {
  if (k > values.size()) {
    throw ConfigError("topk: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(values.size()) + " values");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

TokenSequence gather(const TokenSequence& x, std::span<const std::size_t> positions) {
  TokenSequence out;
  out.embeddings = Matrix(positions.size() + 1, x.dim());
  auto cls = x.embeddings.row(0);
  std::copy(cls.begin(), cls.end(), out.embeddings.row(0).begin());
  out.patch_ids.reserve(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const std::size_t pos = positions[k];
    if (pos < 1 || pos >= x.count()) {
      throw ConfigError("gather position " + std::to_string(pos) + " out of range");
    }
    auto src = x.embeddings.row(pos);
    std::copy(src.begin(), src.end(), out.embeddings.row(k + 1).begin());
    out.patch_ids.push_back(x.patch_ids[pos - 1]);
  }
  return out;
}

namespace {

void check_keep(const TokenSequence& x, std::size_t keep) {
  if (keep < 1 || keep > x.patch_count()) {
    throw ConfigError("keep count " + std::to_string(keep) + " outside [1, " +
                      std::to_string(x.patch_count()) + "]");
  }
}

PruneResult finish(const TokenSequence& x, std::vector<std::size_t> positions,
                   ImportanceScores scores) {
  PruneResult res;
  res.tokens = gather(x, positions);
  res.decision.kept_patch_ids = res.tokens.patch_ids;
  res.decision.kept_positions = std::move(positions);
  res.decision.scores = std::move(scores);
  return res;
}

std::vector<std::size_t> to_positions(std::vector<std::size_t> indices) {
  for (auto& i : indices) ++i;
  return indices;
}

}  // namespace

PruneResult prune_by_scores(const TokenSequence& x, ImportanceScores scores, std::size_t keep) {
  check_keep(x, keep);
  if (scores.size() != x.patch_count()) {
    throw ConfigError("score count " + std::to_string(scores.size()) + " != patch count " +
                      std::to_string(x.patch_count()));
  }
  auto positions = to_positions(topk_indices(scores.values, keep));
  return finish(x, std::move(positions), std::move(scores));
}

PruneResult prune_colln(const TokenSequence& x, const AttentionMatrix& a, std::size_t keep,
                        double norm_order) {
  if (a.size() != x.count()) throw ConfigError("attention size does not match token count");
  return prune_by_scores(x, colln_scores(a, norm_order), keep);
}

CorrectingSplit correcting_split(std::size_t keep, double rescue_ratio) {
  if (!(rescue_ratio >= 0.0 && rescue_ratio <= 1.0)) {
    throw ConfigError("rescue ratio must be in [0, 1]");
  }
  const double raw = std::floor(static_cast<double>(keep) * (1.0 - rescue_ratio) + kRoundingSlack);
  const auto from_cls = std::min(keep, static_cast<std::size_t>(std::max(0.0, raw)));
  return {from_cls, keep - from_cls};
}

std::vector<std::size_t> correcting_positions(const ImportanceScores& cls,
                                              const ImportanceScores& colln, std::size_t keep,
                                              double rescue_ratio) {
  if (cls.size() != colln.size()) throw ConfigError("score vectors differ in length");
  if (keep > cls.size()) throw ConfigError("keep count exceeds patch count");
  const CorrectingSplit split = correcting_split(keep, rescue_ratio);

  std::vector<std::size_t> kept = topk_indices(cls.values, split.from_cls);

  std::vector<std::size_t> remaining;
  std::vector<double> remaining_scores;
  remaining.reserve(cls.size() - kept.size());
  for (std::size_t k = 0, c = 0; k < colln.size(); ++k) {
    if (c < kept.size() && kept[c] == k) {
      ++c;
      continue;
    }
    remaining.push_back(k);
    remaining_scores.push_back(colln.values[k]);
  }
  for (std::size_t r : topk_indices(remaining_scores, split.from_colln)) {
    kept.push_back(remaining[r]);
  }
  std::sort(kept.begin(), kept.end());
  return to_positions(std::move(kept));
}

PruneResult prune_correcting(const TokenSequence& x, const AttentionMatrix& a, std::size_t keep,
                             double norm_order, double rescue_ratio) {
  check_keep(x, keep);
  if (a.size() != x.count()) throw ConfigError("attention size does not match token count");
  ImportanceScores col = colln_scores(a, norm_order);
  auto positions = correcting_positions(cls_scores(a), col, keep, rescue_ratio);
  return finish(x, std::move(positions), std::move(col));
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
  // splitmix64 finalizer over (seed, layer)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(layer) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

ImportanceScores layer_scores(const AttentionMatrix& a, const PruneConfig& cfg,
                              std::size_t layer) {
  switch (cfg.selector) {
    case Selector::ColLn:
    case Selector::Correcting: return colln_scores(a, cfg.norm_order);
    case Selector::Cls: return cls_scores(a);
    case Selector::Random: return random_scores(a.patch_count(), layer_seed(cfg.seed, layer));
  }
  throw InternalError("unhandled selector");
}

PruneResult prune_layer(const TokenSequence& x, const AttentionMatrix& a, const PruneConfig& cfg,
                        std::size_t layer) {
  const std::size_t keep = keep_count(cfg.keep_rule, x.patch_count());
  PruneResult res;
  switch (cfg.selector) {
    case Selector::ColLn: res = prune_colln(x, a, keep, cfg.norm_order); break;
    case Selector::Correcting:
      res = prune_correcting(x, a, keep, cfg.norm_order, cfg.rescue_ratio);
      break;
    case Selector::Cls:
    case Selector::Random: res = prune_by_scores(x, layer_scores(a, cfg, layer), keep); break;
  }
  res.decision.layer = layer;
  return res;
}

}  // namespace colln
