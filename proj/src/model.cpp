// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/model.hpp"

#include <algorithm>
#include <string>

#include "colln/errors.hpp"

namespace colln {

TraceLevel parse_trace_level(std::string_view name) {
  if (name == "none") return TraceLevel::None;
  if (name == "decisions") return TraceLevel::Decisions;
  if (name == "full") return TraceLevel::Full;
  throw ConfigError("unknown trace level '" + std::string(name) +
                    "' (expected none, decisions or full)");
}

std::string_view to_string(TraceLevel level) {
  switch (level) {
    case TraceLevel::None: return "none";
    case TraceLevel::Decisions: return "decisions";
    case TraceLevel::Full: return "full";
  }
  return "unknown";
}

std::size_t ForwardTrace::argmax() const {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

TokenSequence embed(const Image& image, const ModelBundle& bundle) {
  const ModelSpec& spec = bundle.spec;
  PatchBatch batch = patchify(image, spec);
  Matrix patches = linear(batch.patches, bundle.tensor("patch_embed.w"),
                          bundle.tensor("patch_embed.b"));

  TokenSequence x;
  x.embeddings = Matrix(spec.patch_count() + 1, spec.dim);
  auto cls = bundle.tensor("cls_token").row(0);
  std::copy(cls.begin(), cls.end(), x.embeddings.row(0).begin());
  std::copy(patches.data.begin(), patches.data.end(),
            x.embeddings.data.begin() + static_cast<long>(spec.dim));
  add_inplace(x.embeddings, bundle.tensor("pos_embed"));
  x.patch_ids = std::move(batch.patch_ids);
  return x;
}

TokenSequence run_block(TokenSequence x, const ModelBundle& bundle, std::size_t layer,
                        const PruneConfig& cfg, bool prune, TraceLevel level, LayerTrace& trace) {
  const ModelSpec& spec = bundle.spec;
  const std::string p = "blocks." + std::to_string(layer) + ".";
  auto t = [&](const char* name) -> const Matrix& { return bundle.tensor(p + name); };

  trace.layer = layer;
  trace.tokens_before = x.count();

  const AttentionWeights aw{t("attn.qkv.w"), t("attn.qkv.b"), t("attn.proj.w"),
                            t("attn.proj.b")};
  Matrix h = layer_norm_rows(x.embeddings, t("ln1.g"), t("ln1.b"), spec.ln_eps);
  AttentionOutput attn = mhsa_forward(h, aw, spec.heads, cfg.aggregation);
  add_inplace(x.embeddings, attn.tokens);

  if (level == TraceLevel::Full) {
    trace.scores = layer_scores(attn.attention, cfg, layer);
    trace.scored_patch_ids = x.patch_ids;
    trace.attention = attn.attention;
  }
  if (prune) {
    PruneResult res = prune_layer(x, attn.attention, cfg, layer);
    if (level != TraceLevel::None) {
      if (!trace.scores) {
        trace.scores = res.decision.scores;
        trace.scored_patch_ids = x.patch_ids;
      }
      trace.decision = std::move(res.decision);
    }
    x = std::move(res.tokens);
  }

  Matrix h2 = layer_norm_rows(x.embeddings, t("ln2.g"), t("ln2.b"), spec.ln_eps);
  Matrix hidden = linear(h2, t("mlp.fc1.w"), t("mlp.fc1.b"));
  gelu_inplace(hidden);
  add_inplace(x.embeddings, linear(hidden, t("mlp.fc2.w"), t("mlp.fc2.b")));

  trace.tokens_after = x.count();
  return x;
}

std::vector<float> classify(const TokenSequence& x, const ModelBundle& bundle) {
  auto cls = layer_norm(x.embeddings.row(0), bundle.tensor("ln_final.g").row(0),
                        bundle.tensor("ln_final.b").row(0), bundle.spec.ln_eps);
  Matrix logits = linear(Matrix::row_vector(cls), bundle.tensor("head.w"), bundle.tensor("head.b"));
  return std::move(logits.data);
}

ForwardTrace forward(const Image& image, const ModelBundle& bundle, const PruneConfig& cfg,
                     TraceLevel level) {
  validate_bundle(bundle);
  cfg.validate(bundle.spec.depth);

  ForwardTrace trace;
  trace.layers.resize(bundle.spec.depth);
  TokenSequence x = embed(image, bundle);
  for (std::size_t l = 0; l < bundle.spec.depth; ++l) {
    const bool prune = std::find(cfg.schedule.begin(), cfg.schedule.end(), l) != cfg.schedule.end();
    x = run_block(std::move(x), bundle, l, cfg, prune, level, trace.layers[l]);
  }
  trace.logits = classify(x, bundle);
  return trace;
}

}  // namespace colln
