// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/model_spec.hpp"

#include <cmath>
#include <random>

#include "colln/errors.hpp"

namespace colln {

void ModelSpec::validate() const {
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) +
                      " must be a positive multiple of patch_size " + std::to_string(patch_size));
  }
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw ConfigError("dim " + std::to_string(dim) + " must be divisible by heads " +
                      std::to_string(heads));
  }
  if (depth == 0 || mlp_ratio == 0 || num_classes == 0) {
    throw ConfigError("depth, mlp_ratio and num_classes must be positive");
  }
  for (float s : std) {
    if (!(s > 0.0f)) throw ConfigError("normalization std must be positive");
  }
  if (!(ln_eps > 0.0f)) throw ConfigError("ln_eps must be positive");
}

ModelSpec preset_spec(std::string_view name) {
  ModelSpec s;
  if (name == "vit-s16") {
    s.dim = 384, s.depth = 12, s.heads = 6;
  } else if (name == "vit-b16") {
    s.dim = 768, s.depth = 12, s.heads = 12;
  } else if (name == "vit-l16") {
    s.dim = 1024, s.depth = 24, s.heads = 16;
  } else if (name == "tiny") {
    s.image_size = 12, s.patch_size = 4, s.dim = 16, s.depth = 2, s.heads = 2, s.num_classes = 10;
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) +
                      "' (expected vit-s16, vit-b16, vit-l16 or tiny)");
  }
  return s;
}

std::vector<std::string> preset_names() { return {"vit-s16", "vit-b16", "vit-l16", "tiny"}; }

std::vector<TensorShape> canonical_tensors(const ModelSpec& spec) {
  const std::size_t d = spec.dim;
  std::vector<TensorShape> t = {
      {"patch_embed.w", {d, spec.patch_values()}},
      {"patch_embed.b", {d}},
      {"pos_embed", {spec.patch_count() + 1, d}},
      {"cls_token", {d}},
  };
  for (std::size_t i = 0; i < spec.depth; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    t.push_back({p + "ln1.g", {d}});
    t.push_back({p + "ln1.b", {d}});
    t.push_back({p + "attn.qkv.w", {3 * d, d}});
    t.push_back({p + "attn.qkv.b", {3 * d}});
    t.push_back({p + "attn.proj.w", {d, d}});
    t.push_back({p + "attn.proj.b", {d}});
    t.push_back({p + "ln2.g", {d}});
    t.push_back({p + "ln2.b", {d}});
    t.push_back({p + "mlp.fc1.w", {spec.hidden(), d}});
    t.push_back({p + "mlp.fc1.b", {spec.hidden()}});
    t.push_back({p + "mlp.fc2.w", {d, spec.hidden()}});
    t.push_back({p + "mlp.fc2.b", {d}});
  }
  t.push_back({"ln_final.g", {d}});
  t.push_back({"ln_final.b", {d}});
  t.push_back({"head.w", {spec.num_classes, d}});
  t.push_back({"head.b", {spec.num_classes}});
  return t;
}

const Matrix& ModelBundle::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw WeightFormatError(WeightErrorKind::MissingTensor, "tensor '" + name + "' not in bundle");
  }
  return it->second;
}

namespace {

std::pair<std::size_t, std::size_t> matrix_dims(const std::vector<std::size_t>& shape) {
  return shape.size() == 1 ? std::pair{std::size_t{1}, shape[0]} : std::pair{shape[0], shape[1]};
}

}  // namespace

void validate_bundle(const ModelBundle& bundle) {
  bundle.spec.validate();
  const auto expected = canonical_tensors(bundle.spec);
  for (const auto& t : expected) {
    const Matrix& m = bundle.tensor(t.name);
    auto [r, c] = matrix_dims(t.shape);
    if (m.rows != r || m.cols != c || m.data.size() != r * c) {
      throw WeightFormatError(WeightErrorKind::ShapeMismatch,
                              "tensor '" + t.name + "' is " + std::to_string(m.rows) + "x" +
                                  std::to_string(m.cols) + ", expected " + std::to_string(r) +
                                  "x" + std::to_string(c));
    }
  }
  if (bundle.tensors.size() != expected.size()) {
    for (const auto& [name, m] : bundle.tensors) {
      bool known = false;
      for (const auto& t : expected) known = known || t.name == name;
      if (!known) {
        throw WeightFormatError(WeightErrorKind::UnknownTensor,
                                "tensor '" + name + "' is not part of the schema");
      }
    }
  }
}

ModelBundle make_random_bundle(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](float scale) {
    return static_cast<float>((static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * scale);
  };

  ModelBundle b;
  b.spec = spec;
  for (const auto& t : canonical_tensors(spec)) {
    auto [r, c] = matrix_dims(t.shape);
    Matrix m(r, c);
    const bool is_gain = t.name.ends_with(".g");
    const bool is_bias = t.name.ends_with(".b");
    float scale = 0.5f;
    if (t.shape.size() == 2 && t.name.ends_with(".w")) scale = 1.5f / std::sqrt(static_cast<float>(c));
    if (is_bias) scale = 0.05f;
    for (float& v : m.data) v = (is_gain ? 1.0f : 0.0f) + uniform(is_gain ? 0.1f : scale);
    b.tensors.emplace(t.name, std::move(m));
  }
  return b;
}

}  // namespace colln
