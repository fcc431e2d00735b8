// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include "colln/weights_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_map>

#include "json.hpp"

#include "colln/errors.hpp"

namespace colln {

using nlohmann::json;

const char* to_string(WeightErrorKind kind) {
  switch (kind) {
    case WeightErrorKind::BadMagic: return "bad magic";
    case WeightErrorKind::UnsupportedVersion: return "unsupported version";
    case WeightErrorKind::MalformedHeader: return "malformed header";
    case WeightErrorKind::UnknownDtype: return "unknown dtype";
    case WeightErrorKind::Truncated: return "truncated";
    case WeightErrorKind::ChecksumMismatch: return "checksum mismatch";
    case WeightErrorKind::ShapeMismatch: return "shape mismatch";
    case WeightErrorKind::MissingTensor: return "missing tensor";
    case WeightErrorKind::DuplicateTensor: return "duplicate tensor";
    case WeightErrorKind::UnknownTensor: return "unknown tensor";
  }
  return "weight format error";
}

static_assert(std::endian::native == std::endian::little, "VITW I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'I', 'T', 'W'};
constexpr std::size_t kPreamble = 4 + 4 + 8;

std::size_t align_up(std::size_t n) { return (n + kVitwAlignment - 1) / kVitwAlignment * kVitwAlignment; }

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t at) {
  T v;
  std::memcpy(&v, bytes.data() + at, sizeof(T));
  return v;
}

json spec_to_json(const ModelSpec& s) {
  return json{{"image_size", s.image_size}, {"patch_size", s.patch_size},
              {"dim", s.dim},               {"depth", s.depth},
              {"heads", s.heads},           {"mlp_ratio", s.mlp_ratio},
              {"num_classes", s.num_classes}, {"mean", s.mean},
              {"std", s.std},               {"ln_eps", s.ln_eps}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.image_size = j.at("image_size").get<std::size_t>();
  s.patch_size = j.at("patch_size").get<std::size_t>();
  s.dim = j.at("dim").get<std::size_t>();
  s.depth = j.at("depth").get<std::size_t>();
  s.heads = j.at("heads").get<std::size_t>();
  s.mlp_ratio = j.at("mlp_ratio").get<std::size_t>();
  s.num_classes = j.at("num_classes").get<std::size_t>();
  s.mean = j.at("mean").get<std::array<float, 3>>();
  s.std = j.at("std").get<std::array<float, 3>>();
  s.ln_eps = j.at("ln_eps").get<float>();
  return s;
}

[[noreturn]] void fail(WeightErrorKind kind, const std::string& msg) {
  throw WeightFormatError(kind, msg);
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle) {
  validate_bundle(bundle);
  const auto schema = canonical_tensors(bundle.spec);

  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& t : schema) {
    const std::size_t length = bundle.tensor(t.name).data.size() * sizeof(float);
    tensors.push_back(json{{"name", t.name},
                           {"dtype", "f32"},
                           {"shape", t.shape},
                           {"offset", offset},
                           {"length", length}});
    offset += length;
  }
  const std::string header = json{{"spec", spec_to_json(bundle.spec)}, {"tensors", tensors}}.dump();

  std::vector<std::uint8_t> out;
  out.reserve(align_up(kPreamble + header.size()) + offset + 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(out, kVitwVersion);
  put<std::uint64_t>(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  out.resize(align_up(out.size()), 0);

  const std::size_t blob_start = out.size();
  for (const auto& t : schema) {
    const auto& data = bundle.tensor(t.name).data;
    const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
    out.insert(out.end(), p, p + data.size() * sizeof(float));
  }
  const std::uint32_t crc =
      crc32_of(std::span<const std::uint8_t>(out).subspan(blob_start, out.size() - blob_start));
  put<std::uint32_t>(out, crc);
  return out;
}

ModelBundle parse_bundle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(WeightErrorKind::BadMagic, "file does not start with 'VITW'");
  }
  if (bytes.size() < kPreamble) fail(WeightErrorKind::Truncated, "preamble shorter than 16 bytes");
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kVitwVersion) {
    fail(WeightErrorKind::UnsupportedVersion, "version " + std::to_string(version) +
                                                  " (this reader supports " +
                                                  std::to_string(kVitwVersion) + ")");
  }
  const auto header_len = get<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - kPreamble) {
    fail(WeightErrorKind::Truncated, "JSON header runs past end of file");
  }

  json header;
  ModelBundle bundle;
  try {
    header = json::parse(bytes.begin() + kPreamble,
                         bytes.begin() + static_cast<long>(kPreamble + header_len));
    bundle.spec = spec_from_json(header.at("spec"));
    bundle.spec.validate();
  } catch (const json::exception& e) {
    fail(WeightErrorKind::MalformedHeader, e.what());
  } catch (const ConfigError& e) {
    fail(WeightErrorKind::MalformedHeader, std::string("invalid spec: ") + e.what());
  }

  const std::size_t blob_start = align_up(kPreamble + header_len);
  if (bytes.size() < blob_start + 4) fail(WeightErrorKind::Truncated, "no blob region");
  const std::size_t available = bytes.size() - blob_start - 4;

  std::unordered_map<std::string, std::vector<std::size_t>> expected;
  for (auto& t : canonical_tensors(bundle.spec)) expected.emplace(t.name, t.shape);

  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset, length;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::size_t cursor = 0;
  try {
    for (const json& t : header.at("tensors")) {
      Entry e{t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>(),
              t.at("offset").get<std::size_t>(), t.at("length").get<std::size_t>()};
      const auto dtype = t.at("dtype").get<std::string>();
      if (dtype != "f32") fail(WeightErrorKind::UnknownDtype, "tensor '" + e.name + "' has dtype '" + dtype + "'");
      if (!seen.insert(e.name).second) fail(WeightErrorKind::DuplicateTensor, "tensor '" + e.name + "' listed twice");
      auto it = expected.find(e.name);
      if (it == expected.end()) fail(WeightErrorKind::UnknownTensor, "tensor '" + e.name + "' is not part of the schema");
      if (e.shape != it->second) fail(WeightErrorKind::ShapeMismatch, "tensor '" + e.name + "' has an unexpected shape");
      std::size_t elems = 1;
      for (std::size_t d : e.shape) elems *= d;
      if (e.length != elems * sizeof(float)) {
        fail(WeightErrorKind::ShapeMismatch, "tensor '" + e.name + "' byte length " +
                                                 std::to_string(e.length) + " does not match shape");
      }
      if (e.offset != cursor) {
        fail(WeightErrorKind::MalformedHeader, "tensor '" + e.name + "' offset " +
                                                   std::to_string(e.offset) + ", expected " +
                                                   std::to_string(cursor));
      }
      cursor += e.length;
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(WeightErrorKind::MalformedHeader, e.what());
  }
  for (const auto& [name, shape] : expected) {
    if (!seen.contains(name)) fail(WeightErrorKind::MissingTensor, "tensor '" + name + "' absent");
  }

  for (const auto& e : entries) {
    if (e.offset + e.length > available) {
      fail(WeightErrorKind::Truncated, "tensor '" + e.name + "' needs bytes [" +
                                           std::to_string(e.offset) + ", " +
                                           std::to_string(e.offset + e.length) + ") but blob region holds " +
                                           std::to_string(available));
    }
  }
  if (cursor != available) {
    fail(WeightErrorKind::MalformedHeader, std::to_string(available - cursor) +
                                               " unexpected bytes after the last tensor");
  }
  const auto blobs = bytes.subspan(blob_start, available);
  const auto stored = get<std::uint32_t>(bytes, blob_start + available);
  if (crc32_of(blobs) != stored) fail(WeightErrorKind::ChecksumMismatch, "blob region CRC32 differs from trailer");

  for (auto& e : entries) {
    const std::size_t rows = e.shape.size() == 1 ? 1 : e.shape[0];
    const std::size_t cols = e.shape.size() == 1 ? e.shape[0] : e.shape[1];
    std::vector<float> data(rows * cols);
    std::memcpy(data.data(), blobs.data() + e.offset, e.length);
    bundle.tensors.emplace(e.name, Matrix(rows, cols, std::move(data)));
  }
  for (const auto& [name, m] : bundle.tensors) {
    if (!m.all_finite()) fail(WeightErrorKind::MalformedHeader, "tensor '" + name + "' holds NaN or Inf");
  }
  return bundle;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_bundle(bundle));
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_bundle(bytes);
  } catch (const WeightFormatError& e) {
    throw WeightFormatError(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace colln
