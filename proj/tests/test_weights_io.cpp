// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <filesystem>
#include <functional>
#include <string>

#include "colln/errors.hpp"
#include "colln/weights_io.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace colln;
using nlohmann::json;

namespace {

using Bytes = std::vector<std::uint8_t>;

const ModelBundle& tiny() {
  static const ModelBundle b = make_random_bundle(preset_spec("tiny"), 20260416);
  return b;
}

// Bitwise reflected CRC-32 (poly 0xEDB88320), independent of zlib.
std::uint32_t slow_crc32(const std::uint8_t* p, std::size_t n) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= p[i];
    for (int b = 0; b < 8; ++b) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

std::uint64_t read_le(const Bytes& b, std::size_t at, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t(b[at + i]) << (8 * i);
  return v;
}

void write_le(Bytes& b, std::uint64_t v, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) b.push_back(std::uint8_t(v >> (8 * i)));
}

struct Decoded {
  json header;
  Bytes blobs;
};

// Splits a file following the documented layout, without the library reader.
Decoded decode(const Bytes& f) {
  REQUIRE(f.size() >= 20);
  REQUIRE(std::memcmp(f.data(), "VITW", 4) == 0);
  REQUIRE(read_le(f, 4, 4) == 1);
  const std::size_t hlen = read_le(f, 8, 8);
  const std::size_t blob_start = (16 + hlen + 63) / 64 * 64;
  for (std::size_t i = 16 + hlen; i < blob_start; ++i) REQUIRE(f[i] == 0);
  Decoded d;
  d.header = json::parse(f.begin() + 16, f.begin() + 16 + static_cast<long>(hlen));
  d.blobs.assign(f.begin() + static_cast<long>(blob_start), f.end() - 4);
  REQUIRE(read_le(f, f.size() - 4, 4) == slow_crc32(d.blobs.data(), d.blobs.size()));
  return d;
}

// Assembles a file from a header and blob region, with a correct checksum.
Bytes encode(const json& header, const Bytes& blobs) {
  const std::string h = header.dump();
  Bytes f{'V', 'I', 'T', 'W'};
  write_le(f, 1, 4);
  write_le(f, h.size(), 8);
  f.insert(f.end(), h.begin(), h.end());
  f.resize((f.size() + 63) / 64 * 64, 0);
  f.insert(f.end(), blobs.begin(), blobs.end());
  write_le(f, slow_crc32(blobs.data(), blobs.size()), 4);
  return f;
}

Bytes edited(const std::function<void(Decoded&)>& edit) {
  Decoded d = decode(serialize_bundle(tiny()));
  edit(d);
  return encode(d.header, d.blobs);
}

WeightErrorKind kind_of(const Bytes& f) {
  try {
    parse_bundle(f);
  } catch (const WeightFormatError& e) {
    return e.kind();
  }
  FAIL("parse_bundle accepted a malformed file");
  return WeightErrorKind::BadMagic;
}

}  // namespace

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  CHECK(crc32_of({p, s.size()}) == 0xCBF43926u);
  CHECK(slow_crc32(p, s.size()) == 0xCBF43926u);
}

TEST_CASE("layout follows the documented byte format") {
  const Bytes f = serialize_bundle(tiny());
  const Decoded d = decode(f);
  CHECK(d.header.at("spec").at("dim") == 16);
  CHECK(d.header.at("spec").at("image_size") == 12);
  const json& tensors = d.header.at("tensors");
  CHECK(tensors.size() == 32);
  std::size_t offset = 0;
  for (const json& t : tensors) {
    CHECK(t.at("dtype") == "f32");
    CHECK(t.at("offset") == offset);
    const Matrix& m = tiny().tensor(t.at("name").get<std::string>());
    CHECK(t.at("length") == m.data.size() * 4);
    CHECK(std::memcmp(d.blobs.data() + offset, m.data.data(), m.data.size() * 4) == 0);
    offset += t.at("length").get<std::size_t>();
  }
  CHECK(offset == d.blobs.size());
  CHECK(tensors[0].at("name") == "patch_embed.w");
  CHECK(tensors[0].at("shape") == json::array({16, 48}));
}

TEST_CASE("round trip is bitwise exact") {
  const ModelBundle back = parse_bundle(serialize_bundle(tiny()));
  CHECK(back.spec == tiny().spec);
  CHECK(back.tensors == tiny().tensors);
  CHECK(serialize_bundle(back) == serialize_bundle(tiny()));

  // A file assembled by the independent writer loads to the same bundle.
  const Decoded d = decode(serialize_bundle(tiny()));
  CHECK(parse_bundle(encode(d.header, d.blobs)).tensors == tiny().tensors);

  ModelSpec other = preset_spec("tiny");
  other.num_classes = 7;
  other.mean = {0.485f, 0.456f, 0.406f};
  const ModelBundle b = make_random_bundle(other, 99);
  const ModelBundle b2 = parse_bundle(serialize_bundle(b));
  CHECK(b2.spec == other);
  CHECK(b2.tensors == b.tensors);
}

TEST_CASE("file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "colln_test_tiny.vitw";
  write_bundle(tiny(), path);
  CHECK(load_bundle(path).tensors.size() == 32);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_bundle(path), IoError);
}

TEST_CASE("malformed files are rejected with distinct errors") {
  const Bytes good = serialize_bundle(tiny());

  SUBCASE("truncated by one byte names the last tensor") {
    Bytes f = good;
    f.pop_back();
    try {
      parse_bundle(f);
      FAIL("accepted");
    } catch (const WeightFormatError& e) {
      CHECK(e.kind() == WeightErrorKind::Truncated);
      CHECK(std::string(e.what()).find("head.b") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    Bytes f = good;
    f[0] = 'X';
    CHECK(kind_of(f) == WeightErrorKind::BadMagic);
    CHECK(kind_of(Bytes{}) == WeightErrorKind::BadMagic);
  }
  SUBCASE("version") {
    Bytes f = good;
    f[4] = 2;
    CHECK(kind_of(f) == WeightErrorKind::UnsupportedVersion);
  }
  SUBCASE("checksum") {
    Bytes f = good;
    f[f.size() - 10] ^= 0x01;
    CHECK(kind_of(f) == WeightErrorKind::ChecksumMismatch);
  }
  SUBCASE("header that is not JSON") {
    Bytes f = good;
    f[16] = '!';
    CHECK(kind_of(f) == WeightErrorKind::MalformedHeader);
  }
  SUBCASE("dtype") {
    CHECK(kind_of(edited([](Decoded& d) { d.header["tensors"][3]["dtype"] = "f16"; })) ==
          WeightErrorKind::UnknownDtype);
  }
  SUBCASE("shape") {
    CHECK(kind_of(edited([](Decoded& d) {
            d.header["tensors"][0]["shape"] = json::array({48, 16});
          })) == WeightErrorKind::ShapeMismatch);
  }
  SUBCASE("duplicate") {
    CHECK(kind_of(edited([](Decoded& d) {
            d.header["tensors"][1]["name"] = d.header["tensors"][0]["name"];
          })) == WeightErrorKind::DuplicateTensor);
  }
  SUBCASE("unknown") {
    CHECK(kind_of(edited([](Decoded& d) { d.header["tensors"][1]["name"] = "extra.w"; })) ==
          WeightErrorKind::UnknownTensor);
  }
  SUBCASE("missing") {
    CHECK(kind_of(edited([](Decoded& d) {
            const std::size_t len = d.header["tensors"].back()["length"];
            d.header["tensors"].erase(d.header["tensors"].size() - 1);
            d.blobs.resize(d.blobs.size() - len);
          })) == WeightErrorKind::MissingTensor);
  }
  SUBCASE("spec that fails validation") {
    CHECK(kind_of(edited([](Decoded& d) { d.header["spec"]["heads"] = 3; })) ==
          WeightErrorKind::MalformedHeader);
  }
  SUBCASE("non-finite weights") {
    CHECK(kind_of(edited([](Decoded& d) {
            const float nan = std::numeric_limits<float>::quiet_NaN();
            std::memcpy(d.blobs.data(), &nan, 4);
          })) == WeightErrorKind::MalformedHeader);
  }
}

TEST_CASE("errors from disk carry the path") {
  const auto path = std::filesystem::temp_directory_path() / "colln_test_bad.vitw";
  Bytes f = serialize_bundle(tiny());
  f[0] = 'Z';
  write_file_bytes(path, f);
  try {
    load_bundle(path);
    FAIL("accepted");
  } catch (const WeightFormatError& e) {
    CHECK(e.kind() == WeightErrorKind::BadMagic);
    CHECK(std::string(e.what()).find(path.string()) != std::string::npos);
    CHECK(std::string(e.what()).rfind("bad magic: ", 0) == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("bundles missing tensors cannot be serialized") {
  ModelBundle b = tiny();
  b.tensors.erase("cls_token");
  CHECK_THROWS_AS(serialize_bundle(b), WeightFormatError);
}
