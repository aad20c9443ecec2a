/* Copyright 2026 The Styledverse Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <cstring>

#include "styledverse/checkpoint.hpp"
#include "styledverse/container.hpp"
#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"
#include "support.hpp"

using namespace styledverse;
using namespace styledverse::testing;

namespace {

/// Container bytes assembled by hand, independent of serialize_container.
std::string raw(const nlohmann::json& header, const std::string& payload, const std::string& magic = "SVC1",
                std::uint32_t version = 1) {
  const std::string text = header.dump();
  std::string out = magic;
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((version >> (8 * i)) & 0xFF));
  const std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  return out + text + payload;
}

std::string f32_bytes(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  return out;
}

ContainerError::Kind kind_of(const std::string& bytes) {
  try {
    parse_container(bytes);
  } catch (const ContainerError& e) {
    return e.kind();
  }
  FAIL("parse_container accepted invalid bytes");
  return ContainerError::Kind::Io;
}

}  // namespace

TEST_CASE("hand-built container parses") {
  const nlohmann::json header{
      {"metadata", {{"kind", "test"}}},
      {"tensors",
       {{{"name", "a"}, {"dtype", "f32"}, {"shape", {2}}, {"byte_offset", 0}},
        {{"name", "b"}, {"dtype", "f32"}, {"shape", {1, 1}}, {"byte_offset", 8}}}}};
  const auto c = parse_container(raw(header, f32_bytes({1.5f, -2.0f, 0.25f})));
  CHECK(c.metadata["kind"] == "test");
  CHECK(c.get("a") == Tensor({2}, {1.5, -2.0}));
  CHECK(c.get("b") == Tensor({1, 1}, {0.25}));
  CHECK_THROWS_AS(c.get("missing"), ContainerError);
}

TEST_CASE("container round trip is byte-identical") {
  Rng rng(4);
  TensorContainer c;
  c.metadata["note"] = "红豆";
  Tensor a({3, 2}), b({5});
  for (auto& x : a.data()) x = static_cast<double>(static_cast<float>(rng.uniform(-1, 1)));
  for (auto& x : b.data()) x = rng.uniform(-1, 1);
  c.add("a", a, Precision::F32);
  c.add("b", b, Precision::F64);
  CHECK_THROWS_AS(c.add("a", a, Precision::F32), ContainerError);

  TempDir dir;
  save_container(dir / "x.svc", c);
  const auto bytes = read_file(dir / "x.svc");
  CHECK(bytes.substr(0, 4) == "SVC1");
  const auto loaded = load_container(dir / "x.svc");
  CHECK(loaded.get("a") == a);
  CHECK(loaded.get("b") == b);
  CHECK(loaded.metadata == c.metadata);
  save_container(dir / "y.svc", loaded);
  CHECK(read_file(dir / "y.svc") == bytes);
}

TEST_CASE("container error kinds") {
  const nlohmann::json one{{"tensors", {{{"name", "a"}, {"dtype", "f32"}, {"shape", {2}}, {"byte_offset", 0}}}}};
  const auto payload = f32_bytes({1.0f, 2.0f});
  CHECK(kind_of(raw(one, payload, "XXXX")) == ContainerError::Kind::BadMagic);
  CHECK(kind_of(raw(one, payload, "SVC1", 2)) == ContainerError::Kind::UnsupportedVersion);
  CHECK(kind_of(raw(one, payload.substr(0, 5))) == ContainerError::Kind::TruncatedPayload);
  CHECK(kind_of(raw(one, payload).substr(0, 10)) == ContainerError::Kind::TruncatedPayload);

  auto beyond = one;
  beyond["tensors"][0]["byte_offset"] = 64;
  CHECK(kind_of(raw(beyond, payload)) == ContainerError::Kind::TruncatedPayload);

  nlohmann::json dup = one;
  dup["tensors"].push_back({{"name", "a"}, {"dtype", "f32"}, {"shape", {1}}, {"byte_offset", 8}});
  CHECK(kind_of(raw(dup, payload + f32_bytes({3.0f}))) == ContainerError::Kind::DuplicateTensorName);

  nlohmann::json overlap = one;
  overlap["tensors"].push_back({{"name", "b"}, {"dtype", "f32"}, {"shape", {1}}, {"byte_offset", 4}});
  CHECK(kind_of(raw(overlap, payload)) == ContainerError::Kind::Malformed);

  auto bad_dtype = one;
  bad_dtype["tensors"][0]["dtype"] = "i8";
  CHECK(kind_of(raw(bad_dtype, payload)) == ContainerError::Kind::Malformed);

  std::string broken = raw(one, payload);
  broken[16] = '#';
  CHECK(kind_of(broken) == ContainerError::Kind::Malformed);

  TempDir dir;
  CHECK_THROWS_AS(load_container(dir / "absent.svc"), ContainerError);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  auto model = tiny_model(12, 3);
  save_checkpoint(dir / "m.svc", model, {{"epochs", 3}});
  const auto loaded = load_checkpoint(dir / "m.svc");
  CHECK(loaded.params() == model.params());
  CHECK(loaded.vocab() == model.vocab());
  CHECK(loaded.dims() == model.dims());
  CHECK(loaded.precision() == Precision::F64);
  CHECK(load_container(dir / "m.svc").metadata["config"]["epochs"] == 3);
  save_checkpoint(dir / "again.svc", loaded, {{"epochs", 3}});
  CHECK(read_file(dir / "again.svc") == read_file(dir / "m.svc"));

  const auto f32 = Seq2Seq::initialize(cjk_vocab(6), ModelDims{0, 4, 4, 6, 3}, 2, Precision::F32);
  save_checkpoint(dir / "f.svc", f32);
  CHECK(load_checkpoint(dir / "f.svc").params() == f32.params());
}

TEST_CASE("checkpoint with a wrong tensor shape names the tensor") {
  auto model = tiny_model(6, 3);
  auto c = checkpoint_container(model);
  TensorContainer broken;
  broken.metadata = c.metadata;
  for (const auto& e : c.entries()) {
    broken.add(e.name, e.name == "decoder.U_h" ? Tensor({3, 3}) : e.value, e.dtype);
  }
  CHECK_THROWS_WITH_AS(model_from_container(broken), doctest::Contains("decoder.U_h"), DimensionMismatch);
}

TEST_CASE("embedding containers and transfer") {
  TempDir dir;
  const auto source_vocab = Vocabulary::from_chars(U"甲乙丙");
  EmbeddingTable table{Tensor({8, 2}, {0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7})};
  save_embeddings(dir / "e.svc", source_vocab, table, Precision::F64);
  const auto stored = load_embeddings(dir / "e.svc");
  CHECK(stored.vocab == source_vocab);
  CHECK(stored.table.matrix == table.matrix);

  const auto target_vocab = Vocabulary::from_chars(U"丙丁甲");
  Tensor target({8, 2});
  target.fill(-1.0);
  transfer_embeddings(stored, target_vocab, target);
  CHECK(target.at(5, 0) == 7.0);   // 丙
  CHECK(target.at(6, 0) == -1.0);  // 丁 has no counterpart
  CHECK(target.at(7, 0) == 5.0);   // 甲
  Tensor narrow({8, 3});
  CHECK_THROWS_AS(transfer_embeddings(stored, target_vocab, narrow), DimensionMismatch);
}
