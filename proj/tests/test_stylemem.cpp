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

#include <algorithm>
#include <cmath>

#include "styledverse/container.hpp"
#include "styledverse/embeddings.hpp"
#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/stylemem.hpp"
#include "support.hpp"

using namespace styledverse;
using namespace styledverse::testing;

namespace {

/// One element per poem; poem k has the given average and a source/target
/// pair derived from it.
GlobalMemory memory_of(const std::vector<Vec>& averages, std::size_t source_dim = 3) {
  GlobalMemory m;
  m.source_dim = source_dim;
  m.target_dim = averages.front().size();
  m.precision = Precision::F64;
  for (std::size_t k = 0; k < averages.size(); ++k) {
    Vec source(source_dim, 0.0);
    source[k % source_dim] = 1.0 + static_cast<double>(k);
    m.elements.push_back(MemoryElement{source, averages[k], k, 1});
    m.poems.push_back(MemoryPoem{k, k, 1, averages[k], {}});
  }
  return m;
}

LocalMemory local_of(const std::vector<Vec>& sources, const std::vector<Vec>& targets) {
  GlobalMemory m;
  m.source_dim = sources.front().size();
  m.target_dim = targets.front().size();
  for (std::size_t i = 0; i < sources.size(); ++i) m.elements.push_back(MemoryElement{sources[i], targets[i], 0, i + 1});
  m.poems.push_back(MemoryPoem{0, 0, sources.size(), Vec(m.target_dim, 1.0), {}});
  Tensor e({1, m.target_dim});
  e.fill(1.0);
  return select_local_memory(m, {0}, e, 1);
}

Vec naive_read(const Vec& q, const std::vector<Vec>& sources, const std::vector<Vec>& targets) {
  Vec v(targets.front().size(), 0.0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    double dot = 0, nq = 0, ns = 0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      dot += q[k] * sources[i][k];
      nq += q[k] * q[k];
      ns += sources[i][k] * sources[i][k];
    }
    const double c = (nq == 0 || ns == 0) ? 0.0 : dot / std::sqrt(nq * ns);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += c * targets[i][k];
  }
  return v;
}

}  // namespace

TEST_CASE("global memory element count follows the token formula") {
  const auto model = tiny_model(12, 1);
  const auto poems = random_quatrains(model.vocab(), 2, 1);
  const auto memory = build_global_memory(model, poems);
  CHECK(memory.elements.size() == 46);
  CHECK(memory.poems.size() == 2);
  CHECK(memory.poems[1].start == 23);
  CHECK(memory_tokens(poems[0], model.vocab()).size() == 23);
  CHECK(build_global_memory(model, {}).empty());

  const Poem ragged = poem({U"一丁", U"七"});
  CHECK(memory_tokens(ragged, model.vocab()) ==
        IdSeq{model.vocab().id(U'一'), model.vocab().id(U'丁'), special::kSep, model.vocab().id(U'七')});
}

TEST_CASE("memory elements match a step-by-step decoder oracle") {
  const auto model = tiny_model(12, 2);
  const auto poems = random_quatrains(model.vocab(), 3, 2);
  const auto memory = build_global_memory(model, poems);
  CHECK(memory == build_global_memory(model, poems));

  std::size_t e = 0;
  for (std::size_t k = 0; k < poems.size(); ++k) {
    IdSeq tokens;
    for (std::size_t l = 0; l < 4; ++l) {
      if (l > 0) tokens.push_back(special::kSep);
      for (char32_t c : poems[k].lines[l]) tokens.push_back(model.vocab().id(c));
    }
    DecoderState s{Vec(16, 0.0), 0};
    Id prev = special::kBos;
    for (std::size_t j = 0; j < tokens.size(); ++j, ++e) {
      s = model.decoder_step(prev, s, Vec(16, 0.0));
      const auto& el = memory.elements[e];
      CHECK(el.poem_id == k);
      CHECK(el.position == j + 1);
      CHECK(el.source == s.s);
      const auto row = model.embedding().row(static_cast<std::size_t>(tokens[j]));
      CHECK(el.target == Vec(row.begin(), row.end()));
      prev = tokens[j];
    }
  }
  CHECK(e == memory.elements.size());
}

TEST_CASE("poems with no known characters are skipped") {
  const auto model = tiny_model(12, 3);
  auto poems = random_quatrains(model.vocab(), 2, 3);
  poems.insert(poems.begin() + 1, poem({U"ABCDE", U"ABCDE", U"ABCDE", U"ABCDE"}));
  const auto memory = build_global_memory(model, poems);
  REQUIRE(memory.poems.size() == 2);
  CHECK(memory.poems[0].poem_id == 0);
  CHECK(memory.poems[1].poem_id == 2);
  CHECK(memory.elements.size() == 46);
}

TEST_CASE("local memory selection") {
  const auto memory = memory_of({{1, 0}, {0, 1}, {1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}});
  Tensor e({3, 2}, {1, 0, 0, 1, 1, 1});
  const auto local = select_local_memory(memory, {0}, e, 2);
  CHECK(local.poem_ids == std::vector<std::size_t>{0, 2});
  CHECK(local.size() == 2);
  CHECK(select_local_memory(memory, {0}, e, 10).size() == 3);
  CHECK_THROWS_AS(select_local_memory(memory, {0}, e, 0), InvalidArgument);
  CHECK_THROWS_AS(select_local_memory(memory, {}, e, 1), InvalidArgument);

  // Keyword average identical to poem 1's average ranks it first.
  CHECK(select_local_memory(memory, {1}, e, 1).poem_ids == std::vector<std::size_t>{1});
  // Equal similarity: lower poem id wins.
  const auto tied = memory_of({{0, 1}, {1, 0}, {1, 0}});
  CHECK(select_local_memory(tied, {0}, e, 1).poem_ids == std::vector<std::size_t>{1});

  GlobalMemory empty;
  empty.target_dim = 2;
  CHECK(select_local_memory(empty, {0}, e, 3).empty());
}

TEST_CASE("memory read") {
  const Vec s{0.3, -1.2, 0.8};
  const auto single = local_of({s}, {{2.0, -1.0}});
  const auto v = memory_read(s, single);
  CHECK(std::abs(v[0] - 2.0) < 1e-12);
  CHECK(std::abs(v[1] + 1.0) < 1e-12);

  LocalMemory none;
  none.target_dim = 2;
  CHECK(memory_read(s, none) == Vec{0.0, 0.0});

  const std::vector<Vec> sources{{1, 0, 0}, {0, 1, 0}}, targets{{1, 2}, {3, 4}};
  const Vec q{2, 0.5, 0.1};
  const auto two = memory_read(q, local_of(sources, targets));
  const auto expected = naive_read(q, sources, targets);
  CHECK(std::abs(two[0] - expected[0]) < 1e-12);
  CHECK(std::abs(two[1] - expected[1]) < 1e-12);
  CHECK(memory_read(Vec{1, 0, 0}, local_of(sources, targets)) == Vec{1, 2});
  CHECK_THROWS_AS(memory_read(Vec{1, 0}, local_of(sources, targets)), DimensionMismatch);
}

TEST_CASE("memory read properties") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.between(1, 12));
    std::vector<Vec> sources(n, Vec(4)), targets(n, Vec(3)), scaled(n, Vec(3));
    const double c = rng.uniform(-3, 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : sources[i]) x = rng.uniform(-1, 1);
      for (std::size_t k = 0; k < 3; ++k) {
        targets[i][k] = rng.uniform(-1, 1);
        scaled[i][k] = c * targets[i][k];
      }
    }
    Vec q(4);
    for (auto& x : q) x = rng.uniform(-1, 1);
    Vec q_big = q;
    const double factor = rng.uniform(0.1, 50);
    for (auto& x : q_big) x *= factor;

    const auto local = local_of(sources, targets);
    const auto v = memory_read(q, local);
    const auto naive = naive_read(q, sources, targets);
    const auto v_scaled = memory_read(q, local_of(sources, scaled));
    const auto v_big = memory_read(q_big, local);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(v[k] - naive[k]) < 1e-12);
      CHECK(std::abs(v_scaled[k] - c * v[k]) < 1e-12);
      CHECK(std::abs(v_big[k] - v[k]) < 1e-12);
    }

    const auto relu = memory_read(q, local, ReadWeighting::Relu);
    const auto soft = memory_read(q, local, ReadWeighting::Softmax);
    Vec relu_naive(3, 0.0), soft_naive(3, 0.0);
    double total = 0.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = cosine_similarity(q, sources[i]);
      total += std::exp(w[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        relu_naive[k] += std::max(0.0, w[i]) * targets[i][k];
        soft_naive[k] += std::exp(w[i]) / total * targets[i][k];
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(relu[k] - relu_naive[k]) < 1e-12);
      CHECK(std::abs(soft[k] - soft_naive[k]) < 1e-12);
    }
  }
  CHECK(parse_read_weighting("softmax") == ReadWeighting::Softmax);
  CHECK_THROWS_AS(parse_read_weighting("mean"), InvalidArgument);
}

TEST_CASE("combined logits") {
  const auto model = tiny_model(10, 4);
  Rng rng(2);
  Vec s(16), v(8);
  for (auto& x : s) x = rng.uniform(-1, 1);
  for (auto& x : v) x = rng.uniform(-1, 1);
  CHECK(combined_logits(s, v, 0.0, model.projection(), model.embedding()) == model.logits(s));
  CHECK(combined_logits(s, Vec(8, 0.0), 3.5, model.projection(), model.embedding()) == model.logits(s));
  CHECK_THROWS_AS(combined_logits(s, v, -0.1, model.projection(), model.embedding()), InvalidArgument);

  const auto with = combined_logits(s, v, 2.0, model.projection(), model.embedding());
  const auto base = model.logits(s);
  for (std::size_t c = 0; c < with.size(); ++c) {
    double dot = 0.0;
    for (std::size_t k = 0; k < 8; ++k) dot += v[k] * model.embedding().at(c, k);
    CHECK(std::abs(with[c] - (base[c] + 2.0 * dot)) < 1e-12);
  }

  const Tensor w({1, 2}, {0.0, 0.0});
  const Tensor e({2, 2}, {1, 0, 0, 1});
  const auto z = combined_distribution(Vec{0.7}, Vec{10, 0}, 1.0, w, e);
  CHECK(std::abs(z[0] - 0.9999546) < 1e-7);
  CHECK(std::abs(z[0] + z[1] - 1.0) < 1e-15);
}

TEST_CASE("memory files") {
  TempDir dir;
  const auto model = tiny_model(12, 5);
  const auto memory = build_global_memory(model, random_quatrains(model.vocab(), 3, 5));
  save_memory(memory, dir / "m.svc");
  CHECK(load_memory(dir / "m.svc") == memory);
  save_memory(load_memory(dir / "m.svc"), dir / "n.svc");
  CHECK(read_file(dir / "m.svc") == read_file(dir / "n.svc"));

  auto bytes = read_file(dir / "m.svc");
  bytes[0] = 'X';
  write_file(dir / "bad.svc", bytes);
  CHECK_THROWS_AS(load_memory(dir / "bad.svc"), ContainerError);

  const auto wide = Seq2Seq::initialize(model.vocab(), ModelDims{0, 8, 8, 32, 8}, 5, Precision::F64);
  CHECK_THROWS_AS(memory.check_compatible(wide), DimensionMismatch);
  CHECK_NOTHROW(memory.check_compatible(model));

  CHECK_THROWS_AS(load_memory(dir / "absent.svc"), ContainerError);
}
