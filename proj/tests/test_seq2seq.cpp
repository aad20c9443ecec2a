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

#include <cmath>
#include <numeric>

#include "styledverse/error.hpp"
#include "styledverse/gradcheck.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/seq2seq.hpp"
#include "support.hpp"

using namespace styledverse;
using namespace styledverse::testing;

namespace {

void zero_all(Seq2Seq& model) {
  for (std::size_t i = 0; i < model.params().size(); ++i) model.params()[i].value.fill(0.0);
}

Tensor& param(Seq2Seq& model, const std::string& name) { return model.params()[model.params().index(name)].value; }

double sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("parameter shapes follow the dims") {
  const auto model = tiny_model(15, 1, ModelDims{0, 6, 4, 10, 3});
  const auto& p = model.params();
  CHECK(p[p.index("embedding.E")].value.shape() == Shape{20, 6});
  CHECK(p[p.index("encoder.fwd.W_z")].value.shape() == Shape{6, 4});
  CHECK(p[p.index("encoder.bwd.U_h")].value.shape() == Shape{4, 4});
  CHECK(p[p.index("bridge.W_init")].value.shape() == Shape{8, 10});
  CHECK(p[p.index("attention.W_s")].value.shape() == Shape{10, 3});
  CHECK(p[p.index("attention.W_h")].value.shape() == Shape{8, 3});
  CHECK(p[p.index("decoder.W_r")].value.shape() == Shape{14, 10});
  CHECK(p[p.index("output.W")].value.shape() == Shape{10, 20});

  ParameterStore broken = p;
  broken[broken.index("attention.W_h")].value = Tensor({7, 3});
  CHECK_THROWS_WITH_AS(Seq2Seq(model.vocab(), model.dims(), broken, Precision::F64),
                       doctest::Contains("attention.W_h"), DimensionMismatch);
}

TEST_CASE("encode") {
  auto model = tiny_model(10, 2, ModelDims{0, 5, 4, 6, 3});
  const auto enc = model.encode({5, 6, 7});
  REQUIRE(enc.states.size() == 3);
  for (const auto& h : enc.states) CHECK(h.size() == 8);
  CHECK_THROWS_AS(model.encode({}), InvalidArgument);
  CHECK_THROWS_AS(model.encode({99}), InvalidArgument);

  const auto reversed = model.encode({7, 6, 5});
  CHECK(reversed.states[0] != enc.states[0]);

  zero_all(model);
  for (const auto& h : model.encode({5, 9, 6, 8}).states) {
    for (double x : h) CHECK(x == 0.0);
  }
}

TEST_CASE("attention weights") {
  auto model = tiny_model(6, 3, ModelDims{0, 4, 3, 5, 2});
  const Vec s(5, 0.3);
  CHECK(model.attention_weights(s, model.encode({6})) == Vec{1.0});
  const auto enc = model.encode({5, 6, 7, 8, 9});
  CHECK(std::abs(sum(model.attention_weights(s, enc)) - 1.0) < 1e-12);

  EncodedKeywords same;
  same.states.assign(4, Vec(6, 0.2));
  same.keys.assign(4, Vec{0.4, -0.1});
  for (double a : model.attention_weights(s, same)) CHECK(std::abs(a - 0.25) < 1e-15);

  // W_s = 0 and v = (2, 0) make e_i = 2 tanh(key_i[0]).
  param(model, "attention.W_s").fill(0.0);
  param(model, "attention.v") = Tensor({2, 1}, {2.0, 0.0});
  EncodedKeywords two;
  two.states.assign(2, Vec(6, 0.0));
  two.keys = {Vec{0.0, 0.0}, Vec{std::atanh(std::log(3.0) / 2.0), 0.5}};
  const auto alpha = model.attention_weights(s, two);
  CHECK(std::abs(alpha[0] - 0.25) < 1e-12);
  CHECK(std::abs(alpha[1] - 0.75) < 1e-12);
}

TEST_CASE("decoder step") {
  auto model = tiny_model(6, 4, ModelDims{0, 4, 3, 5, 2});
  const Vec ctx(6, 0.1);
  const DecoderState prev{Vec{0.2, -0.4, 0.6, 0.0, 1.0}, 3};
  const auto a = model.decoder_step(7, prev, ctx);
  CHECK(a.step == 4);
  CHECK(model.decoder_step(7, prev, ctx).s == a.s);
  CHECK_THROWS_AS(model.decoder_step(11, prev, ctx), InvalidArgument);

  zero_all(model);
  const auto half = model.decoder_step(7, prev, ctx);
  for (std::size_t i = 0; i < 5; ++i) CHECK(half.s[i] == 0.5 * prev.s[i]);
  const auto still = model.decoder_step(special::kPad, DecoderState{Vec(5, 0.0), 0}, Vec(6, 0.0));
  for (double x : still.s) CHECK(x == 0.0);
}

TEST_CASE("output distribution") {
  auto model = tiny_model(2, 5, ModelDims{0, 4, 3, 5, 2});
  const Vec s{0.3, -0.2, 0.5, 0.1, 0.9};
  CHECK(model.output_distribution(s).size() == 7);
  CHECK(std::abs(sum(model.output_distribution(s)) - 1.0) < 1e-12);

  auto& w = param(model, "output.W");
  w.fill(0.0);
  for (double p : model.output_distribution(s)) CHECK(std::abs(p - 1.0 / 7.0) < 1e-15);
  // Logits (0, ln 2, 0, ...) over 7 classes give 1/8 and 2/8.
  w.at(0, 1) = std::log(2.0) / s[0];
  const auto z = model.output_distribution(s);
  CHECK(std::abs(z[0] - 1.0 / 8.0) < 1e-12);
  CHECK(std::abs(z[1] - 2.0 / 8.0) < 1e-12);
}

TEST_CASE("sequence loss of a uniform model is L ln V") {
  auto model = tiny_model(10, 6);
  param(model, "output.W").fill(0.0);
  const TrainingPair pair{{5, 6}, {special::kBos, 7, 8, 9, special::kEos}};
  CHECK(std::abs(model.sequence_loss(pair) - 4.0 * std::log(15.0)) < 1e-10);
  CHECK(std::abs(perplexity(model, {pair}) - 15.0) < 1e-9);
  CHECK_THROWS_AS(model.sequence_loss(TrainingPair{{5}, {7, special::kEos}}), InvalidArgument);
}

TEST_CASE("sequence loss graph agrees with the value path and is nonnegative") {
  const auto model = tiny_model(12, 7);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    TrainingPair pair;
    for (int i = 0; i < rng.between(1, 4); ++i) pair.keywords.push_back(static_cast<Id>(rng.between(5, 16)));
    pair.target.push_back(special::kBos);
    for (int i = 0; i < rng.between(1, 8); ++i) pair.target.push_back(static_cast<Id>(rng.between(3, 16)));
    pair.target.push_back(special::kEos);
    Tape tape(model.params());
    const double graph = tape.value(model.sequence_loss(tape, pair))[0];
    CHECK(graph >= 0.0);
    CHECK(std::abs(graph - model.sequence_loss(pair)) < 1e-10);
  }
}

TEST_CASE("sequence loss gradients match finite differences") {
  auto model = tiny_model(15, 8);
  const TrainingPair pair{{6, 9, 12}, {special::kBos, 7, 8, special::kSep, 10, special::kEos}};
  const auto report =
      finite_difference_check([&](Tape& t) { return model.sequence_loss(t, pair); }, model.params(), 1e-3);
  CHECK(report.groups.size() == model.params().size());
  for (const auto& g : report.groups) {
    CAPTURE(g.name);
    CHECK(g.max_rel_error < 1e-4);
  }
}

TEST_CASE("training") {
  const TrainingPair pair{{6, 8}, {special::kBos, 6, 7, 8, 9, 10, special::kEos}};
  auto model = tiny_model(10, 9);
  const auto initial = model.params();
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(train(model, {pair}, cfg).epoch_loss.empty());
  CHECK(model.params() == initial);

  cfg.epochs = 400;
  cfg.batch = 1;
  const double before = model.sequence_loss(pair);
  const auto curve = train(model, {pair}, cfg).epoch_loss;
  CHECK(curve.size() == 400);
  CHECK(curve.back() < before);
  CHECK(model.sequence_loss(pair) < 0.1);

  auto again = tiny_model(10, 9);
  train(again, {pair}, cfg);
  CHECK(again.params() == model.params());

  CHECK_THROWS_AS(train(model, {}, cfg), InvalidArgument);
}

TEST_CASE("frozen embeddings stay fixed") {
  auto model = tiny_model(10, 10);
  const Tensor before = model.embedding();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.freeze_embeddings = true;
  train(model, {TrainingPair{{6}, {special::kBos, 6, 7, special::kEos}}}, cfg);
  CHECK(model.embedding() == before);
}

TEST_CASE("a divergent model aborts training with a diagnostic") {
  auto model = tiny_model(10, 11);
  param(model, "output.W")[0] = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(model, {TrainingPair{{6}, {special::kBos, 6, special::kEos}}}, cfg), TrainingError);
}

TEST_CASE("32-bit storage keeps parameters float-representable") {
  auto model = Seq2Seq::initialize(cjk_vocab(8), ModelDims{0, 4, 4, 6, 3}, 3, Precision::F32);
  TrainConfig cfg;
  cfg.epochs = 2;
  train(model, {TrainingPair{{6}, {special::kBos, 6, 7, special::kEos}}}, cfg);
  for (const auto& p : model.params()) {
    for (double x : p.value.values()) CHECK(static_cast<double>(static_cast<float>(x)) == x);
  }
}

TEST_CASE("perplexity is monotone in total loss") {
  auto model = tiny_model(10, 12);
  const std::vector<TrainingPair> pairs{{{6}, {special::kBos, 6, 7, special::kEos}},
                                        {{8, 9}, {special::kBos, 9, 8, 10, special::kEos}}};
  const double before = perplexity(model, pairs);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch = 2;
  train(model, pairs, cfg);
  CHECK(mean_loss(model, pairs) < mean_loss(tiny_model(10, 12), pairs));
  CHECK(perplexity(model, pairs) < before);
}
