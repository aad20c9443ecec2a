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

#include "styledverse/seq2seq.hpp"

#include <cmath>

#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"

namespace styledverse {

namespace {

Var leaf(Tape& tape, const Vec& v) { return tape.constant(Tensor::vector(v)); }

Vec to_vec(const Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

void add_gru(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden) {
  for (const char* gate : {"z", "r", "h"}) store.add(prefix + ".W_" + gate, Tensor({in, hidden}));
  for (const char* gate : {"z", "r", "h"}) store.add(prefix + ".U_" + gate, Tensor({hidden, hidden}));
  for (const char* gate : {"z", "r", "h"}) store.add(prefix + ".b_" + gate, Tensor({hidden}));
}

ParameterStore make_layout(const ModelDims& d) {
  ParameterStore store;
  add_gru(store, "encoder.fwd", d.embed, d.enc_hidden);
  add_gru(store, "encoder.bwd", d.embed, d.enc_hidden);
  store.add("bridge.W_init", Tensor({2 * d.enc_hidden, d.dec_hidden}));
  store.add("attention.W_s", Tensor({d.dec_hidden, d.attention}));
  store.add("attention.W_h", Tensor({2 * d.enc_hidden, d.attention}));
  store.add("attention.v", Tensor({d.attention, 1}));
  add_gru(store, "decoder", d.embed + 2 * d.enc_hidden, d.dec_hidden);
  store.add("output.W", Tensor({d.dec_hidden, d.vocab}));
  store.add("embedding.E", Tensor({d.vocab, d.embed}));
  return store;
}

}  // namespace

Seq2Seq Seq2Seq::initialize(Vocabulary vocab, ModelDims dims, std::uint64_t seed, Precision precision) {
  if (dims.embed == 0 || dims.enc_hidden == 0 || dims.dec_hidden == 0 || dims.attention == 0) {
    throw InvalidArgument("model dimensions must be positive");
  }
  dims.vocab = vocab.size();
  Seq2Seq model;
  model.vocab_ = std::move(vocab);
  model.dims_ = dims;
  model.precision_ = precision;
  model.params_ = make_layout(dims);
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    Tensor& t = model.params_[i].value;
    if (t.rank() == 2) glorot_uniform(t, t.rows(), t.cols(), derive_seed(seed, i));
  }
  model.bind_indices();
  model.round_to_storage();
  return model;
}

Seq2Seq::Seq2Seq(Vocabulary vocab, ModelDims dims, ParameterStore params, Precision precision)
    : vocab_(std::move(vocab)), dims_(dims), precision_(precision), params_(std::move(params)) {
  if (dims_.vocab != vocab_.size()) {
    throw DimensionMismatch("model vocabulary size " + std::to_string(dims_.vocab) + " but vocabulary has " +
                            std::to_string(vocab_.size()) + " entries");
  }
  validate_shapes();
  bind_indices();
}

void Seq2Seq::validate_shapes() const {
  const ParameterStore expected = make_layout(dims_);
  for (const auto& want : expected) {
    if (!params_.contains(want.name)) throw DimensionMismatch("missing parameter tensor " + want.name);
    const auto& have = params_[params_.index(want.name)].value;
    if (have.shape() != want.value.shape()) {
      throw DimensionMismatch("tensor " + want.name + " has shape " + to_string(have.shape()) + ", expected " +
                              to_string(want.value.shape()));
    }
  }
  if (params_.size() != expected.size()) throw DimensionMismatch("unexpected extra parameter tensors");
}

Seq2Seq::GruIndex Seq2Seq::gru_index(const std::string& p) const {
  return GruIndex{params_.index(p + ".W_z"), params_.index(p + ".W_r"), params_.index(p + ".W_h"),
                  params_.index(p + ".U_z"), params_.index(p + ".U_r"), params_.index(p + ".U_h"),
                  params_.index(p + ".b_z"), params_.index(p + ".b_r"), params_.index(p + ".b_h")};
}

void Seq2Seq::bind_indices() {
  enc_fwd_ = gru_index("encoder.fwd");
  enc_bwd_ = gru_index("encoder.bwd");
  dec_ = gru_index("decoder");
  w_init_ = params_.index("bridge.W_init");
  att_ws_ = params_.index("attention.W_s");
  att_wh_ = params_.index("attention.W_h");
  att_v_ = params_.index("attention.v");
  projection_ = params_.index("output.W");
  embedding_ = params_.index("embedding.E");
}

void Seq2Seq::set_embedding(const Tensor& table) {
  Tensor& e = params_[embedding_].value;
  if (table.shape() != e.shape()) {
    throw DimensionMismatch("embedding table has shape " + to_string(table.shape()) + ", model expects " +
                            to_string(e.shape()));
  }
  e = table;
  round_to_storage();
}

void Seq2Seq::round_to_storage() {
  if (precision_ == Precision::F32) params_.round_to_float();
}

void Seq2Seq::check_id(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= dims_.vocab) {
    throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(dims_.vocab));
  }
}

Var Seq2Seq::gru_cell(Tape& tape, const GruIndex& g, Var x, Var h) const {
  const auto gate = [&](std::size_t w, std::size_t u, std::size_t b, Var state) {
    return tape.add(tape.add(tape.matmul(x, tape.param(w)), tape.matmul(state, tape.param(u))), tape.param(b));
  };
  const Var z = tape.sigmoid(gate(g.w_z, g.u_z, g.b_z, h));
  const Var r = tape.sigmoid(gate(g.w_r, g.u_r, g.b_r, h));
  const Var candidate = tape.tanh(gate(g.w_h, g.u_h, g.b_h, tape.mul(r, h)));
  // (1 - z) h + z c
  return tape.add(h, tape.mul(z, tape.sub(candidate, h)));
}

Seq2Seq::EncodedGraph Seq2Seq::encode(Tape& tape, const IdSeq& keywords) const {
  if (keywords.empty()) throw InvalidArgument("encode: empty keyword sequence");
  for (Id id : keywords) check_id(id);
  const std::size_t n = keywords.size();
  const Var table = tape.param(embedding_);
  std::vector<Var> inputs;
  inputs.reserve(n);
  for (Id id : keywords) inputs.push_back(tape.embed_lookup(table, static_cast<std::size_t>(id)));

  const Var zero = tape.constant(Tensor({dims_.enc_hidden}));
  std::vector<Var> fwd(n), bwd(n);
  Var h = zero;
  for (std::size_t i = 0; i < n; ++i) fwd[i] = h = gru_cell(tape, enc_fwd_, inputs[i], h);
  h = zero;
  for (std::size_t i = n; i-- > 0;) bwd[i] = h = gru_cell(tape, enc_bwd_, inputs[i], h);

  EncodedGraph out;
  const Var w_h = tape.param(att_wh_);
  for (std::size_t i = 0; i < n; ++i) {
    out.states.push_back(tape.concat({fwd[i], bwd[i]}));
    out.keys.push_back(tape.matmul(out.states.back(), w_h));
  }
  out.stacked = tape.stack(out.states);
  return out;
}

Var Seq2Seq::initial_state(Tape& tape, const EncodedGraph& encoded) const {
  const std::size_t n = encoded.states.size();
  const Var weights = tape.constant(Tensor::vector(Vec(n, 1.0 / static_cast<double>(n))));
  const Var mean = tape.matmul(weights, encoded.stacked);
  return tape.tanh(tape.matmul(mean, tape.param(w_init_)));
}

Var Seq2Seq::attention_weights(Tape& tape, Var s_prev, const EncodedGraph& encoded) const {
  const Var query = tape.matmul(s_prev, tape.param(att_ws_));
  const Var v = tape.param(att_v_);
  std::vector<Var> scores;
  scores.reserve(encoded.keys.size());
  for (Var key : encoded.keys) scores.push_back(tape.matmul(tape.tanh(tape.add(query, key)), v));
  return tape.softmax(tape.concat(scores));
}

Var Seq2Seq::decoder_step(Tape& tape, Id y_prev, Var s_prev, Var context) const {
  check_id(y_prev);
  const Var input = tape.concat({tape.embed_lookup(tape.param(embedding_), static_cast<std::size_t>(y_prev)), context});
  return gru_cell(tape, dec_, input, s_prev);
}

Var Seq2Seq::sequence_loss(Tape& tape, const TrainingPair& pair) const {
  if (pair.target.size() < 2 || pair.target.front() != special::kBos) {
    throw InvalidArgument("sequence_loss: target must start with BOS and hold at least one prediction");
  }
  const EncodedGraph encoded = encode(tape, pair.keywords);
  const Var projection = tape.param(projection_);
  Var s = initial_state(tape, encoded);
  std::vector<Var> losses;
  losses.reserve(pair.target.size() - 1);
  for (std::size_t t = 1; t < pair.target.size(); ++t) {
    check_id(pair.target[t]);
    const Var alpha = attention_weights(tape, s, encoded);
    const Var ctx = tape.matmul(alpha, encoded.stacked);
    s = decoder_step(tape, pair.target[t - 1], s, ctx);
    losses.push_back(tape.cross_entropy(tape.matmul(s, projection), static_cast<std::size_t>(pair.target[t])));
  }
  return tape.reduce_sum(tape.concat(losses));
}

double Seq2Seq::sequence_loss(const TrainingPair& pair) const {
  Tape tape(params_);
  return tape.value(sequence_loss(tape, pair))[0];
}

EncodedKeywords Seq2Seq::encode(const IdSeq& keywords) const {
  Tape tape(params_);
  const EncodedGraph graph = encode(tape, keywords);
  EncodedKeywords out;
  for (std::size_t i = 0; i < graph.states.size(); ++i) {
    out.states.push_back(to_vec(tape.value(graph.states[i])));
    out.keys.push_back(to_vec(tape.value(graph.keys[i])));
  }
  return out;
}

namespace {

void check_encoded(const EncodedKeywords& encoded) {
  if (encoded.states.empty() || encoded.states.size() != encoded.keys.size()) {
    throw InvalidArgument("encoded keywords are empty or inconsistent");
  }
}

}  // namespace

DecoderState Seq2Seq::initial_state(const EncodedKeywords& encoded) const {
  check_encoded(encoded);
  Tape tape(params_);
  EncodedGraph graph;
  for (const auto& h : encoded.states) graph.states.push_back(leaf(tape, h));
  graph.stacked = tape.stack(graph.states);
  return DecoderState{to_vec(tape.value(initial_state(tape, graph))), 0};
}

Vec Seq2Seq::attention_weights(const Vec& s_prev, const EncodedKeywords& encoded) const {
  check_encoded(encoded);
  if (s_prev.size() != dims_.dec_hidden) throw DimensionMismatch("attention: decoder state has wrong width");
  Tape tape(params_);
  EncodedGraph graph;
  for (const auto& k : encoded.keys) graph.keys.push_back(leaf(tape, k));
  return to_vec(tape.value(attention_weights(tape, leaf(tape, s_prev), graph)));
}

Vec Seq2Seq::context(const Vec& alpha, const EncodedKeywords& encoded) const {
  check_encoded(encoded);
  if (alpha.size() != encoded.states.size()) throw DimensionMismatch("context: one weight per encoder state");
  Vec ctx(encoded.states.front().size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t k = 0; k < ctx.size(); ++k) ctx[k] += alpha[i] * encoded.states[i][k];
  }
  return ctx;
}

DecoderState Seq2Seq::decoder_step(Id y_prev, const DecoderState& prev, const Vec& context) const {
  if (prev.s.size() != dims_.dec_hidden) throw DimensionMismatch("decoder_step: state has wrong width");
  if (context.size() != 2 * dims_.enc_hidden) throw DimensionMismatch("decoder_step: context has wrong width");
  Tape tape(params_);
  const Var s = decoder_step(tape, y_prev, leaf(tape, prev.s), leaf(tape, context));
  return DecoderState{to_vec(tape.value(s)), prev.step + 1};
}

Vec Seq2Seq::logits(const Vec& s) const {
  if (s.size() != dims_.dec_hidden) throw DimensionMismatch("logits: state has wrong width");
  const Tensor& w = projection();
  Vec out(w.cols(), 0.0);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto row = w.row(p);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += s[p] * row[j];
  }
  return out;
}

Vec Seq2Seq::output_distribution(const Vec& s) const {
  Tape tape;
  return to_vec(tape.value(tape.softmax(leaf(tape, logits(s)))));
}

Gradients batch_gradient(const Seq2Seq& model, const std::vector<TrainingPair>& pairs, double* mean_loss) {
  Gradients grads(model.params());
  double total = 0.0;
  for (const auto& pair : pairs) {
    Tape tape(model.params());
    const Var loss = model.sequence_loss(tape, pair);
    total += tape.value(loss)[0];
    tape.backward(loss, grads);
  }
  if (!pairs.empty()) grads.scale(1.0 / static_cast<double>(pairs.size()));
  if (mean_loss != nullptr) *mean_loss = pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
  return grads;
}

TrainResult train(Seq2Seq& model, const std::vector<TrainingPair>& pairs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  if (pairs.empty()) throw InvalidArgument("train: no training pairs");
  if (cfg.batch == 0) throw InvalidArgument("train: batch size must be at least 1");

  TrainResult result;
  AdaDeltaState state(model.params(), cfg.adadelta);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      Gradients grads(model.params());
      double batch_total = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto where = "epoch " + std::to_string(epoch) + ", pair " + std::to_string(order[i]);
        try {
          Tape tape(model.params());
          const Var loss = model.sequence_loss(tape, pairs[order[i]]);
          const double value = tape.value(loss)[0];
          if (!std::isfinite(value)) throw TrainingError("non-finite loss at " + where);
          batch_total += value;
          tape.backward(loss, grads);
        } catch (const NonFiniteError& e) {
          throw TrainingError(where + ": " + e.what());
        }
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      if (cfg.freeze_embeddings) grads[model.embedding_index()].fill(0.0);
      try {
        adadelta_step(model.params(), grads, state);
      } catch (const NonFiniteError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      model.round_to_storage();
      epoch_total += batch_total;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(pairs.size()));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  return result;
}

double mean_loss(const Seq2Seq& model, const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw InvalidArgument("mean_loss: no pairs");
  double total = 0.0;
  for (const auto& pair : pairs) total += model.sequence_loss(pair);
  return total / static_cast<double>(pairs.size());
}

double perplexity(const Seq2Seq& model, const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw InvalidArgument("perplexity: no pairs");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& pair : pairs) {
    total += model.sequence_loss(pair);
    tokens += pair.target.size() - 1;
  }
  return std::exp(total / static_cast<double>(tokens));
}

}  // namespace styledverse
