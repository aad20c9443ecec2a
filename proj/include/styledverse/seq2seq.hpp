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

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "styledverse/adadelta.hpp"
#include "styledverse/corpus.hpp"
#include "styledverse/params.hpp"
#include "styledverse/tape.hpp"

namespace styledverse {

using Vec = std::vector<double>;

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 32;       // d_e
  std::size_t enc_hidden = 32;  // d_h per direction
  std::size_t dec_hidden = 64;  // d_s
  std::size_t attention = 32;   // d_a

  bool operator==(const ModelDims&) const = default;
};

/// Decoder state s_t together with its step index.
struct DecoderState {
  Vec s;
  std::size_t step = 0;
};

/// Encoder output for one keyword sequence, plus the attention keys
/// W_h h_i that stay fixed across decoding steps.
struct EncodedKeywords {
  std::vector<Vec> states;  // h_i, each 2 d_h
  std::vector<Vec> keys;    // W_h h_i, each d_a
};

/// Attention-based encoder/decoder over characters.
///
/// The encoder is a bidirectional GRU over keyword embeddings; h_i joins
/// the forward and backward states. Each decoder step attends over the h_i
/// with additive scoring v . tanh(W_s s_{t-1} + W_h h_i), feeds
/// [E[y_{t-1}]; context] through a GRU cell and projects the new state onto
/// the vocabulary with W. The decoder starts from tanh(W_init mean(h_i)).
class Seq2Seq {
 public:
  static Seq2Seq initialize(Vocabulary vocab, ModelDims dims, std::uint64_t seed,
                            Precision precision = Precision::F32);

  /// Wraps existing parameters; throws DimensionMismatch naming the first
  /// tensor whose shape disagrees with `dims`.
  Seq2Seq(Vocabulary vocab, ModelDims dims, ParameterStore params, Precision precision);

  const Vocabulary& vocab() const { return vocab_; }
  const ModelDims& dims() const { return dims_; }
  Precision precision() const { return precision_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  const Tensor& embedding() const { return params_[embedding_].value; }
  const Tensor& projection() const { return params_[projection_].value; }
  std::size_t embedding_index() const { return embedding_; }

  /// Copies a pretrained table into E row by row.
  void set_embedding(const Tensor& table);

  /// Applies the storage precision to every parameter.
  void round_to_storage();

  // Value-level API. All of these are pure functions of their arguments.
  EncodedKeywords encode(const IdSeq& keywords) const;
  DecoderState initial_state(const EncodedKeywords& encoded) const;
  Vec attention_weights(const Vec& s_prev, const EncodedKeywords& encoded) const;
  Vec context(const Vec& alpha, const EncodedKeywords& encoded) const;
  DecoderState decoder_step(Id y_prev, const DecoderState& prev, const Vec& context) const;
  /// Raw logits s_t W.
  Vec logits(const Vec& s) const;
  /// softmax(s_t W).
  Vec output_distribution(const Vec& s) const;

  // Graph builders on a tape bound to params().
  struct EncodedGraph {
    std::vector<Var> states;
    std::vector<Var> keys;
    Var stacked;
  };
  EncodedGraph encode(Tape& tape, const IdSeq& keywords) const;
  Var initial_state(Tape& tape, const EncodedGraph& encoded) const;
  Var attention_weights(Tape& tape, Var s_prev, const EncodedGraph& encoded) const;
  Var decoder_step(Tape& tape, Id y_prev, Var s_prev, Var context) const;

  /// Teacher-forced sum over steps of -ln z_t[target_t].
  Var sequence_loss(Tape& tape, const TrainingPair& pair) const;
  double sequence_loss(const TrainingPair& pair) const;

 private:
  struct GruIndex {
    std::size_t w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;
  };

  Seq2Seq() = default;
  void bind_indices();
  void validate_shapes() const;
  GruIndex gru_index(const std::string& prefix) const;
  Var gru_cell(Tape& tape, const GruIndex& gru, Var x, Var h) const;
  void check_id(Id id) const;

  Vocabulary vocab_;
  ModelDims dims_;
  Precision precision_ = Precision::F32;
  ParameterStore params_;

  GruIndex enc_fwd_{}, enc_bwd_{}, dec_{};
  std::size_t w_init_ = 0, att_ws_ = 0, att_wh_ = 0, att_v_ = 0, projection_ = 0, embedding_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
  AdaDeltaConfig adadelta;
  bool freeze_embeddings = false;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-pair loss of each epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Minibatch teacher-forced training with AdaDelta step sizing. Each batch
/// gradient is the mean of per-pair gradients, summed in batch order.
TrainResult train(Seq2Seq& model, const std::vector<TrainingPair>& pairs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Gradient of the mean loss over `pairs`, accumulated in the given order.
Gradients batch_gradient(const Seq2Seq& model, const std::vector<TrainingPair>& pairs, double* mean_loss = nullptr);

double mean_loss(const Seq2Seq& model, const std::vector<TrainingPair>& pairs);

/// exp(total cross-entropy / total predicted tokens).
double perplexity(const Seq2Seq& model, const std::vector<TrainingPair>& pairs);

}  // namespace styledverse
