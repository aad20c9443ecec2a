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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "styledverse/corpus.hpp"
#include "styledverse/phonology.hpp"
#include "styledverse/seq2seq.hpp"
#include "styledverse/stylemem.hpp"

namespace styledverse {

enum class StrategyKind { Greedy, Beam, Sample };

struct Strategy {
  StrategyKind kind = StrategyKind::Greedy;
  std::size_t beam_width = 4;
  double temperature = 1.0;

  /// "greedy", "beam:<width>" or "sample:<temperature>".
  static Strategy parse(const std::string& text);
  std::string to_string() const;
};

struct GenerationConfig {
  double beta = 1.0;
  std::size_t top_n = 10;
  Strategy strategy;
  std::size_t max_line_len = 32;  // cap for free-running decode_sequence
  std::size_t line_len = 5;
  std::uint64_t seed = 0;
  bool enforce_constraints = false;
  bool feed_previous_lines = false;
  ReadWeighting read_weighting = ReadWeighting::Raw;

  /// Throws InvalidArgument when a field is outside its range.
  void validate() const;
};

enum class FinishReason { Eos, Sep, Truncated };
std::string to_string(FinishReason r);

struct StepTrace {
  Id token = 0;
  Vec attention;
  std::vector<std::pair<Id, double>> top;  // five most probable tokens
};

struct DecodeResult {
  IdSeq ids;  // emitted tokens, stop token excluded
  FinishReason finish = FinishReason::Truncated;
  double log_prob = 0.0;
  std::vector<StepTrace> trace;
};

/// Per-generation decoding context: the model, its encoding of the keywords
/// and an optional local memory blended into the output logits.
class DecodeSession {
 public:
  DecodeSession(const Seq2Seq& model, const IdSeq& keywords, const LocalMemory* memory, double beta,
                ReadWeighting weighting = ReadWeighting::Raw);

  struct Step {
    DecoderState state;
    Vec log_probs;
    Vec attention;
  };

  DecoderState start() const;
  /// Attends with the previous state, advances the decoder on `y_prev` and
  /// scores the vocabulary (memory-blended when a memory is attached).
  Step advance(const DecoderState& prev, Id y_prev) const;

  const Seq2Seq& model() const { return *model_; }

 private:
  const Seq2Seq* model_;
  EncodedKeywords encoded_;
  const LocalMemory* memory_;
  double beta_;
  ReadWeighting weighting_;
};

struct StopRule {
  std::vector<Id> stop_tokens{special::kEos};
  std::size_t max_len = 32;
};

/// Free-running decode from BOS until a stop token or max_len tokens.
DecodeResult decode_sequence(const Seq2Seq& model, const LocalMemory* memory, const IdSeq& keywords,
                             const GenerationConfig& cfg, const StopRule& stop);

struct GenerationResult {
  Quatrain quatrain;
  std::vector<FinishReason> line_finish;
  std::vector<std::size_t> memory_poems;
  double log_prob = 0.0;
  std::vector<StepTrace> trace;
};

struct ToneConstraint {
  const PhonologyTable* phonology = nullptr;
  const ToneTemplate* tone_template = nullptr;
};

/// Four lines of exactly cfg.line_len characters. The local memory (if any)
/// is selected once from the keywords. Stop tokens are masked until a line
/// is full and forced when it is.
GenerationResult generate_quatrain(const Seq2Seq& model, const GlobalMemory* memory, const IdSeq& keywords,
                                   const GenerationConfig& cfg, const ToneConstraint& tones = {});

}  // namespace styledverse
