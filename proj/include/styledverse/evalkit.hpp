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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "styledverse/corpus.hpp"
#include "styledverse/generate.hpp"
#include "styledverse/seq2seq.hpp"

namespace styledverse {

/// Add-λ smoothed character n-gram distribution over an explicit support.
struct NgramDistribution {
  std::size_t order = 1;
  double lambda = 0.0;
  std::vector<std::u32string> support;  // sorted, unique
  std::vector<double> counts;           // aligned with support
  std::vector<double> probs;            // aligned with support

  /// Probability of `gram`, 0 outside the support.
  double prob(const std::u32string& gram) const;
};

/// Every n-gram occurring inside a line of `poems`, sorted.
std::vector<std::u32string> collect_ngrams(const std::vector<Poem>& poems, std::size_t n);

/// N-grams never cross line boundaries. With an empty `support` the
/// observed n-grams are used; otherwise every observed n-gram must be in it.
NgramDistribution ngram_distribution(const std::vector<Poem>& poems, std::size_t n, double lambda = 0.01,
                                     const std::vector<std::u32string>& support = {});

/// Σ p ln(p/q). Throws InvalidArgument on order or support mismatch, or if q
/// is zero where p is positive.
double kl_divergence(const NgramDistribution& p, const NgramDistribution& q);

/// KL(gen‖reference) − KL(gen‖style) with add-λ smoothing over the union of
/// n-grams seen in all three corpora.
double style_adherence(const std::vector<Poem>& generated, const std::vector<Poem>& style,
                       const std::vector<Poem>& reference, std::size_t n = 1, double lambda = 0.01);

struct StyleSpec {
  std::string name;
  std::vector<std::pair<char32_t, double>> weights;  // must sum to 1
  std::size_t line_len = 5;
  std::size_t poems_count = 0;
};

/// Quatrains whose characters are drawn independently from the weights.
std::vector<Poem> synth_style_corpus(const StyleSpec& spec, std::uint64_t seed);

struct StyleShiftRow {
  double beta = 0.0;
  double kl_to_style = 0.0;
  double kl_to_reference = 0.0;
  double adherence = 0.0;
  std::size_t num_poems = 0;
};

struct StyleShiftReport {
  std::vector<StyleShiftRow> rows;
  std::vector<std::vector<Quatrain>> generated;  // one list per row

  nlohmann::json to_json() const;
};

/// Generates one quatrain per keyword set for each β with a memory built from
/// `style_poems`. Arm i uses seed cfg.seed + i; keyword set k within an arm
/// uses derive_seed(arm seed, k). β values must be ascending and start at 0.
StyleShiftReport style_shift_experiment(const Seq2Seq& model, const std::vector<Poem>& style_poems,
                                        const std::vector<Poem>& reference_poems,
                                        const std::vector<IdSeq>& keyword_sets, const std::vector<double>& beta_list,
                                        const GenerationConfig& cfg, std::size_t n = 1);

}  // namespace styledverse
