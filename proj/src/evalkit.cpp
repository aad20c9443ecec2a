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

#include "styledverse/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/stylemem.hpp"

namespace styledverse {

namespace {

std::map<std::u32string, double> count_ngrams(const std::vector<Poem>& poems, std::size_t n) {
  std::map<std::u32string, double> counts;
  for (const auto& poem : poems) {
    for (const auto& line : poem.lines) {
      for (std::size_t i = 0; i + n <= line.size(); ++i) counts[line.substr(i, n)] += 1.0;
    }
  }
  return counts;
}

std::vector<std::u32string> union_support(const std::vector<const std::vector<Poem>*>& corpora, std::size_t n) {
  std::set<std::u32string> all;
  for (const auto* poems : corpora) {
    for (auto& g : collect_ngrams(*poems, n)) all.insert(std::move(g));
  }
  return {all.begin(), all.end()};
}

}  // namespace

double NgramDistribution::prob(const std::u32string& gram) const {
  const auto it = std::lower_bound(support.begin(), support.end(), gram);
  if (it == support.end() || *it != gram) return 0.0;
  return probs[static_cast<std::size_t>(it - support.begin())];
}

std::vector<std::u32string> collect_ngrams(const std::vector<Poem>& poems, std::size_t n) {
  std::vector<std::u32string> out;
  for (auto& [gram, count] : count_ngrams(poems, n)) out.push_back(gram);
  return out;
}

NgramDistribution ngram_distribution(const std::vector<Poem>& poems, std::size_t n, double lambda,
                                     const std::vector<std::u32string>& support) {
  if (n == 0) throw InvalidArgument("ngram_distribution: n must be at least 1");
  if (poems.empty()) throw InvalidArgument("ngram_distribution: no poems");
  if (lambda < 0.0) throw InvalidArgument("ngram_distribution: negative smoothing");
  const auto counts = count_ngrams(poems, n);
  if (counts.empty()) throw InvalidArgument("ngram_distribution: n = " + std::to_string(n) + " exceeds every line");

  NgramDistribution dist;
  dist.order = n;
  dist.lambda = lambda;
  if (support.empty()) {
    for (const auto& [gram, c] : counts) dist.support.push_back(gram);
  } else {
    std::set<std::u32string> unique(support.begin(), support.end());
    dist.support.assign(unique.begin(), unique.end());
    for (const auto& [gram, c] : counts) {
      if (!std::binary_search(dist.support.begin(), dist.support.end(), gram)) {
        throw InvalidArgument("ngram_distribution: observed n-gram outside the declared support");
      }
    }
  }

  double total = 0.0;
  dist.counts.reserve(dist.support.size());
  for (const auto& gram : dist.support) {
    const auto it = counts.find(gram);
    dist.counts.push_back(it == counts.end() ? 0.0 : it->second);
    total += dist.counts.back();
  }
  const double denom = total + lambda * static_cast<double>(dist.support.size());
  for (double c : dist.counts) dist.probs.push_back((c + lambda) / denom);
  return dist;
}

double kl_divergence(const NgramDistribution& p, const NgramDistribution& q) {
  if (p.order != q.order) throw InvalidArgument("kl_divergence: n-gram orders differ");
  if (p.support != q.support) throw InvalidArgument("kl_divergence: supports differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    if (p.probs[i] <= 0.0) continue;
    if (q.probs[i] <= 0.0) throw InvalidArgument("kl_divergence: q is zero where p is positive");
    kl += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
  }
  return std::max(kl, 0.0);
}

double style_adherence(const std::vector<Poem>& generated, const std::vector<Poem>& style,
                       const std::vector<Poem>& reference, std::size_t n, double lambda) {
  if (generated.empty() || style.empty() || reference.empty()) {
    throw InvalidArgument("style_adherence: every corpus must be non-empty");
  }
  const auto support = union_support({&generated, &style, &reference}, n);
  const auto gen = ngram_distribution(generated, n, lambda, support);
  const auto sty = ngram_distribution(style, n, lambda, support);
  const auto ref = ngram_distribution(reference, n, lambda, support);
  return kl_divergence(gen, ref) - kl_divergence(gen, sty);
}

std::vector<Poem> synth_style_corpus(const StyleSpec& spec, std::uint64_t seed) {
  if (spec.weights.empty()) throw InvalidArgument("synth_style_corpus: empty weights");
  if (spec.line_len != 5 && spec.line_len != 7) throw InvalidArgument("synth_style_corpus: line_len must be 5 or 7");
  double sum = 0.0;
  std::vector<double> weights;
  for (const auto& [c, w] : spec.weights) {
    if (!(w >= 0.0) || c == U'\0') throw InvalidArgument("synth_style_corpus: invalid weight");
    weights.push_back(w);
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidArgument("synth_style_corpus: weights must sum to 1");

  Rng rng(seed);
  std::vector<Poem> poems;
  poems.reserve(spec.poems_count);
  for (std::size_t p = 0; p < spec.poems_count; ++p) {
    Poem poem{spec.name + "-" + std::to_string(p), {}};
    for (int l = 0; l < 4; ++l) {
      std::u32string line;
      for (std::size_t i = 0; i < spec.line_len; ++i) line.push_back(spec.weights[rng.categorical(weights)].first);
      poem.lines.push_back(std::move(line));
    }
    poems.push_back(std::move(poem));
  }
  return poems;
}

nlohmann::json StyleShiftReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"beta", r.beta},
                         {"kl_to_style", r.kl_to_style},
                         {"kl_to_reference", r.kl_to_reference},
                         {"adherence", r.adherence},
                         {"num_poems", r.num_poems}});
  }
  return rows_json;
}

StyleShiftReport style_shift_experiment(const Seq2Seq& model, const std::vector<Poem>& style_poems,
                                        const std::vector<Poem>& reference_poems,
                                        const std::vector<IdSeq>& keyword_sets, const std::vector<double>& beta_list,
                                        const GenerationConfig& cfg, std::size_t n) {
  if (beta_list.empty() || beta_list.front() != 0.0) throw InvalidArgument("beta list must start at 0");
  if (!std::is_sorted(beta_list.begin(), beta_list.end())) throw InvalidArgument("beta list must be ascending");
  if (keyword_sets.empty()) throw InvalidArgument("style_shift_experiment: no keyword sets");
  if (style_poems.empty() || reference_poems.empty()) throw InvalidArgument("style_shift_experiment: empty corpus");

  const GlobalMemory memory = build_global_memory(model, style_poems);
  StyleShiftReport report;
  for (std::size_t arm = 0; arm < beta_list.size(); ++arm) {
    GenerationConfig arm_cfg = cfg;
    arm_cfg.beta = beta_list[arm];
    const std::uint64_t arm_seed = cfg.seed + arm;
    std::vector<Quatrain> outputs;
    std::vector<Poem> poems;
    for (std::size_t k = 0; k < keyword_sets.size(); ++k) {
      arm_cfg.seed = derive_seed(arm_seed, k);
      auto result = generate_quatrain(model, &memory, keyword_sets[k], arm_cfg);
      poems.push_back(result.quatrain.to_poem());
      outputs.push_back(std::move(result.quatrain));
    }

    const auto support = union_support({&poems, &style_poems, &reference_poems}, n);
    const auto gen = ngram_distribution(poems, n, 0.01, support);
    StyleShiftRow row;
    row.beta = beta_list[arm];
    row.kl_to_style = kl_divergence(gen, ngram_distribution(style_poems, n, 0.01, support));
    row.kl_to_reference = kl_divergence(gen, ngram_distribution(reference_poems, n, 0.01, support));
    row.adherence = row.kl_to_reference - row.kl_to_style;
    row.num_poems = poems.size();
    report.rows.push_back(row);
    report.generated.push_back(std::move(outputs));
  }
  return report;
}

}  // namespace styledverse
