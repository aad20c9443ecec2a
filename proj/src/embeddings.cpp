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

#include "styledverse/embeddings.hpp"

#include <algorithm>
#include <cmath>

#include "styledverse/error.hpp"
#include "styledverse/params.hpp"
#include "styledverse/rng.hpp"

namespace styledverse {

EmbeddingTable init_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("embedding dim must be at least 1");
  EmbeddingTable table{Tensor({vocab_size, dim})};
  glorot_uniform(table.matrix, vocab_size, dim, seed);
  return table;
}

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

EmbeddingTable pretrain_embeddings(const std::vector<Poem>& corpus, const Vocabulary& vocab,
                                   const SkipGramConfig& cfg, std::uint64_t seed) {
  if (corpus.empty()) throw InvalidArgument("pretrain_embeddings: empty corpus");
  if (cfg.dim == 0) throw InvalidArgument("pretrain_embeddings: dim must be at least 1");

  const std::size_t v = vocab.size();
  const std::size_t d = cfg.dim;
  Tensor input({v, d});
  {
    Rng rng(seed);
    const double bound = 0.5 / static_cast<double>(d);
    for (double& x : input.data()) x = rng.uniform(-bound, bound);
  }
  Tensor output({v, d});

  std::vector<IdSeq> lines;
  std::vector<double> counts(v, 0.0);
  std::size_t total_tokens = 0;
  for (const auto& poem : corpus) {
    for (const auto& line : poem.lines) {
      lines.push_back(vocab.encode(line));
      for (Id id : lines.back()) counts[static_cast<std::size_t>(id)] += 1.0;
      total_tokens += line.size();
    }
  }
  // Negatives follow the unigram distribution raised to 3/4.
  std::vector<double> noise(v, 0.0);
  for (std::size_t i = 0; i < v; ++i) noise[i] = std::pow(counts[i], 0.75);

  Rng rng(derive_seed(seed, 1));
  std::vector<double> grad_in(d);
  const double steps = static_cast<double>(cfg.epochs * total_tokens);
  double step = 0.0;

  const auto train_pair = [&](std::size_t center, std::size_t target, double label, double lr) {
    auto in = input.row(center);
    auto out = output.row(target);
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += in[k] * out[k];
    const double g = lr * (label - sigmoid(dot));
    for (std::size_t k = 0; k < d; ++k) {
      grad_in[k] += g * out[k];
      out[k] += g * in[k];
    }
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& line : lines) {
      for (std::size_t pos = 0; pos < line.size(); ++pos) {
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - step / std::max(1.0, steps));
        step += 1.0;
        const auto center = static_cast<std::size_t>(line[pos]);
        const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
        const std::size_t hi = std::min(line.size() - 1, pos + cfg.window);
        for (std::size_t ctx = lo; ctx <= hi; ++ctx) {
          if (ctx == pos) continue;
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          train_pair(center, static_cast<std::size_t>(line[ctx]), 1.0, lr);
          for (std::size_t n = 0; n < cfg.negatives; ++n) {
            const std::size_t neg = rng.categorical(noise);
            if (neg == static_cast<std::size_t>(line[ctx])) continue;
            train_pair(center, neg, 0.0, lr);
          }
          auto in = input.row(center);
          for (std::size_t k = 0; k < d; ++k) in[k] += grad_in[k];
        }
      }
    }
  }

  EmbeddingTable table{Tensor({v, d})};
  for (std::size_t i = 0; i < table.matrix.size(); ++i) table.matrix[i] = input[i] + output[i];
  table.matrix.check_finite("pretrain_embeddings");
  return table;
}

std::vector<double> average_embedding(const Tensor& table, std::span<const Id> ids) {
  if (ids.empty()) throw InvalidArgument("average_embedding: empty id sequence");
  std::vector<double> mean(table.cols(), 0.0);
  for (Id id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw InvalidArgument("average_embedding: id " + std::to_string(id) + " out of range");
    }
    const auto row = table.row(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  for (double& x : mean) x /= static_cast<double>(ids.size());
  return mean;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("cosine_similarity: dimensions " + std::to_string(u.size()) + " and " +
                            std::to_string(v.size()));
  }
  if (u.empty()) throw InvalidArgument("cosine_similarity: empty vectors");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

}  // namespace styledverse
