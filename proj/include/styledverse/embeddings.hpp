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
#include <span>
#include <vector>

#include "styledverse/corpus.hpp"
#include "styledverse/tensor.hpp"

namespace styledverse {

/// Character embedding table E, one row per vocabulary id.
struct EmbeddingTable {
  Tensor matrix;  // |V| x dim

  std::size_t vocab_size() const { return matrix.rows(); }
  std::size_t dim() const { return matrix.cols(); }
  std::span<const double> row(Id id) const { return matrix.row(static_cast<std::size_t>(id)); }
};

EmbeddingTable init_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

struct SkipGramConfig {
  std::size_t dim = 32;
  std::size_t window = 2;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
};

/// Skip-gram with negative sampling over character windows within each line.
/// The returned rows are the sum of the input and output vectors, so two
/// characters that predict each other end up close.
EmbeddingTable pretrain_embeddings(const std::vector<Poem>& corpus, const Vocabulary& vocab,
                                   const SkipGramConfig& cfg, std::uint64_t seed);

std::vector<double> average_embedding(const Tensor& table, std::span<const Id> ids);

/// u.v / (|u| |v|); 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace styledverse
