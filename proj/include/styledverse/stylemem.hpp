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

#include <filesystem>
#include <string>
#include <vector>

#include "styledverse/container.hpp"
#include "styledverse/corpus.hpp"
#include "styledverse/seq2seq.hpp"

namespace styledverse {

/// One (source, target) pair: the decoder state that predicts a character of
/// an exemplar poem, and that character's embedding.
struct MemoryElement {
  Vec source;  // d_s
  Vec target;  // d_e
  std::size_t poem_id = 0;
  std::size_t position = 0;  // j, 1-based within the poem's token sequence

  bool operator==(const MemoryElement&) const = default;
};

struct MemoryPoem {
  std::size_t poem_id = 0;
  std::size_t start = 0;   // p_k, offset of the poem's first element
  std::size_t length = 0;  // number of elements
  Vec average;             // mean embedding of the poem's characters
  std::string title;

  bool operator==(const MemoryPoem&) const = default;
};

/// Every element built from a style's exemplar poems, grouped contiguously
/// by poem in input order.
struct GlobalMemory {
  std::size_t source_dim = 0;
  std::size_t target_dim = 0;
  Precision precision = Precision::F32;
  std::vector<MemoryElement> elements;
  std::vector<MemoryPoem> poems;

  bool empty() const { return elements.empty(); }
  /// Throws DimensionMismatch if the model's decoder or embedding width differs.
  void check_compatible(const Seq2Seq& model) const;

  bool operator==(const GlobalMemory&) const = default;
};

/// Elements of the poems picked for one generation, copied into
/// contiguous storage with their source norms precomputed.
struct LocalMemory {
  std::size_t source_dim = 0;
  std::size_t target_dim = 0;
  std::vector<std::size_t> poem_ids;  // in rank order
  Tensor sources;                     // K x d_s
  Tensor targets;                     // K x d_e
  std::vector<double> source_norms;

  std::size_t size() const { return source_norms.size(); }
  bool empty() const { return source_norms.empty(); }
};

enum class ReadWeighting { Raw, Relu, Softmax };

ReadWeighting parse_read_weighting(const std::string& s);
std::string to_string(ReadWeighting w);

/// Runs the decoder over each poem (lines joined by SEP) from a zero state
/// with the encoder context held at zero. The element for token x_j stores
/// the state after consuming x_{j-1} as source and E[x_j] as target. Poems
/// with no known character are skipped with a warning.
GlobalMemory build_global_memory(const Seq2Seq& model, const std::vector<Poem>& style_poems);

/// Token sequence (without BOS) a poem contributes to memory.
IdSeq memory_tokens(const Poem& poem, const Vocabulary& vocab);

/// Keeps the n poems whose mean embedding is most cosine-similar to the mean
/// keyword embedding; ties go to the lower poem id.
LocalMemory select_local_memory(const GlobalMemory& global, const IdSeq& keyword_ids, const Tensor& embedding,
                                std::size_t n);

/// Ranking used by select_local_memory, exposed for inspection.
std::vector<std::size_t> rank_poems(const GlobalMemory& global, const IdSeq& keyword_ids, const Tensor& embedding);

/// v = sum_i w_i target_i with w_i = cos(query, source_i) under Raw weighting.
/// An empty memory reads as the zero vector.
Vec memory_read(const Vec& query, const LocalMemory& local, ReadWeighting weighting = ReadWeighting::Raw);

/// logits[c] = (s W)[c] + beta * (v . E[c]).
Vec combined_logits(const Vec& s, const Vec& v, double beta, const Tensor& projection, const Tensor& embedding);
/// softmax of combined_logits.
Vec combined_distribution(const Vec& s, const Vec& v, double beta, const Tensor& projection, const Tensor& embedding);

TensorContainer memory_container(const GlobalMemory& memory);
GlobalMemory memory_from_container(const TensorContainer& container);
void save_memory(const GlobalMemory& memory, const std::filesystem::path& path);
GlobalMemory load_memory(const std::filesystem::path& path);

}  // namespace styledverse
