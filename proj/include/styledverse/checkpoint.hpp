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

#include <json.hpp>

#include "styledverse/container.hpp"
#include "styledverse/corpus.hpp"
#include "styledverse/embeddings.hpp"
#include "styledverse/seq2seq.hpp"

namespace styledverse {

/// Model checkpoint: every parameter tensor by name, the vocabulary and the
/// dims in metadata, plus a free-form echo of the run configuration.
TensorContainer checkpoint_container(const Seq2Seq& model, const nlohmann::json& config_echo = {});
Seq2Seq model_from_container(const TensorContainer& container);

void save_checkpoint(const std::filesystem::path& path, const Seq2Seq& model, const nlohmann::json& config_echo = {});
Seq2Seq load_checkpoint(const std::filesystem::path& path);

struct StoredEmbeddings {
  Vocabulary vocab;
  EmbeddingTable table;
};

void save_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, const EmbeddingTable& table,
                     Precision dtype);
StoredEmbeddings load_embeddings(const std::filesystem::path& path);

/// Copies rows of `source` into a table indexed by `target_vocab`, matching
/// characters by value. Rows with no counterpart keep their current values.
void transfer_embeddings(const StoredEmbeddings& source, const Vocabulary& target_vocab, Tensor& target);

}  // namespace styledverse
