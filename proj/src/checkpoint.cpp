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

#include "styledverse/checkpoint.hpp"

#include "styledverse/error.hpp"
#include "styledverse/utf8.hpp"

namespace styledverse {

namespace {

std::string require_kind(const TensorContainer& c, const std::string& kind) {
  const auto it = c.metadata.find("kind");
  if (it == c.metadata.end() || !it->is_string() || it->get<std::string>() != kind) {
    throw ContainerError(ContainerError::Kind::Malformed, "container is not a " + kind + " file");
  }
  return kind;
}

Vocabulary vocab_from_metadata(const nlohmann::json& meta) {
  try {
    return Vocabulary::from_chars(utf8::decode(meta.at("vocabulary").get<std::string>()));
  } catch (const std::exception& e) {
    throw ContainerError(ContainerError::Kind::Malformed, std::string("bad vocabulary manifest: ") + e.what());
  }
}

}  // namespace

TensorContainer checkpoint_container(const Seq2Seq& model, const nlohmann::json& config_echo) {
  TensorContainer c;
  const auto& d = model.dims();
  c.metadata = {{"kind", "checkpoint"},
                {"vocabulary", utf8::encode(model.vocab().chars())},
                {"precision", to_string(model.precision())},
                {"dims",
                 {{"vocab", d.vocab},
                  {"embed", d.embed},
                  {"enc_hidden", d.enc_hidden},
                  {"dec_hidden", d.dec_hidden},
                  {"attention", d.attention}}}};
  if (!config_echo.is_null()) c.metadata["config"] = config_echo;
  for (const auto& p : model.params()) c.add(p.name, p.value, model.precision());
  return c;
}

Seq2Seq model_from_container(const TensorContainer& c) {
  require_kind(c, "checkpoint");
  ModelDims dims;
  Precision precision;
  try {
    const auto& d = c.metadata.at("dims");
    dims.vocab = d.at("vocab").get<std::size_t>();
    dims.embed = d.at("embed").get<std::size_t>();
    dims.enc_hidden = d.at("enc_hidden").get<std::size_t>();
    dims.dec_hidden = d.at("dec_hidden").get<std::size_t>();
    dims.attention = d.at("attention").get<std::size_t>();
    precision = parse_precision(c.metadata.at("precision").get<std::string>());
  } catch (const std::exception& e) {
    throw ContainerError(ContainerError::Kind::Malformed, std::string("bad checkpoint metadata: ") + e.what());
  }
  ParameterStore params;
  for (const auto& e : c.entries()) params.add(e.name, e.value);
  return Seq2Seq(vocab_from_metadata(c.metadata), dims, std::move(params), precision);
}

void save_checkpoint(const std::filesystem::path& path, const Seq2Seq& model, const nlohmann::json& config_echo) {
  save_container(path, checkpoint_container(model, config_echo));
}

Seq2Seq load_checkpoint(const std::filesystem::path& path) { return model_from_container(load_container(path)); }

void save_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, const EmbeddingTable& table,
                     Precision dtype) {
  if (table.vocab_size() != vocab.size()) throw DimensionMismatch("embedding rows do not match vocabulary size");
  TensorContainer c;
  c.metadata = {{"kind", "embeddings"}, {"vocabulary", utf8::encode(vocab.chars())}, {"dim", table.dim()}};
  c.add("embedding", table.matrix, dtype);
  save_container(path, c);
}

StoredEmbeddings load_embeddings(const std::filesystem::path& path) {
  const TensorContainer c = load_container(path);
  require_kind(c, "embeddings");
  StoredEmbeddings out{vocab_from_metadata(c.metadata), EmbeddingTable{c.get("embedding")}};
  if (out.table.matrix.rank() != 2 || out.table.vocab_size() != out.vocab.size()) {
    throw DimensionMismatch("tensor embedding does not match its vocabulary manifest");
  }
  return out;
}

void transfer_embeddings(const StoredEmbeddings& source, const Vocabulary& target_vocab, Tensor& target) {
  if (target.cols() != source.table.dim()) {
    throw DimensionMismatch("pretrained embeddings have dim " + std::to_string(source.table.dim()) +
                            ", model expects " + std::to_string(target.cols()));
  }
  const auto copy_row = [&](Id from, Id to) {
    const auto src = source.table.row(from);
    auto dst = target.row(static_cast<std::size_t>(to));
    std::copy(src.begin(), src.end(), dst.begin());
  };
  for (Id s = 0; s < kFirstCharId; ++s) copy_row(s, s);
  for (char32_t c : target_vocab.chars()) {
    if (source.vocab.contains(c)) copy_row(source.vocab.id(c), target_vocab.id(c));
  }
}

}  // namespace styledverse
