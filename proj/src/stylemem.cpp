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

#include "styledverse/stylemem.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "styledverse/embeddings.hpp"
#include "styledverse/error.hpp"

namespace styledverse {

namespace {

double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

void round_if_f32(Vec& v, Precision p) {
  if (p != Precision::F32) return;
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace

ReadWeighting parse_read_weighting(const std::string& s) {
  if (s == "raw") return ReadWeighting::Raw;
  if (s == "relu") return ReadWeighting::Relu;
  if (s == "softmax") return ReadWeighting::Softmax;
  throw InvalidArgument("unknown read weighting '" + s + "' (expected raw, relu or softmax)");
}

std::string to_string(ReadWeighting w) {
  switch (w) {
    case ReadWeighting::Raw: return "raw";
    case ReadWeighting::Relu: return "relu";
    case ReadWeighting::Softmax: return "softmax";
  }
  return "raw";
}

void GlobalMemory::check_compatible(const Seq2Seq& model) const {
  if (source_dim != model.dims().dec_hidden) {
    throw DimensionMismatch("memory.source has width " + std::to_string(source_dim) + " but the model decoder has " +
                            std::to_string(model.dims().dec_hidden));
  }
  if (target_dim != model.dims().embed) {
    throw DimensionMismatch("memory.target has width " + std::to_string(target_dim) +
                            " but the model embedding has " + std::to_string(model.dims().embed));
  }
}

IdSeq memory_tokens(const Poem& poem, const Vocabulary& vocab) {
  IdSeq target = poem_target(poem, vocab);
  // Drop BOS and EOS.
  return IdSeq(target.begin() + 1, target.end() - 1);
}

GlobalMemory build_global_memory(const Seq2Seq& model, const std::vector<Poem>& style_poems) {
  GlobalMemory memory;
  memory.source_dim = model.dims().dec_hidden;
  memory.target_dim = model.dims().embed;
  memory.precision = model.precision();
  const Tensor& embedding = model.embedding();
  const Vec zero_context(2 * model.dims().enc_hidden, 0.0);

  for (std::size_t k = 0; k < style_poems.size(); ++k) {
    const IdSeq tokens = memory_tokens(style_poems[k], model.vocab());
    IdSeq known;
    for (Id id : tokens) {
      if (!model.vocab().is_special(id)) known.push_back(id);
    }
    if (known.empty()) {
      spdlog::warn("memory: poem {} has no known characters, skipped", k);
      continue;
    }

    MemoryPoem entry;
    entry.poem_id = k;
    entry.start = memory.elements.size();
    entry.length = tokens.size();
    entry.average = average_embedding(embedding, known);
    entry.title = style_poems[k].title;
    round_if_f32(entry.average, memory.precision);

    DecoderState state{Vec(model.dims().dec_hidden, 0.0), 0};
    Id previous = special::kBos;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      state = model.decoder_step(previous, state, zero_context);
      const auto row = embedding.row(static_cast<std::size_t>(tokens[j]));
      MemoryElement element{state.s, Vec(row.begin(), row.end()), k, j + 1};
      round_if_f32(element.source, memory.precision);
      round_if_f32(element.target, memory.precision);
      memory.elements.push_back(std::move(element));
      previous = tokens[j];
    }
    memory.poems.push_back(std::move(entry));
  }
  return memory;
}

std::vector<std::size_t> rank_poems(const GlobalMemory& global, const IdSeq& keyword_ids, const Tensor& embedding) {
  if (keyword_ids.empty()) throw InvalidArgument("select_local_memory: empty keywords");
  if (global.poems.empty()) return {};
  if (embedding.cols() != global.target_dim) {
    throw DimensionMismatch("selection embedding width " + std::to_string(embedding.cols()) +
                            " differs from memory.target width " + std::to_string(global.target_dim));
  }
  const Vec query = average_embedding(embedding, keyword_ids);
  std::vector<std::pair<double, std::size_t>> scored;  // (similarity, index into poems)
  scored.reserve(global.poems.size());
  for (std::size_t i = 0; i < global.poems.size(); ++i) {
    scored.emplace_back(cosine_similarity(query, global.poems[i].average), i);
  }
  std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return global.poems[a.second].poem_id < global.poems[b.second].poem_id;
  });
  std::vector<std::size_t> order;
  order.reserve(scored.size());
  for (const auto& s : scored) order.push_back(s.second);
  return order;
}

LocalMemory select_local_memory(const GlobalMemory& global, const IdSeq& keyword_ids, const Tensor& embedding,
                                std::size_t n) {
  if (n == 0) throw InvalidArgument("select_local_memory: n must be at least 1");
  LocalMemory local;
  local.source_dim = global.source_dim;
  local.target_dim = global.target_dim;
  std::vector<std::size_t> order = rank_poems(global, keyword_ids, embedding);
  order.resize(std::min(n, order.size()));

  for (std::size_t i : order) local.poem_ids.push_back(global.poems[i].poem_id);
  // Elements are laid out in memory order so the read sums in a fixed order.
  std::vector<std::size_t> chosen = order;
  std::sort(chosen.begin(), chosen.end());
  std::size_t count = 0;
  for (std::size_t i : chosen) count += global.poems[i].length;

  local.sources = Tensor({count, global.source_dim});
  local.targets = Tensor({count, global.target_dim});
  local.source_norms.reserve(count);
  std::size_t row = 0;
  for (std::size_t i : chosen) {
    const MemoryPoem& poem = global.poems[i];
    for (std::size_t e = poem.start; e < poem.start + poem.length; ++e, ++row) {
      const MemoryElement& el = global.elements[e];
      std::copy(el.source.begin(), el.source.end(), local.sources.row(row).begin());
      std::copy(el.target.begin(), el.target.end(), local.targets.row(row).begin());
      local.source_norms.push_back(norm(el.source));
    }
  }
  return local;
}

Vec memory_read(const Vec& query, const LocalMemory& local, ReadWeighting weighting) {
  Vec v(local.target_dim, 0.0);
  if (local.empty()) return v;
  if (query.size() != local.source_dim) {
    throw DimensionMismatch("memory_read: query width " + std::to_string(query.size()) + ", memory.source width " +
                            std::to_string(local.source_dim));
  }
  const double query_norm = norm(query);
  std::vector<double> weights(local.size(), 0.0);
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (query_norm < 1e-12 || local.source_norms[i] < 1e-12) continue;
    const auto src = local.sources.row(i);
    double dot = 0.0;
    for (std::size_t k = 0; k < query.size(); ++k) dot += query[k] * src[k];
    weights[i] = dot / (query_norm * local.source_norms[i]);
  }
  if (weighting == ReadWeighting::Relu) {
    for (double& w : weights) w = std::max(0.0, w);
  } else if (weighting == ReadWeighting::Softmax) {
    const double peak = *std::max_element(weights.begin(), weights.end());
    double total = 0.0;
    for (double& w : weights) total += (w = std::exp(w - peak));
    for (double& w : weights) w /= total;
  }
  for (std::size_t i = 0; i < local.size(); ++i) {
    const auto tgt = local.targets.row(i);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += weights[i] * tgt[k];
  }
  return v;
}

Vec combined_logits(const Vec& s, const Vec& v, double beta, const Tensor& projection, const Tensor& embedding) {
  if (beta < 0.0) throw InvalidArgument("combined_logits: beta must be non-negative");
  if (s.size() != projection.rows()) throw DimensionMismatch("combined_logits: state width differs from W rows");
  if (v.size() != embedding.cols()) throw DimensionMismatch("combined_logits: memory read width differs from E");
  if (projection.cols() != embedding.rows()) throw DimensionMismatch("combined_logits: W and E disagree on |V|");
  Vec logits(projection.cols(), 0.0);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto row = projection.row(p);
    for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += s[p] * row[c];
  }
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const auto e = embedding.row(c);
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) dot += v[k] * e[k];
    logits[c] += beta * dot;
  }
  return logits;
}

Vec combined_distribution(const Vec& s, const Vec& v, double beta, const Tensor& projection, const Tensor& embedding) {
  Vec z = combined_logits(s, v, beta, projection, embedding);
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& x : z) total += (x = std::exp(x - peak));
  for (double& x : z) x /= total;
  return z;
}

TensorContainer memory_container(const GlobalMemory& memory) {
  TensorContainer c;
  nlohmann::json poems = nlohmann::json::array();
  for (const auto& p : memory.poems) {
    poems.push_back({{"poem_id", p.poem_id}, {"start", p.start}, {"length", p.length}, {"title", p.title}});
  }
  c.metadata = {{"kind", "memory"},
                {"source_dim", memory.source_dim},
                {"target_dim", memory.target_dim},
                {"poems", poems}};

  const std::size_t k = memory.elements.size();
  Tensor sources({k, memory.source_dim});
  Tensor targets({k, memory.target_dim});
  for (std::size_t i = 0; i < k; ++i) {
    std::copy(memory.elements[i].source.begin(), memory.elements[i].source.end(), sources.row(i).begin());
    std::copy(memory.elements[i].target.begin(), memory.elements[i].target.end(), targets.row(i).begin());
  }
  Tensor averages({memory.poems.size(), memory.target_dim});
  for (std::size_t i = 0; i < memory.poems.size(); ++i) {
    std::copy(memory.poems[i].average.begin(), memory.poems[i].average.end(), averages.row(i).begin());
  }
  c.add("memory.source", std::move(sources), memory.precision);
  c.add("memory.target", std::move(targets), memory.precision);
  c.add("memory.poem_average", std::move(averages), memory.precision);
  return c;
}

GlobalMemory memory_from_container(const TensorContainer& c) {
  const auto bad = [](const std::string& what) {
    return ContainerError(ContainerError::Kind::Malformed, "bad memory file: " + what);
  };
  if (c.metadata.value("kind", std::string{}) != "memory") throw bad("container is not a memory file");

  GlobalMemory memory;
  try {
    memory.source_dim = c.metadata.at("source_dim").get<std::size_t>();
    memory.target_dim = c.metadata.at("target_dim").get<std::size_t>();
    for (const auto& p : c.metadata.at("poems")) {
      memory.poems.push_back(MemoryPoem{p.at("poem_id").get<std::size_t>(), p.at("start").get<std::size_t>(),
                                        p.at("length").get<std::size_t>(), {}, p.value("title", std::string{})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  }

  const Tensor& sources = c.get("memory.source");
  const Tensor& targets = c.get("memory.target");
  const Tensor& averages = c.get("memory.poem_average");
  const std::size_t k = sources.rows();
  if (sources.rank() != 2 || sources.cols() != memory.source_dim) throw bad("memory.source shape disagrees with manifest");
  if (targets.rank() != 2 || targets.rows() != k || targets.cols() != memory.target_dim) {
    throw bad("memory.target shape disagrees with memory.source");
  }
  if (averages.rank() != 2 || averages.rows() != memory.poems.size() || averages.cols() != memory.target_dim) {
    throw bad("memory.poem_average shape disagrees with manifest");
  }
  memory.precision = Precision::F64;
  for (const auto& e : c.entries()) {
    if (e.name == "memory.source") memory.precision = e.dtype;
  }

  std::size_t expected_start = 0;
  for (std::size_t i = 0; i < memory.poems.size(); ++i) {
    MemoryPoem& p = memory.poems[i];
    if (p.start != expected_start) throw bad("poem ranges are not contiguous");
    expected_start += p.length;
    const auto avg = averages.row(i);
    p.average.assign(avg.begin(), avg.end());
    for (std::size_t j = 0; j < p.length; ++j) {
      const std::size_t e = p.start + j;
      if (e >= k) throw bad("poem ranges run past the element table");
      const auto s = sources.row(e);
      const auto t = targets.row(e);
      memory.elements.push_back(MemoryElement{Vec(s.begin(), s.end()), Vec(t.begin(), t.end()), p.poem_id, j + 1});
    }
  }
  if (expected_start != k) throw bad("element count disagrees with poem manifest");
  return memory;
}

void save_memory(const GlobalMemory& memory, const std::filesystem::path& path) {
  save_container(path, memory_container(memory));
}

GlobalMemory load_memory(const std::filesystem::path& path) { return memory_from_container(load_container(path)); }

}  // namespace styledverse
