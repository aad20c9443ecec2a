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

#include "styledverse/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/utf8.hpp"

namespace styledverse {

namespace {

constexpr char32_t kFullStop = U'。';
constexpr char32_t kComma = U'，';

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::u32string decode_field(std::string_view bytes, std::size_t line_no) {
  try {
    return utf8::decode(bytes);
  } catch (const InvalidArgument& e) {
    throw CorpusError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
  }
}

Poem parse_jsonl_record(std::string_view text, std::size_t line_no) {
  const std::string where = "record " + std::to_string(line_no);
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError("malformed " + where + ": " + e.what());
  }
  if (!record.is_object()) throw CorpusError("malformed " + where + ": expected a JSON object");

  Poem poem;
  if (auto it = record.find("title"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("malformed " + where + ": \"title\" must be a string");
    poem.title = it->get<std::string>();
  }
  const auto lines = record.find("lines");
  if (lines == record.end() || !lines->is_array()) {
    throw CorpusError("malformed " + where + ": \"lines\" must be an array of strings");
  }
  if (lines->empty()) throw CorpusError("empty poem at " + where);
  for (const auto& line : *lines) {
    if (!line.is_string()) throw CorpusError("malformed " + where + ": \"lines\" must be an array of strings");
    auto chars = decode_field(line.get_ref<const std::string&>(), line_no);
    if (chars.empty()) throw CorpusError("empty line in " + where);
    poem.lines.push_back(std::move(chars));
  }
  return poem;
}

Poem parse_plain_record(std::string_view text, std::size_t line_no) {
  Poem poem;
  std::u32string current;
  for (char32_t c : decode_field(text, line_no)) {
    if (c == kFullStop || c == kComma) {
      if (!current.empty()) poem.lines.push_back(std::move(current));
      current.clear();
    } else if (c != U' ' && c != U'\t' && c != U'　') {
      current.push_back(c);
    }
  }
  if (!current.empty()) poem.lines.push_back(std::move(current));
  if (poem.lines.empty()) throw CorpusError("empty poem at record " + std::to_string(line_no));
  return poem;
}

}  // namespace

std::u32string Poem::characters() const {
  std::u32string all;
  for (const auto& line : lines) all += line;
  return all;
}

Vocabulary Vocabulary::from_chars(std::u32string_view chars) {
  Vocabulary vocab;
  for (char32_t c : chars) {
    if (vocab.index_.contains(c)) continue;
    vocab.index_.emplace(c, static_cast<Id>(kFirstCharId + vocab.chars_.size()));
    vocab.chars_.push_back(c);
  }
  return vocab;
}

Id Vocabulary::id(char32_t c) const {
  const auto it = index_.find(c);
  return it == index_.end() ? special::kUnk : it->second;
}

char32_t Vocabulary::character(Id id) const {
  if (id < kFirstCharId || static_cast<std::size_t>(id) >= size()) {
    throw InvalidArgument("id " + std::to_string(id) + " is not a character id");
  }
  return chars_[static_cast<std::size_t>(id - kFirstCharId)];
}

IdSeq Vocabulary::encode(std::u32string_view text) const {
  IdSeq ids;
  ids.reserve(text.size());
  for (char32_t c : text) ids.push_back(id(c));
  return ids;
}

std::u32string Vocabulary::decode(const IdSeq& ids) const {
  std::u32string text;
  for (Id id : ids) {
    if (!is_special(id)) text.push_back(character(id));
  }
  return text;
}

std::vector<Poem> parse_corpus(std::string_view text, CorpusFormat format) {
  std::vector<Poem> poems;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    poems.push_back(format == CorpusFormat::Jsonl ? parse_jsonl_record(line, line_no)
                                                  : parse_plain_record(line, line_no));
  }
  return poems;
}

std::vector<Poem> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw CorpusError("read failure on " + path.string());
  return parse_corpus(buffer.str(), format);
}

void save_corpus_jsonl(const std::filesystem::path& path, const std::vector<Poem>& poems) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus " + path.string());
  for (const auto& poem : poems) {
    nlohmann::json record;
    record["title"] = poem.title;
    record["lines"] = nlohmann::json::array();
    for (const auto& line : poem.lines) record["lines"].push_back(utf8::encode(line));
    out << record.dump() << '\n';
  }
}

Vocabulary build_vocabulary(const std::vector<Poem>& poems) {
  std::u32string chars;
  for (const auto& poem : poems) chars += poem.characters();
  return Vocabulary::from_chars(chars);
}

Quatrain parse_quatrain(const Poem& poem) {
  using Kind = QuatrainError::Kind;
  if (poem.lines.size() != 4) {
    throw QuatrainError(Kind::WrongLineCount,
                        "quatrain needs 4 lines, got " + std::to_string(poem.lines.size()));
  }
  const std::size_t len = poem.lines.front().size();
  for (const auto& line : poem.lines) {
    if (line.size() != len) {
      throw QuatrainError(Kind::InconsistentLineLength, "quatrain lines differ in length");
    }
  }
  if (len != 5 && len != 7) {
    throw QuatrainError(Kind::UnsupportedLineLength,
                        "quatrain lines must have 5 or 7 characters, got " + std::to_string(len));
  }
  return Quatrain{poem.lines, len};
}

IdSeq sample_keywords(const IdSeq& line, std::size_t k, Rng& rng) {
  if (k == 0) throw InvalidArgument("sample_keywords: k must be at least 1");
  if (line.empty()) throw InvalidArgument("sample_keywords: empty line");
  k = std::min(k, line.size());

  // Partial Fisher-Yates over positions, then restore reading order.
  std::vector<std::size_t> positions(line.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(positions.size() - i);
    std::swap(positions[i], positions[j]);
  }
  positions.resize(k);
  std::sort(positions.begin(), positions.end());

  IdSeq out;
  out.reserve(k);
  for (std::size_t p : positions) out.push_back(line[p]);
  return out;
}

IdSeq sample_keywords(const IdSeq& line, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return sample_keywords(line, k, rng);
}

IdSeq poem_target(const Poem& poem, const Vocabulary& vocab) {
  IdSeq target{special::kBos};
  for (std::size_t i = 0; i < poem.lines.size(); ++i) {
    if (i > 0) target.push_back(special::kSep);
    const auto ids = vocab.encode(poem.lines[i]);
    target.insert(target.end(), ids.begin(), ids.end());
  }
  target.push_back(special::kEos);
  return target;
}

std::vector<TrainingPair> make_training_pairs(const std::vector<Poem>& poems, const Vocabulary& vocab,
                                              const PairConfig& cfg, std::uint64_t seed) {
  if (cfg.k_min > cfg.k_max) throw InvalidArgument("make_training_pairs: k_min > k_max");
  Rng rng(seed);
  std::vector<TrainingPair> pairs;

  const auto emit = [&](const IdSeq& source, IdSeq target) {
    for (std::size_t s = 0; s < cfg.samples_per_unit; ++s) {
      const auto k = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(cfg.k_min), static_cast<std::int64_t>(cfg.k_max)));
      pairs.push_back(TrainingPair{sample_keywords(source, k, rng), target});
    }
  };

  for (const auto& poem : poems) {
    if (cfg.unit == TrainingUnit::Line) {
      for (const auto& line : poem.lines) {
        IdSeq ids = vocab.encode(line);
        IdSeq target{special::kBos};
        target.insert(target.end(), ids.begin(), ids.end());
        target.push_back(special::kEos);
        emit(ids, std::move(target));
      }
    } else {
      emit(vocab.encode(poem.characters()), poem_target(poem, vocab));
    }
  }
  return pairs;
}

CorpusSplit split_corpus(const std::vector<Poem>& poems, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw InvalidArgument("split_corpus: val_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(poems.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(poems.size())));
  std::vector<bool> in_val(poems.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;

  CorpusSplit split;
  for (std::size_t i = 0; i < poems.size(); ++i) {
    (in_val[i] ? split.validation : split.train).push_back(poems[i]);
  }
  return split;
}

}  // namespace styledverse
