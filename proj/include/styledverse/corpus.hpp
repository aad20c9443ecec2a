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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace styledverse {

using Id = std::int32_t;
using IdSeq = std::vector<Id>;

/// Fixed ids of the special tokens. Real characters start at kFirstCharId.
namespace special {
inline constexpr Id kPad = 0;
inline constexpr Id kBos = 1;
inline constexpr Id kEos = 2;
inline constexpr Id kSep = 3;
inline constexpr Id kUnk = 4;
}  // namespace special
inline constexpr Id kFirstCharId = 5;

struct Poem {
  std::string title;
  std::vector<std::u32string> lines;

  /// All characters of all lines, in reading order.
  std::u32string characters() const;
};

/// Bijection between characters and dense integer ids. Ids 0-4 are the
/// special tokens; characters follow in order of first occurrence.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from characters in the given order, skipping duplicates.
  static Vocabulary from_chars(std::u32string_view chars);

  std::size_t size() const { return kFirstCharId + chars_.size(); }

  /// Id of `c`, or UNK when the character is unknown.
  Id id(char32_t c) const;
  bool contains(char32_t c) const { return index_.contains(c); }

  /// Character for a non-special id. Throws InvalidArgument otherwise.
  char32_t character(Id id) const;
  bool is_special(Id id) const { return id >= 0 && id < kFirstCharId; }

  IdSeq encode(std::u32string_view text) const;
  /// Special ids are dropped from the decoded text.
  std::u32string decode(const IdSeq& ids) const;

  /// Non-special characters in id order.
  const std::u32string& chars() const { return chars_; }

  bool operator==(const Vocabulary& other) const { return chars_ == other.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, Id> index_;
};

struct Quatrain {
  std::vector<std::u32string> lines;  // exactly 4
  std::size_t line_len = 0;           // 5 or 7

  Poem to_poem(std::string title = {}) const { return Poem{std::move(title), lines}; }
};

class QuatrainError : public std::runtime_error {
 public:
  enum class Kind { WrongLineCount, InconsistentLineLength, UnsupportedLineLength };
  QuatrainError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct TrainingPair {
  IdSeq keywords;  // encoder input
  IdSeq target;    // BOS-prefixed, EOS-terminated
};

enum class CorpusFormat { Jsonl, Plain };
enum class TrainingUnit { Line, Poem };

struct PairConfig {
  TrainingUnit unit = TrainingUnit::Line;
  std::size_t k_min = 1;
  std::size_t k_max = 3;
  std::size_t samples_per_unit = 1;
};

/// Reads a corpus. JSONL records carry "title" (optional) and "lines"; plain
/// text holds one poem per non-blank line, split on '。' and '，'.
std::vector<Poem> load_corpus(const std::filesystem::path& path, CorpusFormat format);
std::vector<Poem> parse_corpus(std::string_view text, CorpusFormat format);

void save_corpus_jsonl(const std::filesystem::path& path, const std::vector<Poem>& poems);

Vocabulary build_vocabulary(const std::vector<Poem>& poems);

Quatrain parse_quatrain(const Poem& poem);

/// Samples k distinct positions of `line` (k clamped to the line length) and
/// returns the ids at those positions in their original order.
IdSeq sample_keywords(const IdSeq& line, std::size_t k, std::uint64_t seed);

class Rng;
IdSeq sample_keywords(const IdSeq& line, std::size_t k, Rng& rng);

std::vector<TrainingPair> make_training_pairs(const std::vector<Poem>& poems, const Vocabulary& vocab,
                                              const PairConfig& cfg, std::uint64_t seed);

/// Target sequence of a whole poem: BOS, lines joined by SEP, EOS.
IdSeq poem_target(const Poem& poem, const Vocabulary& vocab);

struct CorpusSplit {
  std::vector<Poem> train;
  std::vector<Poem> validation;
};

/// Seeded shuffle, then the first floor(val_fraction * n) poems go to
/// validation. Both halves keep the input's relative order.
CorpusSplit split_corpus(const std::vector<Poem>& poems, double val_fraction, std::uint64_t seed);

}  // namespace styledverse
