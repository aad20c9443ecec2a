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
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "styledverse/corpus.hpp"
#include "styledverse/seq2seq.hpp"
#include "styledverse/utf8.hpp"

namespace styledverse::testing {

inline Poem poem(std::vector<std::u32string> lines, std::string title = {}) {
  return Poem{std::move(title), std::move(lines)};
}

inline Poem sample_poem() { return poem({U"红豆生南国", U"春来发几枝", U"愿君多采撷", U"此物最相思"}, "相思"); }

/// Vocabulary of `n` distinct CJK characters starting at U+4E00.
inline Vocabulary cjk_vocab(std::size_t n, char32_t first = 0x4E00) {
  std::u32string chars;
  for (std::size_t i = 0; i < n; ++i) chars.push_back(first + static_cast<char32_t>(i));
  return Vocabulary::from_chars(chars);
}

/// A model over |V| = chars + 5 with small dims, stored in 64-bit.
inline Seq2Seq tiny_model(std::size_t chars, std::uint64_t seed, ModelDims dims = {0, 8, 8, 16, 8}) {
  return Seq2Seq::initialize(cjk_vocab(chars), dims, seed, Precision::F64);
}

/// Random 5-char quatrains over the model's characters.
inline std::vector<Poem> random_quatrains(const Vocabulary& vocab, std::size_t count, std::uint64_t seed,
                                          std::size_t line_len = 5) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.chars().size() - 1);
  std::vector<Poem> out;
  for (std::size_t p = 0; p < count; ++p) {
    Poem q;
    for (int l = 0; l < 4; ++l) {
      std::u32string line;
      for (std::size_t i = 0; i < line_len; ++i) line.push_back(vocab.chars()[pick(gen)]);
      q.lines.push_back(line);
    }
    out.push_back(q);
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("styledverse_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace styledverse::testing
