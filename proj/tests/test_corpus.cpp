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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "styledverse/corpus.hpp"
#include "styledverse/error.hpp"
#include "styledverse/rng.hpp"
#include "styledverse/utf8.hpp"
#include "support.hpp"

using namespace styledverse;
using namespace styledverse::testing;

TEST_CASE("utf8 round trip and rejection") {
  const std::string text = "红豆生南国 abc 𠀀";
  CHECK(utf8::encode(utf8::decode(text)) == text);
  CHECK(utf8::decode("红豆").size() == 2);
  CHECK_THROWS_AS(utf8::decode("\xE7\xBA"), InvalidArgument);
  CHECK_THROWS_AS(utf8::decode("\xFF"), InvalidArgument);
  CHECK_THROWS_AS(utf8::decode("\xC0\x80"), InvalidArgument);
}

TEST_CASE("jsonl record loads as a poem") {
  const auto poems = parse_corpus(
      R"({"title":"相思","lines":["红豆生南国","春来发几枝","愿君多采撷","此物最相思"]})", CorpusFormat::Jsonl);
  REQUIRE(poems.size() == 1);
  CHECK(poems[0].title == "相思");
  REQUIRE(poems[0].lines.size() == 4);
  for (const auto& line : poems[0].lines) CHECK(line.size() == 5);
  CHECK(poems[0].lines[0] == U"红豆生南国");
}

TEST_CASE("empty corpus file is an empty list") {
  TempDir dir;
  write_file(dir / "empty.jsonl", "");
  CHECK(load_corpus(dir / "empty.jsonl", CorpusFormat::Jsonl).empty());
  CHECK(parse_corpus("", CorpusFormat::Plain).empty());
}

TEST_CASE("corpus errors name the record") {
  CHECK_THROWS_WITH_AS(parse_corpus(R"({"lines":[]})", CorpusFormat::Jsonl), "empty poem at record 1", CorpusError);
  CHECK_THROWS_WITH_AS(parse_corpus("{\"lines\":[\"ab\"]}\n{oops", CorpusFormat::Jsonl),
                       doctest::Contains("record 2"), CorpusError);
  CHECK_THROWS_AS(parse_corpus(R"({"lines":["ab",""]})", CorpusFormat::Jsonl), CorpusError);
  TempDir dir;
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", CorpusFormat::Jsonl), CorpusError);
}

TEST_CASE("plain format splits on full-width punctuation") {
  const auto poems = parse_corpus("红豆生南国，春来发几枝。愿君多采撷，此物最相思。\n\n白日依山尽，黄河入海流。",
                                  CorpusFormat::Plain);
  REQUIRE(poems.size() == 2);
  CHECK(poems[0].lines == sample_poem().lines);
  CHECK(poems[1].lines.size() == 2);
}

TEST_CASE("jsonl save and load round trip") {
  TempDir dir;
  const std::vector<Poem> poems{sample_poem(), poem({U"白日依山尽"})};
  save_corpus_jsonl(dir / "c.jsonl", poems);
  const auto loaded = load_corpus(dir / "c.jsonl", CorpusFormat::Jsonl);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].title == "相思");
  CHECK(loaded[0].lines == poems[0].lines);
  CHECK(loaded[1].lines == poems[1].lines);
}

TEST_CASE("build_vocabulary sizes and order") {
  CHECK(build_vocabulary({poem({U"甲乙"}), poem({U"乙甲"})}).size() == 7);
  CHECK(build_vocabulary({}).size() == 5);
  const auto vocab = build_vocabulary({poem({U"甲丙"}), poem({U"甲"}), poem({U"乙甲"})});
  CHECK(vocab.chars() == U"甲丙乙");
  CHECK(vocab.id(U'甲') == kFirstCharId);
  CHECK(vocab.id(U'丁') == special::kUnk);
}

TEST_CASE("vocabulary is a bijection and decode inverts encode") {
  const auto vocab = build_vocabulary({sample_poem()});
  for (std::size_t i = 0; i < vocab.chars().size(); ++i) {
    const Id id = static_cast<Id>(kFirstCharId + i);
    CHECK(vocab.id(vocab.character(id)) == id);
  }
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::u32string s;
    const auto len = rng.between(0, 12);
    for (int i = 0; i < len; ++i) s.push_back(vocab.chars()[rng.below(vocab.chars().size())]);
    CHECK(vocab.decode(vocab.encode(s)) == s);
  }
  CHECK(vocab.encode(U"红X") == IdSeq{vocab.id(U'红'), special::kUnk});
  CHECK_THROWS_AS(vocab.character(special::kBos), InvalidArgument);
}

TEST_CASE("parse_quatrain accepts exactly 4 uniform lines of 5 or 7") {
  CHECK(parse_quatrain(sample_poem()).line_len == 5);
  const auto kind_of = [](const Poem& p) {
    try {
      parse_quatrain(p);
    } catch (const QuatrainError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  CHECK(kind_of(poem({U"红豆生南国", U"春来发几枝", U"愿君多采撷"})) ==
        static_cast<int>(QuatrainError::Kind::WrongLineCount));
  CHECK(kind_of(poem({U"红豆生南国", U"春来发几枝", U"愿君多采撷此物", U"此物最相思"})) ==
        static_cast<int>(QuatrainError::Kind::InconsistentLineLength));

  // Exhaustive grid over line counts and uniform lengths.
  for (std::size_t count = 0; count <= 6; ++count) {
    for (std::size_t len = 1; len <= 9; ++len) {
      Poem p;
      for (std::size_t l = 0; l < count; ++l) p.lines.push_back(std::u32string(len, U'字'));
      const bool valid = count == 4 && (len == 5 || len == 7);
      CHECK(valid == (kind_of(p) == -1));
      if (count == 4 && !valid) CHECK(kind_of(p) == static_cast<int>(QuatrainError::Kind::UnsupportedLineLength));
    }
  }
}

TEST_CASE("sample_keywords") {
  const IdSeq line{10, 11, 12, 13, 14};
  CHECK(sample_keywords(line, 5, 1) == line);
  CHECK(sample_keywords(line, 10, 1) == line);
  CHECK_THROWS_AS(sample_keywords(line, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_keywords(IdSeq{}, 1, 1), InvalidArgument);

  // Golden value recorded from a run with seed 7.
  const IdSeq golden = sample_keywords(line, 2, 7);
  CHECK(golden == IdSeq{10, 13});
  for (int i = 0; i < 5; ++i) CHECK(sample_keywords(line, 2, 7) == golden);

  // Output is always a subsequence of the line and has min(k, len) entries.
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    IdSeq src;
    const auto len = static_cast<std::size_t>(rng.between(1, 9));
    for (std::size_t i = 0; i < len; ++i) src.push_back(static_cast<Id>(rng.between(5, 40)));
    const auto k = static_cast<std::size_t>(rng.between(1, 12));
    const auto out = sample_keywords(src, k, rng.next());
    CHECK(out.size() == std::min(k, len));
    std::size_t pos = 0;
    for (Id id : out) {
      while (pos < src.size() && src[pos] != id) ++pos;
      CHECK(pos < src.size());
      ++pos;
    }
  }
}

TEST_CASE("sample_keywords is uniform over position subsets") {
  const IdSeq line{5, 6, 7, 8};
  std::map<IdSeq, int> counts;
  const int trials = 6000;
  for (int s = 0; s < trials; ++s) counts[sample_keywords(line, 2, static_cast<std::uint64_t>(s))]++;
  CHECK(counts.size() == 6);
  for (const auto& [subset, n] : counts) CHECK(std::abs(n - trials / 6) < 150);
}

TEST_CASE("make_training_pairs") {
  const auto vocab = build_vocabulary({sample_poem()});
  const auto lines = make_training_pairs({sample_poem()}, vocab, PairConfig{}, 5);
  REQUIRE(lines.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& pair = lines[i];
    CHECK(pair.target.front() == special::kBos);
    CHECK(pair.target.back() == special::kEos);
    CHECK(pair.target.size() == 7);
    CHECK(pair.keywords.size() >= 1);
    CHECK(pair.keywords.size() <= 3);
    CHECK(pair.keywords.size() <= pair.target.size());
  }

  PairConfig whole;
  whole.unit = TrainingUnit::Poem;
  const auto poems = make_training_pairs({sample_poem()}, vocab, whole, 5);
  REQUIRE(poems.size() == 1);
  CHECK(poems[0].target.size() == 25);
  CHECK(std::count(poems[0].target.begin(), poems[0].target.end(), special::kSep) == 3);

  PairConfig many;
  many.samples_per_unit = 3;
  many.k_min = 2;
  many.k_max = 2;
  const auto a = make_training_pairs({sample_poem()}, vocab, many, 9);
  const auto b = make_training_pairs({sample_poem()}, vocab, many, 9);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].keywords == b[i].keywords);
    CHECK(a[i].target == b[i].target);
    CHECK(a[i].keywords.size() == 2);
  }
  PairConfig bad;
  bad.k_min = 3;
  bad.k_max = 2;
  CHECK_THROWS_AS(make_training_pairs({sample_poem()}, vocab, bad, 1), InvalidArgument);
}

TEST_CASE("split_corpus partitions deterministically") {
  const auto vocab = cjk_vocab(20);
  const auto poems = random_quatrains(vocab, 100, 4);
  for (std::size_t i = 0; i < poems.size(); ++i) const_cast<Poem&>(poems[i]).title = std::to_string(i);

  const auto split = split_corpus(poems, 0.1, 3);
  CHECK(split.train.size() == 90);
  CHECK(split.validation.size() == 10);
  std::set<std::string> seen;
  for (const auto& p : split.train) seen.insert(p.title);
  for (const auto& p : split.validation) CHECK(seen.insert(p.title).second);
  CHECK(seen.size() == 100);

  const auto again = split_corpus(poems, 0.1, 3);
  for (std::size_t i = 0; i < 10; ++i) CHECK(again.validation[i].title == split.validation[i].title);

  CHECK(split_corpus(poems, 0.0, 3).train.size() == 100);
  CHECK(split_corpus(poems, 0.37, 3).validation.size() == 37);
  CHECK_THROWS_AS(split_corpus(poems, 1.0, 3), InvalidArgument);
}
