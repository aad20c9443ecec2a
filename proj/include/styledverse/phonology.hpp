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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "styledverse/corpus.hpp"

namespace styledverse {

enum class Tone { Level, Oblique, Unknown };  // P, Z

/// Tone and rhyme-class lookup. Characters absent from the table are Unknown.
class PhonologyTable {
 public:
  void set(char32_t c, Tone tone, std::string rhyme_class = {});

  Tone tone(char32_t c) const;
  /// Empty when unknown.
  std::string rhyme_class(char32_t c) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    Tone tone = Tone::Unknown;
    std::string rhyme_class;
  };
  std::unordered_map<char32_t, Entry> entries_;
};

/// Reads `char<TAB>tone<TAB>rhyme_class` rows; tone is P or Z, rhyme class
/// may be empty or "-" for unknown. Blank lines and '#' comments are skipped.
PhonologyTable parse_phonology(std::string_view text);
PhonologyTable load_phonology(const std::filesystem::path& path);

class InvalidTemplate : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-position tone requirements: 'P', 'Z' or '*' (either).
struct ToneTemplate {
  std::vector<std::string> lines;

  /// Accepts strings such as "P Z P P P"; whitespace is ignored.
  static ToneTemplate parse(const std::vector<std::string>& lines);
  std::size_t line_len() const { return lines.empty() ? 0 : lines.front().size(); }
  bool allows(std::size_t line, std::size_t pos, Tone tone) const;
};

enum class ViolationKind { LineCount, LineLength, Rhyme, Tone };
std::string to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::size_t line = 0;
  std::size_t position = 0;
  std::string message;
};

struct ConstraintReport {
  bool line_count_ok = false;
  bool line_length_ok = false;
  std::optional<bool> rhyme_ok;  // nullopt: not checkable
  std::optional<bool> tone_ok;
  std::vector<Violation> violations;

  /// Unknown fields are excluded from the verdict.
  bool passed() const {
    return line_count_ok && line_length_ok && rhyme_ok.value_or(true) && tone_ok.value_or(true);
  }
  bool has(ViolationKind kind) const;
};

/// Structure checks always run. Rhyme compares the rhyme classes of the last
/// characters of lines 2 and 4 when both are known. Tone compares every
/// character with a known tone against the template. Throws InvalidTemplate
/// if the template does not have 4 lines of the poem's line length.
ConstraintReport check_constraints(const Poem& poem, const PhonologyTable* phonology = nullptr,
                                   const ToneTemplate* tone_template = nullptr);

}  // namespace styledverse
