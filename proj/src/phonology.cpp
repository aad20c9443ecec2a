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

#include "styledverse/phonology.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "styledverse/error.hpp"
#include "styledverse/utf8.hpp"

namespace styledverse {

void PhonologyTable::set(char32_t c, Tone tone, std::string rhyme_class) {
  entries_[c] = Entry{tone, std::move(rhyme_class)};
}

Tone PhonologyTable::tone(char32_t c) const {
  const auto it = entries_.find(c);
  return it == entries_.end() ? Tone::Unknown : it->second.tone;
}

std::string PhonologyTable::rhyme_class(char32_t c) const {
  const auto it = entries_.find(c);
  return it == entries_.end() ? std::string{} : it->second.rhyme_class;
}

PhonologyTable parse_phonology(std::string_view text) {
  PhonologyTable table;
  std::istringstream in{std::string(text)};
  std::string row;
  std::size_t line_no = 0;
  while (std::getline(in, row)) {
    ++line_no;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty() || row.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = row.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(row.substr(start, tab - start));
    }
    fields.push_back(row.substr(start));
    const std::string where = "phonology line " + std::to_string(line_no);
    if (fields.size() < 2 || fields.size() > 3) throw InvalidArgument(where + ": expected 3 tab-separated columns");
    const std::u32string ch = utf8::decode(fields[0]);
    if (ch.size() != 1) throw InvalidArgument(where + ": first column must be one character");
    Tone tone;
    if (fields[1] == "P") {
      tone = Tone::Level;
    } else if (fields[1] == "Z") {
      tone = Tone::Oblique;
    } else {
      throw InvalidArgument(where + ": tone must be P or Z");
    }
    std::string rhyme = fields.size() == 3 ? fields[2] : std::string{};
    if (rhyme == "-") rhyme.clear();
    table.set(ch.front(), tone, std::move(rhyme));
  }
  return table;
}

PhonologyTable load_phonology(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open phonology table " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_phonology(buffer.str());
}

ToneTemplate ToneTemplate::parse(const std::vector<std::string>& lines) {
  ToneTemplate t;
  for (const auto& line : lines) {
    std::string compact;
    for (char c : line) {
      if (c == ' ' || c == '\t') continue;
      if (c != 'P' && c != 'Z' && c != '*') throw InvalidTemplate("tone template symbols must be P, Z or *");
      compact.push_back(c);
    }
    t.lines.push_back(std::move(compact));
  }
  return t;
}

bool ToneTemplate::allows(std::size_t line, std::size_t pos, Tone tone) const {
  if (tone == Tone::Unknown || line >= lines.size() || pos >= lines[line].size()) return true;
  const char want = lines[line][pos];
  return want == '*' || (want == 'P') == (tone == Tone::Level);
}

std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::LineCount: return "line_count";
    case ViolationKind::LineLength: return "line_length";
    case ViolationKind::Rhyme: return "rhyme";
    case ViolationKind::Tone: return "tone";
  }
  return "?";
}

bool ConstraintReport::has(ViolationKind kind) const {
  for (const auto& v : violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

ConstraintReport check_constraints(const Poem& poem, const PhonologyTable* phonology,
                                   const ToneTemplate* tone_template) {
  ConstraintReport report;
  const auto& lines = poem.lines;

  report.line_count_ok = lines.size() == 4;
  if (!report.line_count_ok) {
    report.violations.push_back({ViolationKind::LineCount, 0, 0,
                                 "expected 4 lines, found " + std::to_string(lines.size())});
  }

  // The nominal length is the most common line length (earliest on ties).
  std::size_t nominal = 0;
  {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& l : lines) ++counts[l.size()];
    std::size_t best = 0;
    for (const auto& l : lines) {
      if (counts[l.size()] > best) best = counts[l.size()], nominal = l.size();
    }
  }
  report.line_length_ok = !lines.empty() && (nominal == 5 || nominal == 7);
  if (!lines.empty() && nominal != 5 && nominal != 7) {
    report.violations.push_back({ViolationKind::LineLength, 0, 0,
                                 "line length " + std::to_string(nominal) + " is neither 5 nor 7"});
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].size() != nominal) {
      report.line_length_ok = false;
      report.violations.push_back({ViolationKind::LineLength, i, 0,
                                   "line " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                                       " characters, expected " + std::to_string(nominal)});
    }
  }

  if (tone_template != nullptr) {
    if (tone_template->lines.size() != 4) throw InvalidTemplate("tone template needs 4 lines");
    for (const auto& t : tone_template->lines) {
      if (t.size() != nominal) {
        throw InvalidTemplate("tone template line length " + std::to_string(t.size()) + " differs from line length " +
                              std::to_string(nominal));
      }
    }
  }

  if (phonology == nullptr) return report;

  if (lines.size() >= 4 && !lines[1].empty() && !lines[3].empty()) {
    const std::string a = phonology->rhyme_class(lines[1].back());
    const std::string b = phonology->rhyme_class(lines[3].back());
    if (!a.empty() && !b.empty()) {
      report.rhyme_ok = a == b;
      if (a != b) {
        report.violations.push_back({ViolationKind::Rhyme, 3, lines[3].size() - 1,
                                     "lines 2 and 4 end in rhyme classes " + a + " and " + b});
      }
    }
  }

  if (tone_template != nullptr) {
    bool any_checked = false;
    bool ok = true;
    for (std::size_t i = 0; i < std::min<std::size_t>(lines.size(), 4); ++i) {
      if (lines[i].size() != nominal) continue;
      for (std::size_t j = 0; j < nominal; ++j) {
        const Tone tone = phonology->tone(lines[i][j]);
        if (tone == Tone::Unknown) continue;
        any_checked = true;
        if (!tone_template->allows(i, j, tone)) {
          ok = false;
          report.violations.push_back({ViolationKind::Tone, i, j,
                                       "line " + std::to_string(i + 1) + " position " + std::to_string(j + 1) +
                                           " should be " + std::string(1, tone_template->lines[i][j])});
        }
      }
    }
    if (any_checked) report.tone_ok = ok;
  }
  return report;
}

}  // namespace styledverse
