// Copyright 2026 The capmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capmatch/corpus.hpp"
#include "capmatch/error.hpp"
#include "capmatch/textproc.hpp"

namespace capmatch {

enum class Relation { kSynonym, kHypernym, kHyponym, kAlsoSee, kSimilarTo };

class SynonymLexicon;
struct ExpansionResult;

struct ClassEntry {
  ClassIndex index = 0;
  std::string canonical_name;
  // Normalized; the normalized canonical name is always among them.
  std::vector<std::string> terms;

  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

/// Per-class matching terms. Indices are dense from 0, and every normalized
/// term belongs to exactly one class.
class TermDatabase {
 public:
  TermDatabase() = default;

  /// Builds and validates a database from (canonical name, raw terms) pairs;
  /// the position in `classes` is the class index.
  static TermDatabase from_classes(
      std::string name,
      const std::vector<std::pair<std::string, std::vector<std::string>>>& classes) {
    TermDatabase db;
    db.name_ = std::move(name);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      db.classes_.push_back(make_entry(static_cast<ClassIndex>(i), classes[i].first,
                                       classes[i].second,
                                       "class " + std::to_string(i)));
    }
    db.check_cross_class();
    return db;
  }

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }
  const std::vector<ClassEntry>& classes() const noexcept { return classes_; }

  const ClassEntry& at(ClassIndex index) const {
    if (index >= classes_.size()) {
      throw DataError("class index " + std::to_string(index) + " out of range (" +
                      std::to_string(classes_.size()) + " classes)");
    }
    return classes_[index];
  }

  friend bool operator==(const TermDatabase&, const TermDatabase&) = default;

 private:
  friend TermDatabase load_termdb(std::istream&, std::string);
  friend ExpansionResult expand_synset(const TermDatabase&, const SynonymLexicon&,
                                       const std::set<Relation>&);

  static ClassEntry make_entry(ClassIndex index, std::string_view canonical,
                               const std::vector<std::string>& raw_terms,
                               const std::string& where) {
    ClassEntry entry;
    entry.index = index;
    entry.canonical_name = std::string(canonical);
    const std::string canon = normalize_text(canonical);
    if (canon.empty()) throw DataError(where + ": canonical name is empty after normalization");
    std::set<std::string> seen;
    auto add = [&](std::string term) {
      if (seen.insert(term).second) entry.terms.push_back(std::move(term));
    };
    bool canonical_listed = false;
    for (const auto& raw : raw_terms) {
      std::string term = normalize_text(raw);
      if (term.empty()) {
        throw DataError(where + ": term '" + raw + "' is empty after normalization");
      }
      canonical_listed = canonical_listed || term == canon;
      add(std::move(term));
    }
    if (!canonical_listed) {
      entry.terms.insert(entry.terms.begin(), canon);
    }
    return entry;
  }

  void check_cross_class() const {
    std::unordered_map<std::string_view, ClassIndex> owner;
    for (const auto& c : classes_) {
      for (const auto& t : c.terms) {
        auto [it, fresh] = owner.emplace(t, c.index);
        if (!fresh) {
          throw DataError("term '" + t + "' appears in classes " +
                          std::to_string(it->second) + " and " + std::to_string(c.index));
        }
      }
    }
  }

  std::string name_;
  std::vector<ClassEntry> classes_;
};

/// Reads the tab-separated term file: `index<TAB>canonical_name<TAB>t1|t2|...`
/// per line, `#` comments and blank lines ignored. The terms column may be
/// omitted, in which case the canonical name is the only term.
inline TermDatabase load_termdb(std::istream& in, std::string name = {}) {
  std::map<ClassIndex, std::pair<std::string, std::vector<std::string>>> rows;
  std::map<ClassIndex, std::size_t> row_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    const auto cells = detail::split_tabs(line);
    if (cells.size() < 2 || cells.size() > 3) {
      throw ParseError(line_no, "expected index<TAB>canonical_name<TAB>terms");
    }
    const auto index = detail::parse_tsv_index(cells[0], line_no, "class index");
    if (!index) throw ParseError(line_no, "missing class index");
    std::vector<std::string> terms;
    if (cells.size() == 3) {
      std::string_view rest = cells[2];
      while (!rest.empty()) {
        const auto bar = rest.find('|');
        terms.emplace_back(rest.substr(0, bar));
        if (bar == std::string_view::npos) break;
        rest.remove_prefix(bar + 1);
      }
    }
    if (!rows.emplace(*index, std::make_pair(std::string(cells[1]), std::move(terms))).second) {
      throw ParseError(line_no, "class index " + std::to_string(*index) +
                                    " already defined on line " +
                                    std::to_string(row_line[*index]));
    }
    row_line[*index] = line_no;
  }
  if (in.bad()) throw DataError("read error in term file");

  TermDatabase db;
  db.name_ = std::move(name);
  ClassIndex expected = 0;
  for (auto& [index, row] : rows) {
    if (index != expected) {
      throw DataError("class indices are not dense: missing index " +
                      std::to_string(expected));
    }
    ++expected;
    db.classes_.push_back(TermDatabase::make_entry(
        index, row.first, row.second, "line " + std::to_string(row_line[index])));
  }
  db.check_cross_class();
  return db;
}

/// Word count of the longest term; the n-gram length the matcher needs.
inline std::size_t max_term_words(const TermDatabase& db) {
  if (db.empty()) throw DataError("term database has no classes");
  std::size_t longest = 0;
  for (const auto& c : db.classes()) {
    for (const auto& t : c.terms) longest = std::max(longest, word_count(t));
  }
  return longest;
}

inline constexpr std::array<std::string_view, 5> kRelationNames = {
    "synonym", "hypernym", "hyponym", "also_see", "similar_to"};

inline Relation parse_relation(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  }
  throw ConfigError("unknown lexical relation '" + std::string(name) + "'");
}

/// Word -> related words, split by relation. Words are stored normalized.
class SynonymLexicon {
 public:
  using Related = std::array<std::vector<std::string>, kRelationNames.size()>;

  void add(std::string_view word, Relation relation, std::string_view related) {
    const std::string key = normalize_text(word);
    const std::string value = normalize_text(related);
    if (key.empty() || value.empty()) return;
    auto& list = entries_[key][static_cast<std::size_t>(relation)];
    if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(value);
  }

  const std::vector<std::string>& related(std::string_view word, Relation relation) const {
    static const std::vector<std::string> kNone;
    const auto it = entries_.find(std::string(word));
    return it == entries_.end() ? kNone : it->second[static_cast<std::size_t>(relation)];
  }

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, Related> entries_;
};

/// One JSON object per line: {"word": ..., "synonym": [...], "hypernym": [...],
/// "hyponym": [...], "also_see": [...], "similar_to": [...]}. Missing
/// relation arrays are empty.
inline SynonymLexicon load_lexicon(std::istream& in) {
  SynonymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("word") || !obj["word"].is_string()) {
      throw ParseError(line_no, "lexicon record needs a string 'word'");
    }
    const auto word = obj["word"].get<std::string>();
    for (std::size_t r = 0; r < kRelationNames.size(); ++r) {
      const auto it = obj.find(std::string(kRelationNames[r]));
      if (it == obj.end() || it->is_null()) continue;
      if (!it->is_array()) {
        throw ParseError(line_no, std::string(kRelationNames[r]) + " must be an array");
      }
      for (const auto& w : *it) {
        if (!w.is_string()) {
          throw ParseError(line_no, std::string(kRelationNames[r]) + " must hold strings");
        }
        lex.add(word, static_cast<Relation>(r), w.get<std::string>());
      }
    }
  }
  return lex;
}

struct ExpansionCollision {
  std::string term;
  std::vector<ClassIndex> classes;  // ascending

  friend bool operator==(const ExpansionCollision&, const ExpansionCollision&) = default;
};

struct ExpansionResult {
  TermDatabase db;
  std::vector<ExpansionCollision> collisions;  // ordered by term
};

/// Appends lexicon neighbours of every single-word term under `relations`.
/// A candidate proposed by two or more classes is added to none of them;
/// a candidate that is already a term of another class stays with that
/// class only. Both cases are reported as collisions.
inline ExpansionResult expand_synset(const TermDatabase& db, const SynonymLexicon& lexicon,
                                     const std::set<Relation>& relations) {
  if (relations.empty()) throw std::invalid_argument("expand_synset: no relations given");

  std::unordered_map<std::string, ClassIndex> owner;
  for (const auto& c : db.classes()) {
    for (const auto& t : c.terms) owner.emplace(t, c.index);
  }

  // candidate -> proposing classes; per-class candidates in proposal order.
  std::map<std::string, std::set<ClassIndex>> proposers;
  std::vector<std::vector<std::string>> proposed(db.size());
  for (const auto& c : db.classes()) {
    for (const auto& t : c.terms) {
      if (word_count(t) != 1) continue;
      for (Relation r : relations) {
        for (const auto& w : lexicon.related(t, r)) {
          const auto own = owner.find(w);
          if (own != owner.end() && own->second == c.index) continue;
          if (proposers[w].insert(c.index).second) proposed[c.index].push_back(w);
        }
      }
    }
  }

  ExpansionResult result;
  result.db = db;
  std::set<std::string> dropped;
  for (const auto& [term, classes] : proposers) {
    const auto own = owner.find(term);
    if (own == owner.end() && classes.size() == 1) continue;
    std::set<ClassIndex> involved = classes;
    if (own != owner.end()) involved.insert(own->second);
    result.collisions.push_back({term, {involved.begin(), involved.end()}});
    dropped.insert(term);
  }
  for (auto& c : result.db.classes_) {
    for (auto& w : proposed[c.index]) {
      if (!dropped.count(w)) c.terms.push_back(std::move(w));
    }
  }
  return result;
}

}  // namespace capmatch
