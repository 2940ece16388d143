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


// Brute-force reference implementations and random generators shared by the
// tests and the acceptance binary. Deliberately slow and simple.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "capmatch/capmatch.hpp"

namespace oracle {

using capmatch::ClassIndex;

// Full-matrix Levenshtein distance over code points.
inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

inline std::u32string widen_ascii(const std::string& s) { return std::u32string(s.begin(), s.end()); }

inline int similarity(const std::string& a, const std::string& b) {
  const std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 100;
  const std::size_t d = levenshtein(widen_ascii(a), widen_ascii(b));
  return static_cast<int>((100 * (m - d)) / m);
}

// ASCII-only tokenizer: lowercase, anything but [a-z0-9] separates.
inline std::vector<std::string> tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Class {
  std::string name;
  std::vector<std::string> terms;  // lowercase, single-spaced
};

// Checks every term against every caption position, token by token.
inline std::vector<capmatch::Hit> hits(const std::string& caption, const std::vector<Class>& db,
                                       bool fuzzy, int threshold) {
  const auto toks = tokens(caption);
  std::set<std::string> all_terms;
  for (const auto& c : db) all_terms.insert(c.terms.begin(), c.terms.end());
  // (position, words, class, term)
  std::vector<std::tuple<std::size_t, std::size_t, ClassIndex, std::string>> found;
  for (ClassIndex c = 0; c < db.size(); ++c) {
    for (const auto& t : db[c].terms) {
      const auto words = tokens(t);
      for (std::size_t i = 0; i + words.size() <= toks.size(); ++i) {
        bool equal = true;
        for (std::size_t k = 0; equal && k < words.size(); ++k) equal = toks[i + k] == words[k];
        if (equal) found.emplace_back(i, words.size(), c, t);
      }
      if (fuzzy && words.size() == 1) {
        for (std::size_t i = 0; i < toks.size(); ++i) {
          if (!all_terms.count(toks[i]) && similarity(toks[i], t) >= threshold) {
            found.emplace_back(i, 1, c, t);
          }
        }
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<capmatch::Hit> out;
  for (auto& [pos, len, c, t] : found) out.push_back({c, t, pos});
  return out;
}

inline std::vector<ClassIndex> labels(const std::vector<capmatch::Hit>& hs,
                                      capmatch::StrategyKind kind, std::size_t mc_cap) {
  using capmatch::StrategyKind;
  std::map<ClassIndex, std::size_t> first;  // class -> earliest position
  for (const auto& h : hs) {
    auto it = first.find(h.class_index);
    if (it == first.end() || h.position < it->second) first[h.class_index] = h.position;
  }
  std::vector<std::pair<std::size_t, ClassIndex>> order;
  for (auto [c, p] : first) order.emplace_back(p, c);
  std::sort(order.begin(), order.end());
  std::vector<ClassIndex> out;
  switch (kind) {
    case StrategyKind::kStrict:
      if (first.size() == 1) out.push_back(first.begin()->first);
      break;
    case StrategyKind::kSingleClass:
      if (!order.empty()) out.push_back(order.front().second);
      break;
    case StrategyKind::kMultiClass:
      for (std::size_t i = 0; i < order.size() && i < mc_cap; ++i) out.push_back(order[i].second);
      break;
    case StrategyKind::kAnticlass:
      break;
  }
  return out;
}

inline capmatch::MatchOutcome match(const std::string& caption, const std::vector<Class>& db,
                                    capmatch::MatchStrategy strategy, capmatch::FuzzyOptions fuzzy,
                                    const std::string& id = {}) {
  capmatch::MatchOutcome o;
  o.sample_id = id;
  o.hits = hits(caption, db, fuzzy.enabled, fuzzy.threshold);
  o.matched = !o.hits.empty();
  o.labels = labels(o.hits, strategy.kind, strategy.mc_cap);
  return o;
}

// ---------------------------------------------------------------------------
// Random inputs. A small alphabet keeps accidental matches and near misses
// frequent.

inline std::string random_word(std::mt19937_64& rng) {
  static const std::string letters = "abcde";
  std::uniform_int_distribution<int> len(2, 5);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::string w;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) w.push_back(letters[pick(rng)]);
  return w;
}

inline std::vector<Class> random_db(std::mt19937_64& rng, std::size_t classes,
                                    std::size_t max_words = 3) {
  std::vector<Class> db;
  std::set<std::string> used;
  std::uniform_int_distribution<std::size_t> nterms(1, 3), nwords(1, max_words);
  for (std::size_t c = 0; c < classes; ++c) {
    Class cls;
    const std::size_t k = nterms(rng);
    while (cls.terms.size() < k) {
      std::string t;
      const std::size_t w = nwords(rng);
      for (std::size_t i = 0; i < w; ++i) t += (i ? " " : "") + random_word(rng);
      if (used.insert(t).second) cls.terms.push_back(t);
    }
    cls.name = cls.terms.front();
    db.push_back(std::move(cls));
  }
  return db;
}

inline capmatch::TermDatabase to_termdb(const std::vector<Class>& db) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  for (const auto& c : db) rows.emplace_back(c.name, c.terms);
  return capmatch::TermDatabase::from_classes("random", rows);
}

// Caption mixing class terms, random words, case changes and punctuation.
inline std::string random_caption(std::mt19937_64& rng, const std::vector<Class>& db) {
  static const std::string seps[] = {" ", "  ", ", ", "-", "! ", " (", ") ", "\t"};
  std::uniform_int_distribution<int> len(0, 12), coin(0, 3);
  std::uniform_int_distribution<std::size_t> sep(0, std::size(seps) - 1);
  std::uniform_int_distribution<std::size_t> cls(0, db.empty() ? 0 : db.size() - 1);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += seps[sep(rng)];
    std::string piece;
    if (!db.empty() && coin(rng) == 0) {
      const auto& terms = db[cls(rng)].terms;
      piece = terms[std::uniform_int_distribution<std::size_t>(0, terms.size() - 1)(rng)];
    } else {
      piece = random_word(rng);
    }
    if (coin(rng) == 0) {
      for (char& ch : piece) {
        if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
      }
    }
    out += piece;
  }
  return out;
}

}  // namespace oracle
