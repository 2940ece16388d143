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

// Subset matching. A caption is normalized and split into n-grams; each
// n-gram is looked up in a single hash index over every class's terms.
// The strategy then turns the set of hits into zero or more labels.

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "capmatch/corpus.hpp"
#include "capmatch/error.hpp"
#include "capmatch/fuzzy.hpp"
#include "capmatch/termdb.hpp"
#include "capmatch/textproc.hpp"

namespace capmatch {

enum class StrategyKind { kStrict, kSingleClass, kMultiClass, kAnticlass };

struct MatchStrategy {
  StrategyKind kind = StrategyKind::kSingleClass;
  std::size_t mc_cap = 25;  // multi-class only
};

inline StrategyKind parse_strategy(std::string_view name) {
  if (name == "strict") return StrategyKind::kStrict;
  if (name == "sc" || name == "single_class") return StrategyKind::kSingleClass;
  if (name == "mc" || name == "multi_class") return StrategyKind::kMultiClass;
  if (name == "anticlass") return StrategyKind::kAnticlass;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

inline std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::kStrict: return "strict";
    case StrategyKind::kSingleClass: return "sc";
    case StrategyKind::kMultiClass: return "mc";
    case StrategyKind::kAnticlass: return "anticlass";
  }
  return "?";
}

struct FuzzyOptions {
  bool enabled = false;
  int threshold = 55;  // in [0, 100]
};

struct Hit {
  ClassIndex class_index = 0;
  std::string term;
  std::size_t position = 0;  // token index of the matched n-gram's start

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct MatchOutcome {
  std::string sample_id;
  std::vector<ClassIndex> labels;
  std::vector<Hit> hits;
  bool matched = false;  // any hit, before strategy selection

  friend bool operator==(const MatchOutcome&, const MatchOutcome&) = default;
};

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

}  // namespace detail

/// Label selection over hits listed in caption order.
inline std::vector<ClassIndex> select_labels(const std::vector<Hit>& hits,
                                             const MatchStrategy& strategy) {
  std::vector<ClassIndex> labels;
  if (hits.empty()) return labels;
  switch (strategy.kind) {
    case StrategyKind::kAnticlass:
      break;
    case StrategyKind::kStrict: {
      const ClassIndex first = hits.front().class_index;
      const bool unique = std::all_of(hits.begin(), hits.end(), [&](const Hit& h) {
        return h.class_index == first;
      });
      if (unique) labels.push_back(first);
      break;
    }
    case StrategyKind::kSingleClass: {
      const Hit* best = &hits.front();
      for (const auto& h : hits) {
        if (h.position < best->position ||
            (h.position == best->position && h.class_index < best->class_index)) {
          best = &h;
        }
      }
      labels.push_back(best->class_index);
      break;
    }
    case StrategyKind::kMultiClass: {
      // (first position, class) for every distinct class.
      std::vector<std::pair<std::size_t, ClassIndex>> firsts;
      for (const auto& h : hits) {
        auto it = std::find_if(firsts.begin(), firsts.end(),
                               [&](const auto& f) { return f.second == h.class_index; });
        if (it == firsts.end()) {
          firsts.emplace_back(h.position, h.class_index);
        } else if (h.position < it->first) {
          it->first = h.position;
        }
      }
      std::sort(firsts.begin(), firsts.end());
      const std::size_t keep = std::min(firsts.size(), strategy.mc_cap);
      for (std::size_t i = 0; i < keep; ++i) labels.push_back(firsts[i].second);
      break;
    }
  }
  return labels;
}

/// Immutable, thread-safe matcher over one term database.
class Matcher {
 public:
  Matcher(const TermDatabase& db, MatchStrategy strategy, FuzzyOptions fuzzy = {})
      : strategy_(strategy), fuzzy_(fuzzy), max_n_(max_term_words(db)) {
    if (strategy_.mc_cap == 0) throw ConfigError("mc_cap must be at least 1");
    if (fuzzy_.threshold < 0 || fuzzy_.threshold > 100) {
      throw ConfigError("fuzzy threshold must be in [0, 100]");
    }
    for (const auto& c : db.classes()) {
      for (const auto& t : c.terms) {
        index_.emplace(t, c.index);
        if (fuzzy_.enabled && word_count(t) == 1) {
          single_words_.push_back({detail::to_u32(t), t, c.index});
        }
      }
    }
    std::sort(single_words_.begin(), single_words_.end(),
              [](const FuzzyTerm& a, const FuzzyTerm& b) {
                return a.class_index != b.class_index ? a.class_index < b.class_index
                                                      : a.term < b.term;
              });
    classes_ = db.size();
  }

  const MatchStrategy& strategy() const noexcept { return strategy_; }
  const FuzzyOptions& fuzzy() const noexcept { return fuzzy_; }
  std::size_t max_n() const noexcept { return max_n_; }
  std::size_t num_classes() const noexcept { return classes_; }

  /// Every hit of `caption`, in n-gram order (start position, then length).
  /// Fuzzy hits are only sought for single tokens with no exact hit.
  std::vector<Hit> find_hits(std::string_view caption) const {
    std::vector<Hit> hits;
    const TokenSequence seq = normalize(caption);
    if (seq.empty()) return hits;
    for_each_ngram(seq, max_n_, [&](const NGram& g) {
      const auto it = index_.find(g.text);
      if (it != index_.end()) {
        hits.push_back({it->second, it->first, g.start});
      } else if (fuzzy_.enabled && g.n == 1) {
        const std::u32string token = detail::to_u32(g.text);
        for (const auto& ft : single_words_) {
          if (fuzzy_matches(token, ft.text, fuzzy_.threshold)) {
            hits.push_back({ft.class_index, ft.term, g.start});
          }
        }
      }
    });
    return hits;
  }

  MatchOutcome match(std::string_view caption, std::string sample_id = {}) const {
    MatchOutcome out;
    out.sample_id = std::move(sample_id);
    out.hits = find_hits(caption);
    out.matched = !out.hits.empty();
    out.labels = select_labels(out.hits, strategy_);
    return out;
  }

 private:
  struct FuzzyTerm {
    std::u32string text;
    std::string term;
    ClassIndex class_index;
  };

  MatchStrategy strategy_;
  FuzzyOptions fuzzy_;
  std::size_t max_n_;
  std::size_t classes_ = 0;
  std::unordered_map<std::string, ClassIndex, detail::StringHash, std::equal_to<>> index_;
  std::vector<FuzzyTerm> single_words_;
};

/// One-shot convenience; builds the index on every call. Use Matcher for
/// more than a handful of captions.
inline MatchOutcome match_sample(std::string_view caption, const TermDatabase& db,
                                 MatchStrategy strategy, FuzzyOptions fuzzy = {}) {
  return Matcher(db, strategy, fuzzy).match(caption);
}

}  // namespace capmatch
