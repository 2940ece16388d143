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

// Caption ablations: deterministic rewrites that remove or scramble parts of
// the information a caption carries.

#pragma once

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "capmatch/corpus.hpp"
#include "capmatch/error.hpp"
#include "capmatch/random.hpp"
#include "capmatch/termdb.hpp"
#include "capmatch/textproc.hpp"

namespace capmatch {

using TokenSet = std::unordered_set<std::string>;

inline constexpr std::string_view kClassNamePlaceholder = "CLASSNAME";
inline constexpr std::string_view kDefaultTemplate = "an image of a CLASSNAME";
inline constexpr std::string_view kStripSentinel = "0";

namespace detail {

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

inline std::string fold_string(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) append_utf8(out, fold_case(decode_utf8(s, pos)));
  return out;
}

}  // namespace detail

/// Uniformly permutes the whitespace-separated tokens of `caption`.
inline std::string scramble(std::string_view caption, std::uint64_t seed) {
  auto tokens = detail::split_whitespace(caption);
  SplitMix64 rng(seed);
  shuffle(tokens, rng);
  return detail::join(tokens);
}

/// Per-record seed, so a corpus scramble is independent of record order
/// and scheduling.
inline std::uint64_t record_seed(std::uint64_t seed, std::string_view id) noexcept {
  return SplitMix64(seed).split(record_key(id))();
}

/// Rotates ASCII letters by `shift` within their case; everything else is
/// left alone. Any integer shift is reduced mod 26.
inline std::string shift_cipher(std::string_view caption, int shift) {
  const int k = ((shift % 26) + 26) % 26;
  std::string out(caption);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>('a' + (c - 'a' + k) % 26);
    } else if (c >= 'A' && c <= 'Z') {
      c = static_cast<char>('A' + (c - 'A' + k) % 26);
    }
  }
  return out;
}

/// Replaces every normalized token outside `whitelist` with "0". The
/// sentinel itself always survives, which makes the transform idempotent.
inline std::string token_strip(std::string_view caption, const TokenSet& whitelist) {
  const TokenSequence seq = normalize(caption);
  std::string out;
  out.reserve(seq.text().size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto tok = seq.token(i);
    if (i) out.push_back(' ');
    if (tok == kStripSentinel || whitelist.count(std::string(tok))) {
      out.append(tok);
    } else {
      out.append(kStripSentinel);
    }
  }
  return out;
}

/// Substitutes `class_name` for CLASSNAME; the template text is case-folded.
inline std::string apply_template(std::string_view tmpl, std::string_view class_name) {
  const auto at = tmpl.find(kClassNamePlaceholder);
  if (at == std::string_view::npos) {
    throw ConfigError("caption template must contain CLASSNAME");
  }
  return detail::fold_string(tmpl.substr(0, at)) + std::string(class_name) +
         detail::fold_string(tmpl.substr(at + kClassNamePlaceholder.size()));
}

/// Keeps the caption tokens found in `lexicon` (first occurrence, original
/// order) and renders them through the template. No lexicon token yields "".
inline std::string simple_caption(std::string_view caption, const TokenSet& lexicon,
                                  std::string_view tmpl = kDefaultTemplate) {
  if (lexicon.empty()) throw ConfigError("simple_caption: lexicon is empty");
  const TokenSequence seq = normalize(caption);
  std::vector<std::string> kept;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto tok = seq.token(i);
    if (lexicon.count(std::string(tok)) && seen.insert(tok).second) kept.emplace_back(tok);
  }
  if (kept.empty()) return {};
  return apply_template(tmpl, detail::join(kept));
}

/// The template filled with the class's canonical name.
inline std::string simpler_caption(ClassIndex label, const TermDatabase& db,
                                   std::string_view tmpl = kDefaultTemplate) {
  return apply_template(tmpl, detail::fold_string(db.at(label).canonical_name));
}

/// One normalized token per non-empty line; lines with several words add
/// each word.
inline TokenSet load_token_set(std::istream& in) {
  TokenSet out;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : normalize(line).tokens()) out.insert(std::move(t));
  }
  if (in.bad()) throw DataError("read error in token list");
  return out;
}

enum class TransformKind { kScramble, kShiftCipher, kTokenStrip, kSimpleCaption, kSimplerCaption };

inline TransformKind parse_transform_kind(std::string_view name) {
  if (name == "scramble") return TransformKind::kScramble;
  if (name == "shift_cipher") return TransformKind::kShiftCipher;
  if (name == "token_strip") return TransformKind::kTokenStrip;
  if (name == "simple_caption") return TransformKind::kSimpleCaption;
  if (name == "simpler_caption") return TransformKind::kSimplerCaption;
  throw ConfigError("unknown transform '" + std::string(name) + "'");
}

struct TransformSpec {
  TransformKind kind = TransformKind::kScramble;
  std::uint64_t seed = 0;
  int shift = 13;
  TokenSet whitelist;
  TokenSet lexicon;
  std::string caption_template = std::string(kDefaultTemplate);
  const TermDatabase* db = nullptr;  // simpler_caption only

  void validate() const {
    switch (kind) {
      case TransformKind::kScramble: break;
      case TransformKind::kShiftCipher:
        if (shift < 1 || shift > 25) throw ConfigError("shift must be in [1, 25]");
        break;
      case TransformKind::kTokenStrip: break;
      case TransformKind::kSimpleCaption:
        if (lexicon.empty()) throw ConfigError("simple_caption needs a non-empty lexicon");
        apply_template(caption_template, "");
        break;
      case TransformKind::kSimplerCaption:
        if (db == nullptr) throw ConfigError("simpler_caption needs a term database");
        apply_template(caption_template, "");
        break;
    }
  }
};

/// The rewritten caption for one sample. simpler_caption takes the first
/// matcher label, falling back to ground_truth; with neither it yields "".
inline std::string apply_transform(const TransformSpec& spec, const Sample& sample,
                                   std::string_view caption) {
  switch (spec.kind) {
    case TransformKind::kScramble:
      return scramble(caption, record_seed(spec.seed, sample.id));
    case TransformKind::kShiftCipher:
      return shift_cipher(caption, spec.shift);
    case TransformKind::kTokenStrip:
      return token_strip(caption, spec.whitelist);
    case TransformKind::kSimpleCaption:
      return simple_caption(caption, spec.lexicon, spec.caption_template);
    case TransformKind::kSimplerCaption: {
      std::optional<ClassIndex> label;
      if (sample.labels && !sample.labels->empty()) {
        label = sample.labels->front();
      } else {
        label = sample.ground_truth;
      }
      if (!label) return {};
      return simpler_caption(*label, *spec.db, spec.caption_template);
    }
  }
  return std::string(caption);
}

}  // namespace capmatch
