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
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "capmatch/detail/utf8.hpp"

namespace capmatch {

/// Normalized caption tokens. The tokens are stored joined by single spaces
/// so that any contiguous run of tokens is a zero-copy view into `text()`.
class TokenSequence {
 public:
  TokenSequence() = default;

  std::size_t size() const noexcept { return begin_.size(); }
  bool empty() const noexcept { return begin_.empty(); }

  std::string_view token(std::size_t i) const noexcept {
    return std::string_view(text_).substr(begin_[i], end_[i] - begin_[i]);
  }

  /// Tokens [start, start + n) joined by single spaces.
  std::string_view span(std::size_t start, std::size_t n) const noexcept {
    const auto b = begin_[start];
    return std::string_view(text_).substr(b, end_[start + n - 1] - b);
  }

  const std::string& text() const noexcept { return text_; }

  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.emplace_back(token(i));
    return out;
  }

  friend bool operator==(const TokenSequence& a, const TokenSequence& b) {
    return a.text_ == b.text_;
  }

 private:
  friend TokenSequence normalize(std::string_view text);

  std::string text_;
  std::vector<std::uint32_t> begin_;
  std::vector<std::uint32_t> end_;
};

/// Case-folds `text`, turns every code point that is not a letter, mark or
/// digit into a separator, and splits into tokens.
inline TokenSequence normalize(std::string_view text) {
  TokenSequence seq;
  seq.text_.reserve(text.size());
  bool in_token = false;
  for (std::size_t pos = 0; pos < text.size();) {
    const char32_t cp = detail::decode_utf8(text, pos);
    if (detail::is_token_char(cp)) {
      if (!in_token) {
        if (!seq.text_.empty()) seq.text_.push_back(' ');
        seq.begin_.push_back(static_cast<std::uint32_t>(seq.text_.size()));
        in_token = true;
      }
      detail::append_utf8(seq.text_, detail::fold_case(cp));
    } else if (in_token) {
      seq.end_.push_back(static_cast<std::uint32_t>(seq.text_.size()));
      in_token = false;
    }
  }
  if (in_token) seq.end_.push_back(static_cast<std::uint32_t>(seq.text_.size()));
  return seq;
}

/// Normalized text of `text`: its tokens joined by single spaces.
inline std::string normalize_text(std::string_view text) {
  return normalize(text).text();
}

struct NGram {
  std::string_view text;  // view into the owning TokenSequence
  std::size_t start;
  std::size_t n;

  friend bool operator==(const NGram&, const NGram&) = default;
};

/// Calls `fn(NGram)` for every contiguous n-gram with 1 <= n <= max_n, by
/// start position and then by ascending n.
template <typename Fn>
void for_each_ngram(const TokenSequence& seq, std::size_t max_n, Fn&& fn) {
  if (max_n == 0) throw std::invalid_argument("ngrams: max_n must be >= 1");
  const std::size_t len = seq.size();
  for (std::size_t start = 0; start < len; ++start) {
    const std::size_t limit = std::min(max_n, len - start);
    for (std::size_t n = 1; n <= limit; ++n) {
      fn(NGram{seq.span(start, n), start, n});
    }
  }
}

inline std::vector<NGram> ngrams(const TokenSequence& seq, std::size_t max_n) {
  std::vector<NGram> out;
  for_each_ngram(seq, max_n, [&](const NGram& g) { out.push_back(g); });
  return out;
}

/// Number of words in an already-normalized phrase.
inline std::size_t word_count(std::string_view normalized) noexcept {
  if (normalized.empty()) return 0;
  return static_cast<std::size_t>(
             std::count(normalized.begin(), normalized.end(), ' ')) +
         1;
}

}  // namespace capmatch
