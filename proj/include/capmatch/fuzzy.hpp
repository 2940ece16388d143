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
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "capmatch/detail/utf8.hpp"

namespace capmatch {

/// Edit distance over code points with unit insert/delete/substitute costs.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(detail::to_u32(a), detail::to_u32(b));
}

/// floor(100 * (1 - d / max(|a|, |b|))) on code points; 100 for two empty
/// tokens.
inline int fuzzy_similarity(std::u32string_view a, std::u32string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 100;
  const std::size_t d = levenshtein(a, b);
  return static_cast<int>(100 * (longest - d) / longest);
}

inline int fuzzy_similarity(std::string_view a, std::string_view b) {
  return fuzzy_similarity(detail::to_u32(a), detail::to_u32(b));
}

/// Whether two tokens reach `threshold`, skipping the distance computation
/// when the length gap alone rules it out.
inline bool fuzzy_matches(std::u32string_view a, std::u32string_view b, int threshold) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return true;
  const std::size_t gap = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  // similarity >= threshold  <=>  100 * (longest - d) >= threshold * longest
  if (100 * (longest - gap) < static_cast<std::size_t>(threshold) * longest) return false;
  return fuzzy_similarity(a, b) >= threshold;
}

}  // namespace capmatch
