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

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "capmatch/error.hpp"
#include "capmatch/metrics.hpp"
#include "capmatch/pipeline.hpp"

namespace capmatch {

namespace detail {

// RFC 4180-style split of one line; quoted fields may contain commas and
// doubled quotes but not newlines.
inline std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        out.back().push_back(c);
      }
    } else if (c == '"' && out.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted CSV field");
  return out;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline double parse_double(std::string_view s, std::size_t line_no, std::string_view field) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(line_no, std::string(field) + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_count(std::string_view s, std::size_t line_no, std::string_view field) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(line_no, std::string(field) + ": not a count: '" + std::string(s) + "'");
  }
  return v;
}

inline bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    return true;
  }
  return false;
}

// Shortest round-trip formatting.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// CSV with header model_id,base_acc,in_a,in_r,in_s,in_v2[,n_base,n_shift].
/// `#` lines are comments.
inline std::vector<RobustnessRecord> read_robustness_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<RobustnessRecord> out;
  if (!detail::next_data_line(in, line, line_no)) return out;
  const auto header = detail::split_csv(line, line_no);
  const std::vector<std::string> base_cols = {"model_id", "base_acc", "in_a",
                                              "in_r",     "in_s",     "in_v2"};
  const bool with_n = header.size() == base_cols.size() + 2;
  bool ok = header.size() == base_cols.size() || with_n;
  for (std::size_t i = 0; ok && i < base_cols.size(); ++i) ok = header[i] == base_cols[i];
  if (ok && with_n) ok = header[6] == "n_base" && header[7] == "n_shift";
  if (!ok) {
    throw ParseError(line_no,
                     "robustness CSV header must be model_id,base_acc,in_a,in_r,in_s,in_v2"
                     "[,n_base,n_shift]");
  }
  while (detail::next_data_line(in, line, line_no)) {
    const auto cells = detail::split_csv(line, line_no);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    }
    RobustnessRecord rec;
    rec.model_id = cells[0];
    if (rec.model_id.empty()) throw ParseError(line_no, "empty model_id");
    auto acc = [&](std::size_t i) {
      const double v = detail::parse_double(cells[i], line_no, header[i]);
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(line_no, header[i] + " outside [0, 1]");
      return v;
    };
    rec.base_acc = acc(1);
    for (std::size_t i = 0; i < 4; ++i) rec.shift_accs[std::string(kShiftNames[i])] = acc(2 + i);
    if (with_n) {
      if (!cells[6].empty()) rec.n_base = detail::parse_count(cells[6], line_no, "n_base");
      if (!cells[7].empty()) rec.n_shift = detail::parse_count(cells[7], line_no, "n_shift");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_robustness_csv(std::ostream& out, const std::vector<RobustnessRecord>& recs) {
  bool with_n = false;
  for (const auto& r : recs) with_n = with_n || r.n_base || r.n_shift;
  out << "model_id,base_acc,in_a,in_r,in_s,in_v2" << (with_n ? ",n_base,n_shift" : "") << '\n';
  for (const auto& r : recs) {
    out << detail::csv_field(r.model_id) << ',' << detail::format_double(r.base_acc);
    for (auto name : kShiftNames) {
      const auto it = r.shift_accs.find(std::string(name));
      out << ',' << (it == r.shift_accs.end() ? std::string() : detail::format_double(it->second));
    }
    if (with_n) {
      out << ',' << (r.n_base ? std::to_string(*r.n_base) : "") << ','
          << (r.n_shift ? std::to_string(*r.n_shift) : "");
    }
    out << '\n';
  }
  if (!out) throw DataError("failed to write robustness CSV");
}

struct NamedTrendPoint {
  std::string model_id;
  TrendPoint point;
};

/// CSV with header model_id,base_acc,shift_metric.
inline std::vector<NamedTrendPoint> read_trend_points_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<NamedTrendPoint> out;
  if (!detail::next_data_line(in, line, line_no)) return out;
  const auto header = detail::split_csv(line, line_no);
  if (header != std::vector<std::string>{"model_id", "base_acc", "shift_metric"}) {
    throw ParseError(line_no, "trend CSV header must be model_id,base_acc,shift_metric");
  }
  while (detail::next_data_line(in, line, line_no)) {
    const auto cells = detail::split_csv(line, line_no);
    if (cells.size() != 3) throw ParseError(line_no, "expected 3 fields");
    out.push_back({cells[0],
                   {detail::parse_double(cells[1], line_no, "base_acc"),
                    detail::parse_double(cells[2], line_no, "shift_metric")}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON reports. Key order is fixed so that output bytes are reproducible.

inline nlohmann::ordered_json to_json(const CorpusTallies& t) {
  nlohmann::ordered_json j;
  j["total"] = t.total;
  j["matched"] = t.matched;
  j["labeled"] = t.labeled;
  j["unmatched"] = t.total - t.matched;
  j["hit_rate"] = t.hit_rate();
  j["per_class"] = t.per_class;
  return j;
}

inline nlohmann::ordered_json to_json(const LabelQualityReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.total;
  j["correct"] = r.correct;
  j["incorrect"] = r.incorrect;
  j["unlabeled"] = r.unlabeled;
  j["accuracy"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nullptr;
  j["ds_util"] = r.ds_util;
  auto& per = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& [k, q] : r.per_class) {
    nlohmann::ordered_json c;
    c["class"] = k;
    c["labeled"] = q.labeled;
    c["correct"] = q.correct;
    c["accuracy"] = q.accuracy ? nlohmann::ordered_json(*q.accuracy) : nullptr;
    per.push_back(std::move(c));
  }
  return j;
}

inline nlohmann::ordered_json to_json(const TrendFit& f) {
  nlohmann::ordered_json j;
  j["space"] = std::string(to_string(f.space));
  j["n"] = f.n;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r2"] = f.r2;
  return j;
}

inline nlohmann::ordered_json to_json(const CaptionStats& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean_length"] = s.mean_length;
  j["stddev_length"] = s.stddev_length;
  j["unique_tokens"] = s.unique_tokens;
  return j;
}

}  // namespace capmatch
