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

// Caption manifests: one image-caption metadata record per line, as JSONL or
// TSV. Reading is streaming; a reader holds one record at a time plus a
// compact hash set of the ids seen so far.

#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capmatch/error.hpp"

namespace capmatch {

using ClassIndex = std::uint32_t;

struct Sample {
  std::string id;
  std::string title;
  std::vector<std::string> tags;
  std::string description;
  std::string alt_text;
  std::optional<ClassIndex> ground_truth;
  // Set once a sample has been through the matcher.
  std::optional<std::vector<ClassIndex>> labels;
  // Externally produced label sets, e.g. machine labels, keyed by source.
  std::map<std::string, std::vector<ClassIndex>> extra_labels;
  // JSONL fields outside the schema, re-emitted verbatim after known fields.
  nlohmann::ordered_json unknown = nlohmann::ordered_json::object();

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class ManifestFormat { kJsonl, kTsv };

enum class CaptionSource { kTitle, kTags, kDescr, kTitleTags, kTtd, kAltText };

inline ManifestFormat parse_manifest_format(std::string_view name) {
  if (name == "jsonl") return ManifestFormat::kJsonl;
  if (name == "tsv") return ManifestFormat::kTsv;
  throw ConfigError("unknown manifest format '" + std::string(name) + "'");
}

inline CaptionSource parse_caption_source(std::string_view name) {
  if (name == "title") return CaptionSource::kTitle;
  if (name == "tags") return CaptionSource::kTags;
  if (name == "descr" || name == "description") return CaptionSource::kDescr;
  if (name == "titletags") return CaptionSource::kTitleTags;
  if (name == "ttd") return CaptionSource::kTtd;
  if (name == "alt_text") return CaptionSource::kAltText;
  throw ConfigError("unknown caption source '" + std::string(name) + "'");
}

inline std::string_view to_string(CaptionSource source) noexcept {
  switch (source) {
    case CaptionSource::kTitle: return "title";
    case CaptionSource::kTags: return "tags";
    case CaptionSource::kDescr: return "descr";
    case CaptionSource::kTitleTags: return "titletags";
    case CaptionSource::kTtd: return "ttd";
    case CaptionSource::kAltText: return "alt_text";
  }
  return "?";
}

namespace detail {

inline void append_part(std::string& out, std::string_view part) {
  if (part.empty()) return;
  if (!out.empty()) out.push_back(' ');
  out.append(part);
}

inline void append_tags(std::string& out, const std::vector<std::string>& tags) {
  for (const auto& t : tags) append_part(out, t);
}

}  // namespace detail

/// Caption text for `source`. Multi-field sources join the non-empty parts
/// with one space, in the order title, tags, description.
inline std::string compose_caption(const Sample& s, CaptionSource source) {
  std::string out;
  switch (source) {
    case CaptionSource::kTitle: out = s.title; break;
    case CaptionSource::kTags: detail::append_tags(out, s.tags); break;
    case CaptionSource::kDescr: out = s.description; break;
    case CaptionSource::kAltText: out = s.alt_text; break;
    case CaptionSource::kTitleTags:
      detail::append_part(out, s.title);
      detail::append_tags(out, s.tags);
      break;
    case CaptionSource::kTtd:
      detail::append_part(out, s.title);
      detail::append_tags(out, s.tags);
      detail::append_part(out, s.description);
      break;
  }
  return out;
}

/// Stores `caption` so that compose_caption(s, source) returns it. For the
/// composite sources the caption goes to the title and the other composed
/// fields are cleared.
inline void replace_caption(Sample& s, CaptionSource source, std::string caption) {
  auto split_tags = [](const std::string& text) {
    std::vector<std::string> tags;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto sp = text.find(' ', pos);
      const auto end = sp == std::string::npos ? text.size() : sp;
      if (end > pos) tags.emplace_back(text.substr(pos, end - pos));
      pos = end + 1;
    }
    return tags;
  };
  switch (source) {
    case CaptionSource::kTitle: s.title = std::move(caption); break;
    case CaptionSource::kTags: s.tags = split_tags(caption); break;
    case CaptionSource::kDescr: s.description = std::move(caption); break;
    case CaptionSource::kAltText: s.alt_text = std::move(caption); break;
    case CaptionSource::kTtd:
      s.description.clear();
      [[fallthrough]];
    case CaptionSource::kTitleTags:
      s.tags.clear();
      s.title = std::move(caption);
      break;
  }
}

namespace detail {

// Open-addressing set of 64-bit id hashes. Two distinct ids colliding on
// the full 64-bit hash would be reported as duplicates.
class IdHashSet {
 public:
  // Returns false if `h` was already present.
  bool insert(std::uint64_t h) {
    if (h == 0) h = 1;
    if ((size_ + 1) * 2 > slots_.size()) grow();
    const auto mask = slots_.size() - 1;
    for (auto i = mix(h) & mask;; i = (i + 1) & mask) {
      if (slots_[i] == h) return false;
      if (slots_[i] == 0) {
        slots_[i] = h;
        ++size_;
        return true;
      }
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
  }

  void grow() {
    std::vector<std::uint64_t> old(slots_.empty() ? 1024 : slots_.size() * 2, 0);
    old.swap(slots_);
    size_ = 0;
    for (auto h : old) {
      if (h != 0) insert(h);
    }
  }

  std::vector<std::uint64_t> slots_;
  std::size_t size_ = 0;
};

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline ClassIndex parse_class_index(const nlohmann::ordered_json& v,
                                    std::size_t line, const char* field) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > static_cast<std::int64_t>(UINT32_MAX)) {
    throw ParseError(line, std::string(field) + " must hold non-negative integers");
  }
  return static_cast<ClassIndex>(v.get<std::int64_t>());
}

inline std::vector<ClassIndex> parse_index_array(const nlohmann::ordered_json& v,
                                                 std::size_t line,
                                                 const char* field) {
  if (!v.is_array()) throw ParseError(line, std::string(field) + " must be an array");
  std::vector<ClassIndex> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(parse_class_index(e, line, field));
  return out;
}

inline std::string parse_string_field(const nlohmann::ordered_json& v,
                                      std::size_t line, const char* field) {
  if (v.is_null()) return {};
  if (!v.is_string()) throw ParseError(line, std::string(field) + " must be a string");
  return v.get<std::string>();
}

inline Sample sample_from_json(std::string_view text, std::size_t line) {
  nlohmann::ordered_json obj;
  try {
    obj = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "record must be a JSON object");
  Sample s;
  bool has_id = false;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const auto& v = it.value();
    if (key == "id") {
      if (!v.is_string()) throw ParseError(line, "id must be a string");
      s.id = v.get<std::string>();
      has_id = true;
    } else if (key == "title") {
      s.title = parse_string_field(v, line, "title");
    } else if (key == "description") {
      s.description = parse_string_field(v, line, "description");
    } else if (key == "alt_text") {
      s.alt_text = parse_string_field(v, line, "alt_text");
    } else if (key == "tags") {
      if (v.is_null()) continue;
      if (!v.is_array()) throw ParseError(line, "tags must be an array of strings");
      for (const auto& t : v) {
        if (!t.is_string()) throw ParseError(line, "tags must be an array of strings");
        s.tags.push_back(t.get<std::string>());
      }
    } else if (key == "ground_truth") {
      if (!v.is_null()) s.ground_truth = parse_class_index(v, line, "ground_truth");
    } else if (key == "labels") {
      if (!v.is_null()) s.labels = parse_index_array(v, line, "labels");
    } else if (key == "extra_labels") {
      if (v.is_null()) continue;
      if (!v.is_object()) throw ParseError(line, "extra_labels must be an object");
      for (auto e = v.begin(); e != v.end(); ++e) {
        s.extra_labels[e.key()] = parse_index_array(e.value(), line, "extra_labels");
      }
    } else {
      s.unknown[key] = v;
    }
  }
  if (!has_id || s.id.empty()) throw ParseError(line, "missing or empty id");
  return s;
}

inline nlohmann::ordered_json sample_to_json(const Sample& s) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  obj["id"] = s.id;
  obj["title"] = s.title;
  obj["tags"] = s.tags;
  obj["description"] = s.description;
  obj["alt_text"] = s.alt_text;
  if (s.ground_truth) obj["ground_truth"] = *s.ground_truth;
  if (s.labels) obj["labels"] = *s.labels;
  if (!s.extra_labels.empty()) {
    auto& extra = obj["extra_labels"] = nlohmann::ordered_json::object();
    for (const auto& [name, labels] : s.extra_labels) extra[name] = labels;
  }
  for (auto it = s.unknown.begin(); it != s.unknown.end(); ++it) {
    obj[it.key()] = it.value();
  }
  return obj;
}

// TSV cells escape backslash, tab, CR and LF; within the tags cell '|'
// separates tags and a literal '|' is written as "\|".
inline std::string tsv_escape(std::string_view s, bool escape_pipe) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '|':
        if (escape_pipe) out += "\\|";
        else out.push_back(c);
        break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Splits on unescaped `sep` (if nonzero) and unescapes each piece.
inline std::vector<std::string> tsv_unescape_split(std::string_view s, char sep,
                                                   std::size_t line) {
  std::vector<std::string> out(1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      if (i + 1 == s.size()) throw ParseError(line, "dangling escape in TSV cell");
      switch (s[++i]) {
        case '\\': out.back().push_back('\\'); break;
        case 't': out.back().push_back('\t'); break;
        case 'n': out.back().push_back('\n'); break;
        case 'r': out.back().push_back('\r'); break;
        case '|': out.back().push_back('|'); break;
        default: throw ParseError(line, "unknown escape in TSV cell");
      }
    } else if (sep != 0 && c == sep) {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

inline std::optional<ClassIndex> parse_tsv_index(std::string_view cell,
                                                 std::size_t line,
                                                 const char* field) {
  if (cell.empty()) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : cell) {
    if (c < '0' || c > '9' || v > UINT32_MAX) {
      throw ParseError(line, std::string(field) + " must be a non-negative integer");
    }
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v > UINT32_MAX) {
    throw ParseError(line, std::string(field) + " must be a non-negative integer");
  }
  return static_cast<ClassIndex>(v);
}

inline constexpr std::string_view kTsvColumns[] = {
    "id", "title", "tags", "description", "alt_text", "ground_truth"};

}  // namespace detail

/// Streaming manifest reader. Records come back in input order; a parse
/// failure or a repeated id throws ParseError with the 1-based line number.
class ManifestReader {
 public:
  ManifestReader(std::istream& in, ManifestFormat format)
      : in_(&in), format_(format) {}

  /// One unparsed record line.
  struct RawRecord {
    std::string text;
    std::size_t line = 0;
  };

  std::optional<Sample> next() {
    RawRecord raw;
    if (!next_raw(raw)) return std::nullopt;
    Sample s = parse(raw);
    claim_id(s, raw.line);
    return s;
  }

  /// Reads the next record line without parsing it. TSV headers and blank
  /// JSONL lines are consumed here.
  bool next_raw(RawRecord& raw) {
    while (std::getline(*in_, raw.text)) {
      raw.line = ++line_no_;
      if (!raw.text.empty() && raw.text.back() == '\r') raw.text.pop_back();
      if (format_ == ManifestFormat::kTsv && !header_seen_) {
        read_header(raw.text);
        continue;
      }
      if (format_ == ManifestFormat::kJsonl &&
          raw.text.find_first_not_of(" \t") == std::string::npos) {
        continue;
      }
      return true;
    }
    if (in_->bad()) throw DataError("read error after line " + std::to_string(line_no_));
    return false;
  }

  /// Parses a line returned by next_raw(). Safe to call concurrently.
  Sample parse(const RawRecord& raw) const {
    if (format_ == ManifestFormat::kJsonl) return detail::sample_from_json(raw.text, raw.line);
    if (raw.text.find_first_not_of(" \t") == std::string::npos) {
      throw ParseError(raw.line, "blank TSV row");
    }
    return parse_tsv_row(raw.text, raw.line);
  }

  /// Registers the sample's id; throws on a repeat. Call in input order.
  void claim_id(const Sample& s, std::size_t line) {
    if (!ids_.insert(detail::fnv1a(s.id))) {
      throw ParseError(line, "duplicate id '" + s.id + "'");
    }
  }

  std::size_t line_number() const noexcept { return line_no_; }

 private:
  void read_header(const std::string& line) {
    const auto cells = detail::split_tabs(line);
    const std::size_t fixed = std::size(detail::kTsvColumns);
    bool ok = cells.size() == fixed || cells.size() == fixed + 1;
    for (std::size_t i = 0; ok && i < fixed; ++i) ok = cells[i] == detail::kTsvColumns[i];
    if (ok && cells.size() == fixed + 1) ok = cells[fixed] == "labels";
    if (!ok) {
      throw ParseError(line_no_,
                       "TSV header must be id, title, tags, description, "
                       "alt_text, ground_truth[, labels]");
    }
    has_labels_column_ = cells.size() == fixed + 1;
    header_seen_ = true;
  }

  Sample parse_tsv_row(const std::string& text, std::size_t line_no) const {
    const auto cells = detail::split_tabs(text);
    const std::size_t want = std::size(detail::kTsvColumns) + (has_labels_column_ ? 1 : 0);
    if (cells.size() != want) {
      throw ParseError(line_no, "expected " + std::to_string(want) + " columns, got " +
                                     std::to_string(cells.size()));
    }
    auto cell = [&](std::size_t i) {
      return std::move(detail::tsv_unescape_split(cells[i], 0, line_no).front());
    };
    Sample s;
    s.id = cell(0);
    if (s.id.empty()) throw ParseError(line_no, "missing or empty id");
    s.title = cell(1);
    if (!cells[2].empty()) s.tags = detail::tsv_unescape_split(cells[2], '|', line_no);
    s.description = cell(3);
    s.alt_text = cell(4);
    s.ground_truth = detail::parse_tsv_index(cells[5], line_no, "ground_truth");
    if (has_labels_column_) {
      std::vector<ClassIndex> labels;
      if (!cells[6].empty()) {
        for (const auto& piece : detail::tsv_unescape_split(cells[6], '|', line_no)) {
          if (piece.empty()) throw ParseError(line_no, "empty entry in labels");
          labels.push_back(*detail::parse_tsv_index(piece, line_no, "labels"));
        }
      }
      s.labels = std::move(labels);
    }
    return s;
  }

  std::istream* in_;
  ManifestFormat format_;
  std::size_t line_no_ = 0;
  bool header_seen_ = false;
  bool has_labels_column_ = false;
  detail::IdHashSet ids_;
};

/// Reads a whole manifest into memory. Prefer ManifestReader for large inputs.
inline std::vector<Sample> parse_manifest(std::istream& in, ManifestFormat format) {
  ManifestReader reader(in, format);
  std::vector<Sample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

/// Streaming manifest writer. TSV output carries a `labels` column when
/// constructed with `tsv_labels`; TSV cannot carry extra_labels or unknown
/// fields.
class ManifestWriter {
 public:
  ManifestWriter(std::ostream& out, ManifestFormat format, bool tsv_labels = false)
      : out_(&out), format_(format), tsv_labels_(tsv_labels) {}

  /// One serialized record including the trailing newline. Thread-safe.
  std::string format(const Sample& s) const {
    if (format_ == ManifestFormat::kJsonl) {
      std::string line = detail::sample_to_json(s).dump(
          -1, ' ', false, nlohmann::json::error_handler_t::replace);
      line.push_back('\n');
      return line;
    }
    return format_tsv_row(s);
  }

  void write(const Sample& s) { write_formatted(format(s), s.id); }

  /// Writes a record produced by format().
  void write_formatted(std::string_view record, std::string_view id = {}) {
    if (format_ == ManifestFormat::kTsv && !header_written_) write_header();
    out_->write(record.data(), static_cast<std::streamsize>(record.size()));
    if (!*out_) throw DataError("failed to write manifest record '" + std::string(id) + "'");
  }

  // Emits the TSV header even when no record follows.
  void finish() {
    if (format_ == ManifestFormat::kTsv && !header_written_) write_header();
    out_->flush();
    if (!*out_) throw DataError("failed to flush manifest output");
  }

 private:
  void write_header() {
    for (std::size_t i = 0; i < std::size(detail::kTsvColumns); ++i) {
      if (i) *out_ << '\t';
      *out_ << detail::kTsvColumns[i];
    }
    if (tsv_labels_) *out_ << "\tlabels";
    *out_ << '\n';
    header_written_ = true;
  }

  std::string format_tsv_row(const Sample& s) const {
    std::string row = detail::tsv_escape(s.id, false);
    row += '\t';
    row += detail::tsv_escape(s.title, false);
    row += '\t';
    for (std::size_t i = 0; i < s.tags.size(); ++i) {
      if (i) row += '|';
      row += detail::tsv_escape(s.tags[i], true);
    }
    row += '\t';
    row += detail::tsv_escape(s.description, false);
    row += '\t';
    row += detail::tsv_escape(s.alt_text, false);
    row += '\t';
    if (s.ground_truth) row += std::to_string(*s.ground_truth);
    if (tsv_labels_) {
      row += '\t';
      if (s.labels) {
        for (std::size_t i = 0; i < s.labels->size(); ++i) {
          if (i) row += '|';
          row += std::to_string((*s.labels)[i]);
        }
      }
    }
    row += '\n';
    return row;
  }

  std::ostream* out_;
  ManifestFormat format_;
  bool tsv_labels_;
  bool header_written_ = false;
};

inline void write_manifest(std::ostream& out, const std::vector<Sample>& samples,
                           ManifestFormat format, bool tsv_labels = false) {
  ManifestWriter writer(out, format, tsv_labels);
  for (const auto& s : samples) writer.write(s);
  writer.finish();
}

}  // namespace capmatch
