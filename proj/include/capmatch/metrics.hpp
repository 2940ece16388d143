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

// Evaluation metrics: label quality against ground truth, label agreement,
// robustness aggregates over distribution shifts, binomial confidence
// half-widths, trend fits and caption statistics.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "capmatch/corpus.hpp"
#include "capmatch/error.hpp"
#include "capmatch/textproc.hpp"

namespace capmatch {

// ---------------------------------------------------------------------------
// Label quality

struct ClassQuality {
  std::uint64_t labeled = 0;  // samples assigned this class
  std::uint64_t correct = 0;
  std::optional<double> accuracy;

  friend bool operator==(const ClassQuality&, const ClassQuality&) = default;
};

struct LabelQualityReport {
  std::uint64_t total = 0;
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;
  std::uint64_t unlabeled = 0;
  // correct / (correct + incorrect); absent when nothing was labeled.
  std::optional<double> accuracy;
  // correct / (correct + incorrect + unlabeled).
  double ds_util = 0.0;
  std::map<ClassIndex, ClassQuality> per_class;

  std::uint64_t labeled() const noexcept { return correct + incorrect; }
};

/// Fraction of all samples that carry a correct label.
inline double dataset_utilization(std::uint64_t correct, std::uint64_t total) {
  if (correct > total) throw DataError("correct count exceeds dataset size");
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

/// Mergeable counts behind a LabelQualityReport.
class LabelTally {
 public:
  void add(std::optional<ClassIndex> label, ClassIndex truth) {
    if (!label) {
      ++unlabeled_;
      return;
    }
    auto& c = per_class_[*label];
    ++c.labeled;
    if (*label == truth) {
      ++correct_;
      ++c.correct;
    } else {
      ++incorrect_;
    }
  }

  void add_counts(std::uint64_t correct, std::uint64_t incorrect, std::uint64_t unlabeled) {
    correct_ += correct;
    incorrect_ += incorrect;
    unlabeled_ += unlabeled;
  }

  void merge(const LabelTally& other) {
    correct_ += other.correct_;
    incorrect_ += other.incorrect_;
    unlabeled_ += other.unlabeled_;
    for (const auto& [k, c] : other.per_class_) {
      per_class_[k].labeled += c.labeled;
      per_class_[k].correct += c.correct;
    }
  }

  LabelQualityReport report() const {
    LabelQualityReport r;
    r.correct = correct_;
    r.incorrect = incorrect_;
    r.unlabeled = unlabeled_;
    r.total = correct_ + incorrect_ + unlabeled_;
    if (r.labeled() > 0) {
      r.accuracy = static_cast<double>(correct_) / static_cast<double>(r.labeled());
    }
    r.ds_util = dataset_utilization(correct_, r.total);
    for (const auto& [k, c] : per_class_) {
      ClassQuality q{c.labeled, c.correct, std::nullopt};
      if (c.labeled > 0) q.accuracy = static_cast<double>(c.correct) / static_cast<double>(c.labeled);
      r.per_class.emplace(k, q);
    }
    return r;
  }

 private:
  struct Counts {
    std::uint64_t labeled = 0;
    std::uint64_t correct = 0;
  };
  std::uint64_t correct_ = 0;
  std::uint64_t incorrect_ = 0;
  std::uint64_t unlabeled_ = 0;
  std::map<ClassIndex, Counts> per_class_;
};

struct LabeledItem {
  std::string id;
  std::vector<ClassIndex> labels;  // at most one
  std::optional<ClassIndex> truth;
};

/// A labeled item is correct iff its single label equals its ground truth.
inline LabelQualityReport label_quality(const std::vector<LabeledItem>& items) {
  LabelTally tally;
  for (const auto& item : items) {
    if (!item.truth) throw DataError("sample '" + item.id + "' has no ground truth");
    if (item.labels.size() > 1) {
      throw DataError("sample '" + item.id + "' has " + std::to_string(item.labels.size()) +
                      " labels; label quality needs single-label outcomes");
    }
    tally.add(item.labels.empty() ? std::nullopt : std::optional(item.labels.front()),
              *item.truth);
  }
  return tally.report();
}

inline LabelQualityReport label_quality_from_counts(std::uint64_t correct,
                                                    std::uint64_t incorrect,
                                                    std::uint64_t unlabeled) {
  LabelTally tally;
  tally.add_counts(correct, incorrect, unlabeled);
  return tally.report();
}

/// Fraction of ids present in both assignments whose labels agree.
inline double agreement(const std::map<std::string, ClassIndex>& a,
                        const std::map<std::string, ClassIndex>& b) {
  std::uint64_t shared = 0;
  std::uint64_t equal = 0;
  for (const auto& [id, label] : a) {
    const auto it = b.find(id);
    if (it == b.end()) continue;
    ++shared;
    if (it->second == label) ++equal;
  }
  if (shared == 0) throw DataError("label assignments share no ids");
  return static_cast<double>(equal) / static_cast<double>(shared);
}

// ---------------------------------------------------------------------------
// Robustness

inline constexpr std::string_view kShiftNames[] = {"in_a", "in_r", "in_s", "in_v2"};

struct RobustnessRecord {
  std::string model_id;
  double base_acc = 0.0;
  std::map<std::string, double> shift_accs;
  std::optional<std::uint64_t> n_base;
  std::optional<std::uint64_t> n_shift;

  friend bool operator==(const RobustnessRecord&, const RobustnessRecord&) = default;
};

/// Mean accuracy over the shifts present.
inline double avg_robustness(const RobustnessRecord& rec) {
  if (rec.shift_accs.empty()) {
    throw DataError("record '" + rec.model_id + "' has no shift accuracies");
  }
  double sum = 0.0;
  for (const auto& [name, acc] : rec.shift_accs) sum += acc;
  return sum / static_cast<double>(rec.shift_accs.size());
}

/// Effective robustness ratio: average shift accuracy over base accuracy.
inline double effective_robustness_ratio(const RobustnessRecord& rec) {
  if (!(rec.base_acc > 0.0)) {
    throw DataError("record '" + rec.model_id + "' has zero base accuracy");
  }
  return avg_robustness(rec) / rec.base_acc;
}

/// Normal-approximation half-width z * sqrt(p (1 - p) / n).
inline double binomial_halfwidth(double p, std::uint64_t n, double z = 1.96) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("proportion must be in [0, 1]");
  if (n == 0) throw DataError("sample count must be positive");
  return z * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Trend fits

enum class AxisSpace { kLinear, kLogit, kLog10 };

inline AxisSpace parse_axis_space(std::string_view name) {
  if (name == "linear") return AxisSpace::kLinear;
  if (name == "logit") return AxisSpace::kLogit;
  if (name == "log10") return AxisSpace::kLog10;
  throw ConfigError("unknown axis space '" + std::string(name) + "'");
}

inline std::string_view to_string(AxisSpace space) noexcept {
  switch (space) {
    case AxisSpace::kLinear: return "linear";
    case AxisSpace::kLogit: return "logit";
    case AxisSpace::kLog10: return "log10";
  }
  return "?";
}

inline double axis_transform(double p, AxisSpace space) {
  switch (space) {
    case AxisSpace::kLinear:
      return p;
    case AxisSpace::kLogit:
      if (!(p > 0.0 && p < 1.0)) throw DataError("logit needs p in (0, 1)");
      return std::log(p / (1.0 - p));
    case AxisSpace::kLog10:
      if (!(p > 0.0 && p < 1.0)) throw DataError("log10 axis needs p in (0, 1)");
      return std::log10(p);
  }
  return p;
}

inline double inverse_axis_transform(double v, AxisSpace space) noexcept {
  switch (space) {
    case AxisSpace::kLinear: return v;
    case AxisSpace::kLogit: return 1.0 / (1.0 + std::exp(-v));
    case AxisSpace::kLog10: return std::pow(10.0, v);
  }
  return v;
}

struct TrendPoint {
  double base_acc = 0.0;
  double shift_metric = 0.0;
};

struct TrendFit {
  AxisSpace space = AxisSpace::kLinear;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // 1 - SS_res / SS_tot on the transformed axes
  std::size_t n = 0;

  /// Fitted value on the transformed axis at a raw base accuracy.
  double predict(double base_acc) const {
    return slope * axis_transform(base_acc, space) + intercept;
  }
};

/// Ordinary least squares of T(shift_metric) on T(base_acc).
inline TrendFit fit_trend(const std::vector<TrendPoint>& points, AxisSpace space) {
  if (points.size() < 2) throw DataError("trend fit needs at least two points");
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    xs.push_back(axis_transform(p.base_acc, space));
    ys.push_back(axis_transform(p.shift_metric, space));
  }
  const double n = static_cast<double>(points.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * n)) {
    throw DataError("trend fit is degenerate: base accuracies have no spread");
  }
  TrendFit fit;
  fit.space = space;
  fit.n = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  return fit;
}

/// Shift performance above the baseline's prediction, on the baseline's axis.
inline double effective_robustness(double base_acc, double shift_metric,
                                   const TrendFit& baseline) {
  return axis_transform(shift_metric, baseline.space) - baseline.predict(base_acc);
}

inline double effective_robustness(const RobustnessRecord& rec, const TrendFit& baseline) {
  return effective_robustness(rec.base_acc, avg_robustness(rec), baseline);
}

// ---------------------------------------------------------------------------
// Caption statistics

struct CaptionStats {
  std::uint64_t count = 0;
  double mean_length = 0.0;    // code points
  double stddev_length = 0.0;  // population
  std::uint64_t unique_tokens = 0;
};

/// Streaming accumulator; lengths via Welford's update.
class CaptionStatsAccumulator {
 public:
  void add(std::string_view caption) {
    const double len = static_cast<double>(detail::count_codepoints(caption));
    ++count_;
    const double delta = len - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (len - mean_);
    const TokenSequence seq = normalize(caption);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto tok = seq.token(i);
      if (!tokens_.count(tok)) tokens_.emplace(tok);
    }
  }

  CaptionStats stats() const {
    CaptionStats s;
    s.count = count_;
    if (count_ > 0) {
      s.mean_length = mean_;
      s.stddev_length = std::sqrt(m2_ / static_cast<double>(count_));
    }
    s.unique_tokens = tokens_.size();
    return s;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::unordered_set<std::string, Hash, std::equal_to<>> tokens_;
};

inline CaptionStats caption_stats(const std::vector<Sample>& corpus, CaptionSource source) {
  CaptionStatsAccumulator acc;
  for (const auto& s : corpus) acc.add(compose_caption(s, source));
  return acc.stats();
}

}  // namespace capmatch
