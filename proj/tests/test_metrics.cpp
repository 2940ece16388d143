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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capmatch/metrics.hpp"
#include "capmatch/metrics_io.hpp"

namespace capmatch {
namespace {

RobustnessRecord record(double base, std::vector<double> shifts) {
  RobustnessRecord r;
  r.model_id = "m";
  r.base_acc = base;
  for (std::size_t i = 0; i < shifts.size(); ++i) r.shift_accs[std::string(kShiftNames[i])] = shifts[i];
  return r;
}

TEST(LabelQuality, FromPaperCounts) {
  const auto r = label_quality_from_counts(61024, 3895, 59432);
  EXPECT_EQ(r.total, 124351u);
  ASSERT_TRUE(r.accuracy);
  EXPECT_NEAR(*r.accuracy, 0.94, 0.005);
  EXPECT_NEAR(r.ds_util, 0.49, 0.005);
}

TEST(LabelQuality, AllCorrect) {
  std::vector<LabeledItem> items = {{"a", {1}, 1}, {"b", {2}, 2}};
  const auto r = label_quality(items);
  EXPECT_EQ(*r.accuracy, 1.0);
  EXPECT_EQ(r.ds_util, 1.0);
  EXPECT_EQ(r.per_class.at(1).correct, 1u);
}

TEST(LabelQuality, NothingLabeledHasNoAccuracy) {
  const auto r = label_quality({{"a", {}, 1}});
  EXPECT_FALSE(r.accuracy);
  EXPECT_EQ(r.ds_util, 0.0);
  EXPECT_EQ(r.unlabeled, 1u);
}

TEST(LabelQuality, Errors) {
  EXPECT_THROW(label_quality({{"a", {1}, std::nullopt}}), DataError);
  EXPECT_THROW(label_quality({{"a", {1, 2}, 1}}), DataError);
  try {
    label_quality({{"sample-9", {}, std::nullopt}});
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sample-9"), std::string::npos);
  }
}

TEST(LabelQuality, RandomMatchesRecountAndMerges) {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<LabeledItem> items;
    std::uint64_t c = 0, w = 0, u = 0;
    std::map<ClassIndex, std::pair<std::uint64_t, std::uint64_t>> per;
    LabelTally left, right;
    for (int i = 0; i < 50; ++i) {
      const ClassIndex truth = rng() % 5;
      std::optional<ClassIndex> label;
      if (rng() % 3) label = static_cast<ClassIndex>(rng() % 5);
      items.push_back({std::to_string(i), label ? std::vector<ClassIndex>{*label} : std::vector<ClassIndex>{}, truth});
      (i % 2 ? left : right).add(label, truth);
      if (!label) {
        ++u;
      } else {
        ++per[*label].first;
        if (*label == truth) {
          ++c;
          ++per[*label].second;
        } else {
          ++w;
        }
      }
    }
    const auto r = label_quality(items);
    EXPECT_EQ(r.correct, c);
    EXPECT_EQ(r.incorrect, w);
    EXPECT_EQ(r.unlabeled, u);
    EXPECT_EQ(r.correct + r.incorrect + r.unlabeled, r.total);
    EXPECT_DOUBLE_EQ(r.ds_util, static_cast<double>(c) / 50.0);
    if (r.accuracy) {
      EXPECT_LE(r.ds_util, *r.accuracy + 1e-15);
      EXPECT_LE(r.ds_util, static_cast<double>(c + w) / 50.0 + 1e-15);
    }
    for (const auto& [k, q] : r.per_class) {
      EXPECT_EQ(q.labeled, per[k].first);
      EXPECT_EQ(q.correct, per[k].second);
    }
    left.merge(right);
    const auto merged = left.report();
    EXPECT_EQ(merged.correct, r.correct);
    EXPECT_EQ(merged.per_class, r.per_class);
  }
}

TEST(Agreement, Examples) {
  const std::map<std::string, ClassIndex> a = {{"x", 1}, {"y", 2}};
  EXPECT_EQ(agreement(a, a), 1.0);
  EXPECT_EQ(agreement(a, {{"x", 3}, {"y", 4}}), 0.0);
  EXPECT_EQ(agreement(a, {{"x", 1}, {"z", 4}}), 1.0);
  EXPECT_THROW(agreement(a, {{"z", 1}}), DataError);
}

TEST(Agreement, RandomRecount) {
  std::mt19937_64 rng(22);
  std::map<std::string, ClassIndex> a, b;
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    const ClassIndex x = rng() % 4, y = rng() % 4;
    a[std::to_string(i)] = x;
    b[std::to_string(i)] = y;
    equal += x == y;
  }
  EXPECT_DOUBLE_EQ(agreement(a, b), equal / 100.0);
}

TEST(Robustness, PaperRows) {
  EXPECT_NEAR(avg_robustness(record(0.801, {0.094, 0.230, 0.297, 0.710})), 0.33275, 1e-12);
  EXPECT_NEAR(avg_robustness(record(0.9, {0.482, 0.764, 0.713, 0.867})), 0.7065, 1e-12);
  EXPECT_NEAR(effective_robustness_ratio(record(0.801, {0.333})), 0.4157, 5e-5);
  EXPECT_NEAR(effective_robustness_ratio(record(0.124, {0.051})), 0.411, 5e-4);
}

TEST(Robustness, TrivialCases) {
  EXPECT_DOUBLE_EQ(avg_robustness(record(0.5, {0.3, 0.3, 0.3, 0.3})), 0.3);
  EXPECT_DOUBLE_EQ(effective_robustness_ratio(record(0.4, {0.4, 0.4})), 1.0);
  EXPECT_THROW(effective_robustness_ratio(record(0.0, {0.1})), DataError);
  EXPECT_THROW(avg_robustness(record(0.5, {})), DataError);
}

TEST(Robustness, RatioIndependentOfShiftOrder) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(4);
    for (auto& x : v) x = static_cast<double>(rng() % 1000) / 1000.0;
    auto a = record(0.7, v);
    RobustnessRecord b = a;
    b.shift_accs.clear();
    for (int k = 3; k >= 0; --k) b.shift_accs[std::string(kShiftNames[k])] = v[k];
    EXPECT_DOUBLE_EQ(effective_robustness_ratio(a), effective_robustness_ratio(b));
  }
}

TEST(BinomialHalfwidth, Formula) {
  EXPECT_NEAR(binomial_halfwidth(0.5, 10000), 0.0098, 1e-4);
  EXPECT_NEAR(binomial_halfwidth(0.801, 5000), 1.96 * std::sqrt(0.801 * 0.199 / 5000), 1e-15);
  EXPECT_NEAR(binomial_halfwidth(0.801, 5000), 0.011, 0.0005);
  EXPECT_EQ(binomial_halfwidth(0.0, 17), 0.0);
  EXPECT_LT(binomial_halfwidth(0.5, 1000000), binomial_halfwidth(0.5, 1000));
}

TEST(AxisTransform, Values) {
  EXPECT_DOUBLE_EQ(axis_transform(0.5, AxisSpace::kLogit), 0.0);
  EXPECT_DOUBLE_EQ(axis_transform(0.1, AxisSpace::kLog10), -1.0);
  EXPECT_NEAR(axis_transform(0.801, AxisSpace::kLogit), std::log(0.801 / 0.199), 1e-12);
  EXPECT_NEAR(axis_transform(0.801, AxisSpace::kLogit), 1.3926, 5e-5);
  EXPECT_EQ(axis_transform(0.0, AxisSpace::kLinear), 0.0);
  EXPECT_THROW(axis_transform(0.0, AxisSpace::kLog10), DataError);
  EXPECT_THROW(axis_transform(1.0, AxisSpace::kLogit), DataError);
  for (auto s : {AxisSpace::kLinear, AxisSpace::kLogit, AxisSpace::kLog10}) {
    EXPECT_NEAR(inverse_axis_transform(axis_transform(0.37, s), s), 0.37, 1e-12);
  }
}

TEST(FitTrend, CollinearIsPerfect) {
  const auto f = fit_trend({{0.2, 0.1}, {0.4, 0.2}, {0.6, 0.3}}, AxisSpace::kLinear);
  EXPECT_NEAR(f.slope, 0.5, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(FitTrend, Errors) {
  EXPECT_THROW(fit_trend({{0.2, 0.1}}, AxisSpace::kLinear), DataError);
  EXPECT_THROW(fit_trend({{0.2, 0.1}, {0.2, 0.3}}, AxisSpace::kLinear), DataError);
  EXPECT_THROW(fit_trend({{0.2, 0.1}, {0.0, 0.3}}, AxisSpace::kLog10), DataError);
}

TEST(FitTrend, ResidualsSumToZeroAndR2InRange) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (auto space : {AxisSpace::kLinear, AxisSpace::kLogit, AxisSpace::kLog10}) {
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<TrendPoint> pts;
      const std::size_t n = 2 + rng() % 40;
      for (std::size_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)});
      const auto f = fit_trend(pts, space);
      double sum = 0.0;
      for (const auto& p : pts) sum += effective_robustness(p.base_acc, p.shift_metric, f);
      EXPECT_LT(std::abs(sum), 1e-9 * static_cast<double>(n));
      EXPECT_GE(f.r2, 0.0);
      EXPECT_LE(f.r2, 1.0);
    }
  }
}

TEST(EffectiveRobustness, SignConvention) {
  const auto f = fit_trend({{0.2, 0.1}, {0.4, 0.2}, {0.6, 0.3}}, AxisSpace::kLinear);
  EXPECT_NEAR(effective_robustness(0.4, 0.2, f), 0.0, 1e-12);
  TrendFit identity{AxisSpace::kLinear, 1.0, 0.0, 1.0, 2};
  EXPECT_GT(effective_robustness(0.5, 0.6, identity), 0.0);
  TrendFit flat{AxisSpace::kLinear, 0.0, 0.3, 1.0, 2};
  EXPECT_NEAR(effective_robustness(record(0.8, {0.4}), flat), 0.1, 1e-12);
}

TEST(CaptionStats, Examples) {
  CaptionStatsAccumulator acc;
  acc.add("0123456789");
  acc.add("01234567890123456789");
  const auto s = acc.stats();
  EXPECT_EQ(s.count, 2u);
  EXPECT_DOUBLE_EQ(s.mean_length, 15.0);
  EXPECT_DOUBLE_EQ(s.stddev_length, 5.0);
  const auto empty = caption_stats({}, CaptionSource::kTtd);
  EXPECT_EQ(empty.count, 0u);
  EXPECT_EQ(empty.mean_length, 0.0);
  EXPECT_EQ(empty.stddev_length, 0.0);
  EXPECT_EQ(empty.unique_tokens, 0u);
}

TEST(CaptionStats, RandomMatchesRecount) {
  std::mt19937_64 rng(25);
  const std::vector<std::string> words = {"Lion", "lion", "猫", "a", "b!", "ж"};
  std::vector<Sample> corpus;
  for (int i = 0; i < 100; ++i) {
    Sample s;
    const std::size_t n = rng() % 6;
    for (std::size_t k = 0; k < n; ++k) s.title += (k ? " " : "") + words[rng() % words.size()];
    corpus.push_back(s);
  }
  std::vector<double> lens;
  std::set<std::string> toks;
  for (const auto& s : corpus) {
    std::u32string wide = detail::to_u32(s.title);
    lens.push_back(static_cast<double>(wide.size()));
    for (const auto& t : normalize(s.title).tokens()) toks.insert(t);
  }
  double mean = 0.0;
  for (double l : lens) mean += l;
  mean /= 100.0;
  double var = 0.0;
  for (double l : lens) var += (l - mean) * (l - mean);
  const auto st = caption_stats(corpus, CaptionSource::kTitle);
  EXPECT_EQ(st.count, 100u);
  EXPECT_NEAR(st.mean_length, mean, 1e-12);
  EXPECT_NEAR(st.stddev_length, std::sqrt(var / 100.0), 1e-12);
  EXPECT_EQ(st.unique_tokens, toks.size());
}

TEST(RobustnessCsv, RoundTripAndErrors) {
  auto a = record(0.8, {0.1, 0.2, 0.3, 0.4});
  a.model_id = "id,with,commas";
  a.n_base = 5000;
  const std::vector<RobustnessRecord> recs = {a, record(0.5, {0.5, 0.5, 0.5, 0.5})};
  std::stringstream io;
  write_robustness_csv(io, recs);
  EXPECT_EQ(read_robustness_csv(io), recs);

  std::istringstream bad_header("model,base\n");
  EXPECT_THROW(read_robustness_csv(bad_header), ParseError);
  std::istringstream bad_value("model_id,base_acc,in_a,in_r,in_s,in_v2\nm,1.2,0,0,0,0\n");
  EXPECT_THROW(read_robustness_csv(bad_value), ParseError);
  std::istringstream short_row("# c\nmodel_id,base_acc,in_a,in_r,in_s,in_v2\nm,0.2\n");
  EXPECT_THROW(read_robustness_csv(short_row), ParseError);
}

TEST(TrendCsv, Reads) {
  std::istringstream in("# points\nmodel_id,base_acc,shift_metric\na,0.5,0.25\n");
  const auto pts = read_trend_points_csv(in);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].model_id, "a");
  EXPECT_EQ(pts[0].point.shift_metric, 0.25);
}

TEST(JsonReports, FixedKeyOrder) {
  const auto j = to_json(label_quality_from_counts(1, 1, 0));
  EXPECT_EQ(j.dump(), R"({"total":2,"correct":1,"incorrect":1,"unlabeled":0,"accuracy":0.5,"ds_util":0.5,"per_class":[]})");
}

}  // namespace
}  // namespace capmatch
