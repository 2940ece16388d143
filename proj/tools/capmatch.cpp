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

// capmatch: caption subset matching, filtering, ablations and metrics.
//
// Exit status: 0 success, 1 bad arguments, 2 bad data or I/O failure.
// Diagnostics go to stderr; stdout carries data only.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capmatch/capmatch.hpp"

namespace {

using namespace capmatch;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

// ---------------------------------------------------------------------------
// I/O helpers. "-" means stdin / stdout.

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") {
      stream_ = &std::cin;
    } else {
      file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot open '" + path + "' for reading");
      stream_ = file_.get();
    }
  }
  std::istream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path == "-") {
      stream_ = &std::cout;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw DataError("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw DataError("failed writing '" + path_ + "'");
    if (file_) file_->close();
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

void write_json(const std::string& path, const ordered_json& j) {
  Output out(path);
  out.get() << j.dump(2) << '\n';
  out.close();
}

// ---------------------------------------------------------------------------
// Shared option groups

struct ManifestOptions {
  std::string input;
  std::string output = "-";
  std::string format = "jsonl";
  std::string caption_source = "ttd";
  std::size_t workers = 1;
};

void add_manifest_options(CLI::App* cmd, ManifestOptions& o, bool with_output) {
  cmd->add_option("--input", o.input, "Input manifest ('-' for stdin)")->required();
  if (with_output) cmd->add_option("--output", o.output, "Output path ('-' for stdout)");
  cmd->add_option("--format", o.format, "Manifest format")
      ->check(CLI::IsMember({"jsonl", "tsv"}));
  cmd->add_option("--caption-source", o.caption_source, "Fields composed into the caption")
      ->check(CLI::IsMember({"title", "tags", "descr", "titletags", "ttd", "alt_text"}));
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

struct MatchOptions {
  ManifestOptions manifest;
  std::string termdb;
  std::string strategy = "sc";
  std::size_t mc_cap = 25;
  bool fuzzy = false;
  int fuzzy_threshold = 55;
  std::string stats;
  std::string synset_lexicon;
  std::vector<std::string> synset_relations;
  bool anticlass = false;  // filter only
};

void add_match_options(CLI::App* cmd, MatchOptions& o) {
  add_manifest_options(cmd, o.manifest, true);
  cmd->add_option("--termdb", o.termdb, "Term database file")->required();
  cmd->add_option("--strategy", o.strategy, "Label selection strategy")
      ->check(CLI::IsMember({"strict", "sc", "mc", "anticlass"}));
  cmd->add_option("--mc-cap", o.mc_cap, "Maximum labels per sample under mc")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--fuzzy", o.fuzzy, "Enable fuzzy matching of single-word terms");
  cmd->add_option("--fuzzy-threshold", o.fuzzy_threshold, "Fuzzy similarity threshold")
      ->check(CLI::Range(0, 100));
  cmd->add_option("--stats", o.stats,
                  "Stats JSON path (default: <output>.stats.json; none for stdout output)");
  cmd->add_option("--synset-lexicon", o.synset_lexicon, "Lexicon JSONL used to expand terms");
  cmd->add_option("--synset-relations", o.synset_relations,
                  "Relations to expand with (synonym, hypernym, hyponym, also_see, similar_to)")
      ->delimiter(',')
      ->check(CLI::IsMember({"synonym", "hypernym", "hyponym", "also_see", "similar_to"}));
}

TermDatabase load_termdb_file(const std::string& path) {
  Input in(path);
  return load_termdb(in.get(), std::filesystem::path(path).stem().string());
}

// ---------------------------------------------------------------------------
// label / filter

enum class MatchMode { kLabel, kFilter };

int run_match(const MatchOptions& o, MatchMode mode) {
  // Flag validation before any I/O.
  const auto format = parse_manifest_format(o.manifest.format);
  const auto source = parse_caption_source(o.manifest.caption_source);
  MatchStrategy strategy{parse_strategy(o.strategy), o.mc_cap};
  if (o.anticlass) {
    if (mode != MatchMode::kFilter) throw ConfigError("--anticlass applies to filter only");
    strategy.kind = StrategyKind::kAnticlass;
  }
  if (o.synset_lexicon.empty() != o.synset_relations.empty()) {
    throw ConfigError("--synset-lexicon and --synset-relations must be given together");
  }
  std::set<Relation> relations;
  for (const auto& r : o.synset_relations) relations.insert(parse_relation(r));
  const FuzzyOptions fuzzy{o.fuzzy, o.fuzzy_threshold};
  std::string stats_path = o.stats;
  if (stats_path.empty() && o.manifest.output != "-") stats_path = o.manifest.output + ".stats.json";

  TermDatabase db = load_termdb_file(o.termdb);
  std::vector<ExpansionCollision> collisions;
  if (!relations.empty()) {
    Input lex_in(o.synset_lexicon);
    auto expanded = expand_synset(db, load_lexicon(lex_in.get()), relations);
    db = std::move(expanded.db);
    collisions = std::move(expanded.collisions);
    std::cerr << "capmatch: synset expansion dropped " << collisions.size()
              << " colliding terms\n";
  }
  const Matcher matcher(db, strategy, fuzzy);

  Input in(o.manifest.input);
  Output out(o.manifest.output);
  ManifestReader reader(in.get(), format);
  ManifestWriter writer(out.get(), format, /*tsv_labels=*/strategy.kind != StrategyKind::kAnticlass);
  const bool anticlass = strategy.kind == StrategyKind::kAnticlass;

  struct Result {
    MatchOutcome outcome;
    std::optional<std::string> record;
  };
  CorpusTallies tallies(matcher.num_classes());
  std::uint64_t written = 0;
  process_manifest(
      reader, PipelineOptions{o.manifest.workers},
      [&](const Sample& s) {
        Result r{matcher.match(compose_caption(s, source), s.id), std::nullopt};
        bool keep = true;
        if (mode == MatchMode::kFilter) keep = anticlass ? !r.outcome.matched : !r.outcome.labels.empty();
        if (keep) {
          if (anticlass) {
            r.record = writer.format(s);
          } else {
            Sample labeled = s;
            labeled.labels = r.outcome.labels;
            r.record = writer.format(labeled);
          }
        }
        return r;
      },
      [&](Sample&& s, Result&& r) {
        tallies.add(r.outcome);
        if (r.record) {
          writer.write_formatted(*r.record, s.id);
          ++written;
        }
      });
  writer.finish();
  out.close();

  if (!stats_path.empty()) {
    ordered_json j;
    j["command"] = mode == MatchMode::kLabel ? "label" : "filter";
    j["termdb"] = db.name();
    j["classes"] = db.size();
    j["caption_source"] = std::string(to_string(source));
    j["strategy"] = std::string(to_string(strategy.kind));
    j["mc_cap"] = strategy.mc_cap;
    j["fuzzy"] = {{"enabled", fuzzy.enabled}, {"threshold", fuzzy.threshold}};
    j["tallies"] = to_json(tallies);
    j["written"] = written;
    if (!relations.empty()) {
      auto& c = j["synset_collisions"] = ordered_json::array();
      for (const auto& col : collisions) c.push_back({{"term", col.term}, {"classes", col.classes}});
    }
    write_json(stats_path, j);
  }
  std::cerr << "capmatch: " << tallies.total << " samples, " << tallies.matched << " matched, "
            << written << " written\n";
  return 0;
}

// ---------------------------------------------------------------------------
// transform

struct TransformOptions {
  ManifestOptions manifest;
  std::string kind;
  std::uint64_t seed = 0;
  int shift = 13;
  std::string whitelist;
  std::string lexicon;
  std::string caption_template = std::string(kDefaultTemplate);
  std::string termdb;
};

int run_transform(const TransformOptions& o) {
  const auto format = parse_manifest_format(o.manifest.format);
  const auto source = parse_caption_source(o.manifest.caption_source);
  TransformSpec spec;
  spec.kind = parse_transform_kind(o.kind);
  spec.seed = o.seed;
  spec.shift = o.shift;
  spec.caption_template = o.caption_template;
  if (spec.kind == TransformKind::kTokenStrip && o.whitelist.empty()) {
    throw ConfigError("token_strip needs --whitelist");
  }
  if (spec.kind == TransformKind::kSimpleCaption && o.lexicon.empty()) {
    throw ConfigError("simple_caption needs --lexicon");
  }
  if (spec.kind == TransformKind::kSimplerCaption && o.termdb.empty()) {
    throw ConfigError("simpler_caption needs --termdb");
  }
  if (spec.kind == TransformKind::kShiftCipher && (spec.shift < 1 || spec.shift > 25)) {
    throw ConfigError("shift must be in [1, 25]");
  }
  if (spec.kind == TransformKind::kSimpleCaption || spec.kind == TransformKind::kSimplerCaption) {
    apply_template(spec.caption_template, "");
  }

  std::optional<TermDatabase> db;
  if (!o.whitelist.empty()) {
    Input w(o.whitelist);
    spec.whitelist = load_token_set(w.get());
  }
  if (!o.lexicon.empty()) {
    Input l(o.lexicon);
    spec.lexicon = load_token_set(l.get());
  }
  if (!o.termdb.empty()) {
    db = load_termdb_file(o.termdb);
    spec.db = &*db;
  }
  if (spec.kind == TransformKind::kSimpleCaption && spec.lexicon.empty()) {
    throw DataError("lexicon '" + o.lexicon + "' has no tokens");
  }
  spec.validate();

  Input in(o.manifest.input);
  Output out(o.manifest.output);
  ManifestReader reader(in.get(), format);
  ManifestWriter writer(out.get(), format, format == ManifestFormat::kTsv);
  std::uint64_t n = 0;
  process_manifest(
      reader, PipelineOptions{o.manifest.workers},
      [&](const Sample& s) {
        Sample t = s;
        replace_caption(t, source, apply_transform(spec, s, compose_caption(s, source)));
        return writer.format(t);
      },
      [&](Sample&& s, std::string&& record) {
        writer.write_formatted(record, s.id);
        ++n;
      });
  writer.finish();
  out.close();
  std::cerr << "capmatch: transformed " << n << " samples\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats

int run_stats(const ManifestOptions& o) {
  const auto format = parse_manifest_format(o.format);
  const auto source = parse_caption_source(o.caption_source);
  Input in(o.input);
  ManifestReader reader(in.get(), format);
  CaptionStatsAccumulator acc;
  while (auto s = reader.next()) acc.add(compose_caption(*s, source));
  ordered_json j;
  j["caption_source"] = std::string(to_string(source));
  j["stats"] = to_json(acc.stats());
  write_json(o.output, j);
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsOptions {
  std::string robustness;
  std::string input;
  std::string format = "jsonl";
  std::string output = "-";
  std::string agree_with;
  std::string baseline;
  std::string space = "log10";
  double z = 1.96;
};

std::optional<ClassIndex> single_label(const std::vector<ClassIndex>& labels) {
  if (labels.size() == 1) return labels.front();
  return std::nullopt;
}

int run_metrics(const MetricsOptions& o) {
  if (o.robustness.empty() == o.input.empty()) {
    throw ConfigError("metrics needs exactly one of --robustness or --input");
  }
  if (!o.baseline.empty() && o.robustness.empty()) {
    throw ConfigError("--baseline applies to --robustness only");
  }
  if (!o.agree_with.empty() && o.input.empty()) {
    throw ConfigError("--agree-with applies to --input only");
  }
  const auto space = parse_axis_space(o.space);
  ordered_json report;

  if (!o.robustness.empty()) {
    std::optional<TrendFit> baseline;
    if (!o.baseline.empty()) {
      Input b(o.baseline);
      std::vector<TrendPoint> pts;
      for (const auto& p : read_trend_points_csv(b.get())) pts.push_back(p.point);
      baseline = fit_trend(pts, space);
      report["baseline"] = to_json(*baseline);
    }
    Input in(o.robustness);
    auto& rows = report["records"] = ordered_json::array();
    for (const auto& rec : read_robustness_csv(in.get())) {
      ordered_json r;
      r["model_id"] = rec.model_id;
      r["base_acc"] = rec.base_acc;
      r["avg_rob"] = avg_robustness(rec);
      r["err"] = effective_robustness_ratio(rec);
      if (rec.n_base) r["base_acc_halfwidth"] = binomial_halfwidth(rec.base_acc, *rec.n_base, o.z);
      if (rec.n_shift) {
        r["avg_rob_halfwidth"] = binomial_halfwidth(avg_robustness(rec), *rec.n_shift, o.z);
      }
      if (baseline) r["effective_robustness"] = effective_robustness(rec, *baseline);
      rows.push_back(std::move(r));
    }
  } else {
    Input in(o.input);
    ManifestReader reader(in.get(), parse_manifest_format(o.format));
    LabelTally tally;
    std::map<std::string, ClassIndex> ours;
    std::map<std::string, ClassIndex> theirs;
    while (auto s = reader.next()) {
      if (!s->ground_truth) throw DataError("sample '" + s->id + "' has no ground truth");
      const std::vector<ClassIndex> labels = s->labels.value_or(std::vector<ClassIndex>{});
      if (labels.size() > 1) {
        throw DataError("sample '" + s->id + "' has several labels; label quality needs sc/strict output");
      }
      tally.add(single_label(labels), *s->ground_truth);
      if (!o.agree_with.empty()) {
        if (auto l = single_label(labels)) ours.emplace(s->id, *l);
        const auto it = s->extra_labels.find(o.agree_with);
        if (it != s->extra_labels.end()) {
          if (auto l = single_label(it->second)) theirs.emplace(s->id, *l);
        }
      }
    }
    report["label_quality"] = to_json(tally.report());
    if (!o.agree_with.empty()) {
      report["agreement"] = {{"with", o.agree_with}, {"fraction", agreement(ours, theirs)}};
    }
  }
  write_json(o.output, report);
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string input;
  std::string output = "-";
  std::string space = "log10";
  std::string plot;
};

int run_fit(const FitOptions& o) {
  const auto space = parse_axis_space(o.space);
  Input in(o.input);
  const auto named = read_trend_points_csv(in.get());
  std::vector<TrendPoint> pts;
  for (const auto& p : named) pts.push_back(p.point);
  const TrendFit fit = fit_trend(pts, space);
  ordered_json j = to_json(fit);
  write_json(o.output, j);
  if (!o.plot.empty()) {
    Output plot(o.plot);
    plot.get() << "model_id\tx\ty\ty_fit\n";
    for (const auto& p : named) {
      plot.get() << p.model_id << '\t' << detail::format_double(p.point.base_acc) << '\t'
                 << detail::format_double(p.point.shift_metric) << '\t'
                 << detail::format_double(inverse_axis_transform(fit.predict(p.point.base_acc), space))
                 << '\n';
    }
    plot.close();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caption subset matching, filtering, ablations and metrics"};
  app.require_subcommand(1);

  MatchOptions label_opts;
  add_match_options(app.add_subcommand("label", "Label every sample of a manifest"), label_opts);

  MatchOptions filter_opts;
  auto* filter = app.add_subcommand("filter", "Keep only labeled (or, with --anticlass, unmatched) samples");
  add_match_options(filter, filter_opts);
  filter->add_flag("--anticlass", filter_opts.anticlass, "Keep samples that match no term");

  TransformOptions tr;
  auto* transform = app.add_subcommand("transform", "Rewrite captions with an ablation transform");
  add_manifest_options(transform, tr.manifest, true);
  transform->add_option("--kind", tr.kind, "Transform")
      ->required()
      ->check(CLI::IsMember(
          {"scramble", "shift_cipher", "token_strip", "simple_caption", "simpler_caption"}));
  transform->add_option("--seed", tr.seed, "Seed for scramble");
  transform->add_option("--shift", tr.shift, "Shift for shift_cipher (1-25)");
  transform->add_option("--whitelist", tr.whitelist, "Token list for token_strip");
  transform->add_option("--lexicon", tr.lexicon, "Token list for simple_caption");
  transform->add_option("--template", tr.caption_template, "Caption template containing CLASSNAME");
  transform->add_option("--termdb", tr.termdb, "Term database for simpler_caption");

  ManifestOptions stats_opts;
  add_manifest_options(app.add_subcommand("stats", "Caption length and vocabulary statistics"),
                       stats_opts, true);

  MetricsOptions mo;
  auto* metrics = app.add_subcommand("metrics", "Robustness or label-quality metrics");
  metrics->add_option("--robustness", mo.robustness, "Robustness CSV");
  metrics->add_option("--input", mo.input, "Labeled manifest with ground truth");
  metrics->add_option("--format", mo.format, "Manifest format")->check(CLI::IsMember({"jsonl", "tsv"}));
  metrics->add_option("--output", mo.output, "Report path ('-' for stdout)");
  metrics->add_option("--agree-with", mo.agree_with, "extra_labels source to compare labels with");
  metrics->add_option("--baseline", mo.baseline, "Trend-point CSV defining the baseline fit");
  metrics->add_option("--space", mo.space, "Axis space of the baseline fit")
      ->check(CLI::IsMember({"linear", "logit", "log10"}));
  metrics->add_option("--z", mo.z, "Normal quantile for half-widths")->check(CLI::PositiveNumber);

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Least-squares trend fit of shift metric on base accuracy");
  fit->add_option("--input", fo.input, "Trend-point CSV (model_id,base_acc,shift_metric)")->required();
  fit->add_option("--output", fo.output, "Fit JSON path ('-' for stdout)");
  fit->add_option("--space", fo.space, "Axis space")->check(CLI::IsMember({"linear", "logit", "log10"}));
  fit->add_option("--plot", fo.plot, "Also write x, y, y_fit rows as TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand("label")) return run_match(label_opts, MatchMode::kLabel);
    if (app.got_subcommand("filter")) return run_match(filter_opts, MatchMode::kFilter);
    if (app.got_subcommand("transform")) return run_transform(tr);
    if (app.got_subcommand("stats")) return run_stats(stats_opts);
    if (app.got_subcommand("metrics")) return run_metrics(mo);
    if (app.got_subcommand("fit")) return run_fit(fo);
  } catch (const ConfigError& e) {
    std::cerr << "capmatch: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "capmatch: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
