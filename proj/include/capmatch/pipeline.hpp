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

// Batch-parallel manifest processing. Lines are read serially, parsed and
// processed in parallel, and handed back serially in input order, so the
// output never depends on the worker count.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "capmatch/corpus.hpp"
#include "capmatch/matcher.hpp"

namespace capmatch {

/// Runs fn(i) for i in [0, n) on up to `workers` threads, in contiguous
/// chunks. Exceptions are rethrown from the lowest failing chunk.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(n, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Corpus-level counts. `per_class[k]` is the number of samples carrying
/// label k.
struct CorpusTallies {
  std::uint64_t total = 0;
  std::uint64_t matched = 0;
  std::uint64_t labeled = 0;
  std::vector<std::uint64_t> per_class;

  explicit CorpusTallies(std::size_t classes = 0) : per_class(classes, 0) {}

  double hit_rate() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
  }

  void add(const MatchOutcome& o) {
    ++total;
    if (o.matched) ++matched;
    if (!o.labels.empty()) ++labeled;
    for (auto k : o.labels) {
      if (k >= per_class.size()) per_class.resize(k + 1, 0);
      ++per_class[k];
    }
  }

  void merge(const CorpusTallies& other) {
    total += other.total;
    matched += other.matched;
    labeled += other.labeled;
    if (other.per_class.size() > per_class.size()) per_class.resize(other.per_class.size(), 0);
    for (std::size_t k = 0; k < other.per_class.size(); ++k) per_class[k] += other.per_class[k];
  }

  friend bool operator==(const CorpusTallies&, const CorpusTallies&) = default;
};

struct PipelineOptions {
  std::size_t workers = 1;
  std::size_t batch_size = 4096;
};

/// Streams a manifest through `work`, which maps a parsed Sample to a result
/// and may run concurrently. `emit` receives (Sample, result) serially in
/// input order. Errors surface exactly as a serial ManifestReader loop would
/// raise them.
template <typename Work, typename Emit>
void process_manifest(ManifestReader& reader, const PipelineOptions& options, Work&& work,
                      Emit&& emit) {
  using Result = std::invoke_result_t<Work&, const Sample&>;
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  std::vector<ManifestReader::RawRecord> raws(batch);
  std::vector<std::optional<Sample>> samples(batch);
  std::vector<std::exception_ptr> parse_errors(batch);
  std::vector<std::optional<Result>> results(batch);
  while (true) {
    std::size_t n = 0;
    while (n < batch && reader.next_raw(raws[n])) ++n;
    if (n == 0) break;
    parallel_for(n, options.workers, [&](std::size_t i) {
      samples[i].reset();
      parse_errors[i] = nullptr;
      try {
        samples[i].emplace(reader.parse(raws[i]));
      } catch (...) {
        parse_errors[i] = std::current_exception();
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (parse_errors[i]) std::rethrow_exception(parse_errors[i]);
      reader.claim_id(*samples[i], raws[i].line);
    }
    parallel_for(n, options.workers, [&](std::size_t i) { results[i].emplace(work(*samples[i])); });
    for (std::size_t i = 0; i < n; ++i) {
      emit(std::move(*samples[i]), std::move(*results[i]));
      results[i].reset();
    }
    if (n < batch) break;
  }
}

struct CorpusMatch {
  std::vector<MatchOutcome> outcomes;  // input order
  CorpusTallies tallies;
};

/// Matches an in-memory corpus.
inline CorpusMatch match_corpus(const std::vector<Sample>& samples, CaptionSource source,
                                const Matcher& matcher, std::size_t workers = 1) {
  CorpusMatch out;
  out.outcomes.resize(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    out.outcomes[i] = matcher.match(compose_caption(samples[i], source), samples[i].id);
  });
  out.tallies = CorpusTallies(matcher.num_classes());
  for (const auto& o : out.outcomes) out.tallies.add(o);
  return out;
}

/// Matches a streamed corpus; `sink(sample, outcome)` is called in input
/// order. Returns the tallies.
template <typename Sink>
CorpusTallies match_corpus(ManifestReader& reader, CaptionSource source, const Matcher& matcher,
                           const PipelineOptions& options, Sink&& sink) {
  CorpusTallies tallies(matcher.num_classes());
  process_manifest(
      reader, options,
      [&](const Sample& s) { return matcher.match(compose_caption(s, source), s.id); },
      [&](Sample&& s, MatchOutcome&& o) {
        tallies.add(o);
        sink(std::move(s), std::move(o));
      });
  return tallies;
}

}  // namespace capmatch
