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

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "capmatch/corpus.hpp"

namespace capmatch {
namespace {

std::vector<Sample> parse(const std::string& text, ManifestFormat format = ManifestFormat::kJsonl) {
  std::istringstream in(text);
  return parse_manifest(in, format);
}

std::string write(const std::vector<Sample>& samples, ManifestFormat format,
                  bool tsv_labels = false) {
  std::ostringstream out;
  write_manifest(out, samples, format, tsv_labels);
  return out.str();
}

TEST(ParseManifest, JsonlFieldMapping) {
  const auto s = parse(R"({"id":"a1","title":"a lion","tags":["zoo"],"description":""})" "\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].id, "a1");
  EXPECT_EQ(s[0].title, "a lion");
  EXPECT_EQ(s[0].tags, std::vector<std::string>{"zoo"});
  EXPECT_EQ(s[0].description, "");
  EXPECT_EQ(s[0].alt_text, "");
  EXPECT_FALSE(s[0].ground_truth);
  EXPECT_FALSE(s[0].labels);
}

TEST(ParseManifest, EmptyStream) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("\n  \n").empty());
}

TEST(ParseManifest, DuplicateIdNamesId) {
  try {
    parse("{\"id\":\"a1\"}\n{\"id\":\"a1\"}\n");
    FAIL() << "expected duplicate id error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("a1"), std::string::npos);
  }
}

TEST(ParseManifest, MalformedLineCarriesLineNumber) {
  try {
    parse("{\"id\":\"a\"}\n\n{\"id\": \n");
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("[1,2]\n"), ParseError);
  EXPECT_THROW(parse("{\"title\":\"x\"}\n"), ParseError);
  EXPECT_THROW(parse("{\"id\":\"x\",\"tags\":\"zoo\"}\n"), ParseError);
  EXPECT_THROW(parse("{\"id\":\"x\",\"ground_truth\":-1}\n"), ParseError);
  EXPECT_THROW(parse("{\"id\":\"x\",\"labels\":[1.5]}\n"), ParseError);
}

TEST(ParseManifest, UnknownFieldsSurviveRoundTrip) {
  const std::string line =
      R"({"id":"a","title":"t","tags":[],"description":"","alt_text":"","url":"http://x","meta":{"k":[1,2]}})"
      "\n";
  EXPECT_EQ(write(parse(line), ManifestFormat::kJsonl), line);
}

TEST(ParseManifest, TsvHeaderAndRows) {
  const std::string text =
      "id\ttitle\ttags\tdescription\talt_text\tground_truth\n"
      "a\tred barn\tfarm|ohio\told barn\t\t3\n"
      "b\t\t\t\t\t\n";
  const auto s = parse(text, ManifestFormat::kTsv);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].tags, (std::vector<std::string>{"farm", "ohio"}));
  EXPECT_EQ(s[0].ground_truth, 3u);
  EXPECT_TRUE(s[1].tags.empty());
  EXPECT_FALSE(s[1].ground_truth);
  EXPECT_EQ(write(s, ManifestFormat::kTsv), text);
}

TEST(ParseManifest, TsvErrors) {
  EXPECT_THROW(parse("id\ttitle\n", ManifestFormat::kTsv), ParseError);
  EXPECT_THROW(parse("id\ttitle\ttags\tdescription\talt_text\tground_truth\na\tb\n",
                     ManifestFormat::kTsv),
               ParseError);
  EXPECT_THROW(parse("id\ttitle\ttags\tdescription\talt_text\tground_truth\na\t\t\t\t\tx\n",
                     ManifestFormat::kTsv),
               ParseError);
}

TEST(ComposeCaption, Sources) {
  Sample s;
  s.title = "red barn";
  s.tags = {"farm", "ohio"};
  s.description = "old barn";
  s.alt_text = "a barn";
  EXPECT_EQ(compose_caption(s, CaptionSource::kTtd), "red barn farm ohio old barn");
  EXPECT_EQ(compose_caption(s, CaptionSource::kTitle), "red barn");
  EXPECT_EQ(compose_caption(s, CaptionSource::kTags), "farm ohio");
  EXPECT_EQ(compose_caption(s, CaptionSource::kTitleTags), "red barn farm ohio");
  EXPECT_EQ(compose_caption(s, CaptionSource::kDescr), "old barn");
  EXPECT_EQ(compose_caption(s, CaptionSource::kAltText), "a barn");
  EXPECT_EQ(compose_caption(Sample{}, CaptionSource::kTtd), "");
}

TEST(ComposeCaption, SkipsEmptyParts) {
  Sample s;
  s.description = "only descr";
  EXPECT_EQ(compose_caption(s, CaptionSource::kTtd), "only descr");
  s.tags = {"", "x"};
  EXPECT_EQ(compose_caption(s, CaptionSource::kTtd), "x only descr");
}

TEST(ReplaceCaption, ComposeReturnsReplacement) {
  for (auto src : {CaptionSource::kTitle, CaptionSource::kTags, CaptionSource::kDescr,
                   CaptionSource::kTitleTags, CaptionSource::kTtd, CaptionSource::kAltText}) {
    Sample s;
    s.title = "t";
    s.tags = {"a", "b"};
    s.description = "d";
    replace_caption(s, src, "new caption");
    EXPECT_EQ(compose_caption(s, src), "new caption") << to_string(src);
  }
}

TEST(WriteManifest, LabelsField) {
  Sample s;
  s.id = "x";
  s.labels = std::vector<ClassIndex>{7};
  const auto out = write({s}, ManifestFormat::kJsonl);
  EXPECT_NE(out.find("\"labels\":[7]"), std::string::npos);
  EXPECT_EQ(write({s}, ManifestFormat::kTsv, true),
            "id\ttitle\ttags\tdescription\talt_text\tground_truth\tlabels\nx\t\t\t\t\t\t7\n");
}

TEST(WriteManifest, EmptyTsvStillHasHeader) {
  EXPECT_EQ(write({}, ManifestFormat::kTsv), "id\ttitle\ttags\tdescription\talt_text\tground_truth\n");
  EXPECT_EQ(write({}, ManifestFormat::kJsonl), "");
}

std::string random_text(std::mt19937_64& rng, bool allow_controls) {
  static const std::vector<std::string> pieces = {
      "a", "lion", " ", "|", "\\", "\"", "é", "猫", ",", "0", "\\|", "{", "}"};
  static const std::vector<std::string> controls = {"\t", "\n", "\r"};
  std::uniform_int_distribution<int> len(0, 8), which(0, 9);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (allow_controls && which(rng) == 0) {
      out += controls[rng() % controls.size()];
    } else {
      out += pieces[rng() % pieces.size()];
    }
  }
  return out;
}

std::vector<Sample> random_samples(std::mt19937_64& rng, bool tsv) {
  std::vector<Sample> out;
  const std::size_t n = rng() % 20;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = "id" + std::to_string(i) + "/" + random_text(rng, true);
    s.title = random_text(rng, true);
    const std::size_t nt = rng() % 4;
    for (std::size_t t = 0; t < nt; ++t) {
      // An all-empty tag list cannot be told apart from "no tags" in TSV.
      std::string tag = random_text(rng, true);
      if (tsv && tag.empty()) tag = "x";
      s.tags.push_back(tag);
    }
    s.description = random_text(rng, true);
    s.alt_text = random_text(rng, true);
    if (rng() % 2) s.ground_truth = static_cast<ClassIndex>(rng() % 1000);
    if (rng() % 2) {
      s.labels.emplace();
      const std::size_t nl = rng() % 4;
      for (std::size_t l = 0; l < nl; ++l) s.labels->push_back(static_cast<ClassIndex>(rng() % 100));
    }
    if (!tsv && rng() % 3 == 0) s.extra_labels["clip"] = {static_cast<ClassIndex>(rng() % 100)};
    if (!tsv && rng() % 3 == 0) s.unknown["source"] = random_text(rng, true);
    out.push_back(std::move(s));
  }
  return out;
}

TEST(WriteManifest, JsonlRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 500; ++iter) {
    const auto samples = random_samples(rng, false);
    EXPECT_EQ(parse(write(samples, ManifestFormat::kJsonl)), samples);
  }
}

TEST(WriteManifest, TsvRoundTripProperty) {
  std::mt19937_64 rng(12);
  for (int iter = 0; iter < 500; ++iter) {
    const auto samples = random_samples(rng, true);
    const auto text = write(samples, ManifestFormat::kTsv, true);
    auto back = parse(text, ManifestFormat::kTsv);
    // The labels column always yields a (possibly empty) list.
    auto want = samples;
    for (auto& s : want) {
      if (!s.labels) s.labels.emplace();
    }
    EXPECT_EQ(back, want);
  }
}

TEST(ComposeCaption, TitleIsPrefixOfTtdProperty) {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 500; ++iter) {
    for (const auto& s : random_samples(rng, false)) {
      const auto title = compose_caption(s, CaptionSource::kTitle);
      if (title.empty()) continue;
      EXPECT_EQ(compose_caption(s, CaptionSource::kTtd).rfind(title, 0), 0u);
    }
  }
}

TEST(ManifestReader, StreamsWithoutMaterializing) {
  std::stringstream in;
  for (int i = 0; i < 10000; ++i) in << "{\"id\":\"" << i << "\"}\n";
  ManifestReader reader(in, ManifestFormat::kJsonl);
  std::size_t n = 0;
  while (auto s = reader.next()) {
    EXPECT_EQ(s->id, std::to_string(n));
    ++n;
  }
  EXPECT_EQ(n, 10000u);
}

TEST(CaptionSourceNames, ParseAndPrint) {
  for (auto name : {"title", "tags", "descr", "titletags", "ttd", "alt_text"}) {
    EXPECT_EQ(to_string(parse_caption_source(name)), name);
  }
  EXPECT_THROW(parse_caption_source("body"), ConfigError);
  EXPECT_THROW(parse_manifest_format("csv"), ConfigError);
}

}  // namespace
}  // namespace capmatch
