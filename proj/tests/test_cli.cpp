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


// Runs the capmatch binary end to end on temporary files.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("capmatch_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("terms.tsv", "0\tlion\tlion|lions\n1\tgoose\tgoose|geese\n");
    write("three.jsonl",
          R"({"id":"a","title":"A lion resting","tags":["zoo"],"description":""})" "\n"
          R"({"id":"b","title":"sunset","tags":[],"description":"over water"})" "\n"
          R"({"id":"c","title":"beach","tags":["sand"],"description":""})" "\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::vector<std::string> lines(const std::string& name) const {
    std::vector<std::string> out;
    std::istringstream in(read(name));
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  // Exit status of `capmatch <args>`; stderr goes to err.txt.
  int run(const std::string& args) const {
    const std::string cmd =
        std::string("'") + CAPMATCH_CLI + "' " + args + " 2>'" + path("err.txt") + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

TEST_F(Cli, LabelWritesManifestAndStats) {
  ASSERT_EQ(run("label --input " + path("three.jsonl") + " --termdb " + path("terms.tsv") +
                " --output " + path("out.jsonl")),
            0)
      << read("err.txt");
  const auto out = lines("out.jsonl");
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(ordered_json::parse(out[0])["labels"], ordered_json::parse("[0]"));
  EXPECT_EQ(ordered_json::parse(out[1])["labels"], ordered_json::parse("[]"));
  const auto stats = ordered_json::parse(read("out.jsonl.stats.json"));
  EXPECT_EQ(stats["tallies"]["total"], 3);
  EXPECT_EQ(stats["tallies"]["matched"], 1);
  EXPECT_EQ(stats["tallies"]["per_class"], ordered_json::parse("[1,0]"));
  EXPECT_EQ(stats["strategy"], "sc");
}

TEST_F(Cli, StrictLeavesTwoClassCaptionUnlabeled) {
  write("two.jsonl", R"({"id":"x","title":"a lion chasing a goose"})" "\n");
  ASSERT_EQ(run("label --strategy strict --input " + path("two.jsonl") + " --termdb " +
                path("terms.tsv") + " --output " + path("out.jsonl")),
            0);
  EXPECT_EQ(ordered_json::parse(lines("out.jsonl")[0])["labels"], ordered_json::parse("[]"));
  ASSERT_EQ(run("label --strategy mc --input " + path("two.jsonl") + " --termdb " +
                path("terms.tsv") + " --output " + path("mc.jsonl")),
            0);
  EXPECT_EQ(ordered_json::parse(lines("mc.jsonl")[0])["labels"], ordered_json::parse("[0,1]"));
}

TEST_F(Cli, FilterAndAnticlassPartitionInput) {
  const std::string common = " --input " + path("three.jsonl") + " --termdb " + path("terms.tsv");
  ASSERT_EQ(run("filter" + common + " --output " + path("kept.jsonl")), 0);
  ASSERT_EQ(run("filter --anticlass" + common + " --output " + path("anti.jsonl")), 0);
  const auto kept = lines("kept.jsonl");
  const auto anti = lines("anti.jsonl");
  ASSERT_EQ(kept.size(), 1u);
  ASSERT_EQ(anti.size(), 2u);
  std::vector<std::string> ids;
  for (const auto& l : kept) ids.push_back(ordered_json::parse(l)["id"]);
  for (const auto& l : anti) ids.push_back(ordered_json::parse(l)["id"]);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));
  // --strategy anticlass is the same selection.
  ASSERT_EQ(run("filter --strategy anticlass" + common + " --output " + path("anti2.jsonl")), 0);
  EXPECT_EQ(read("anti2.jsonl"), read("anti.jsonl"));
}

TEST_F(Cli, WorkersDoNotChangeOutput) {
  std::string text;
  for (int i = 0; i < 5000; ++i) {
    text += "{\"id\":\"" + std::to_string(i) + "\",\"title\":\"" +
            (i % 3 == 0 ? "lion" : i % 3 == 1 ? "geese and lions" : "tree") + "\"}\n";
  }
  write("many.jsonl", text);
  const std::string common = "label --strategy mc --input " + path("many.jsonl") + " --termdb " +
                             path("terms.tsv");
  ASSERT_EQ(run(common + " --workers 1 --output " + path("w1.jsonl")), 0);
  ASSERT_EQ(run(common + " --workers 8 --output " + path("w8.jsonl")), 0);
  EXPECT_EQ(read("w1.jsonl"), read("w8.jsonl"));
  EXPECT_EQ(read("w1.jsonl.stats.json"), read("w8.jsonl.stats.json"));
}

TEST_F(Cli, TsvLabelRoundTrip) {
  write("in.tsv",
        "id\ttitle\ttags\tdescription\talt_text\tground_truth\n"
        "a\tlion\t\t\t\t0\n"
        "b\tgeese\t\t\t\t0\n");
  ASSERT_EQ(run("label --format tsv --input " + path("in.tsv") + " --termdb " +
                path("terms.tsv") + " --output " + path("out.tsv")),
            0);
  EXPECT_EQ(read("out.tsv"),
            "id\ttitle\ttags\tdescription\talt_text\tground_truth\tlabels\n"
            "a\tlion\t\t\t\t0\t0\n"
            "b\tgeese\t\t\t\t0\t1\n");
  ASSERT_EQ(run("metrics --format tsv --input " + path("out.tsv") + " --output " + path("q.json")), 0)
      << read("err.txt");
  const auto q = ordered_json::parse(read("q.json"))["label_quality"];
  EXPECT_EQ(q["correct"], 1);
  EXPECT_EQ(q["incorrect"], 1);
  EXPECT_EQ(q["accuracy"], 0.5);
}

TEST_F(Cli, ExitCodes) {
  // Config errors: 1.
  EXPECT_EQ(run("label --input " + path("three.jsonl")), 1);  // missing --termdb
  EXPECT_EQ(run("label --input x --termdb y --strategy greedy"), 1);
  EXPECT_EQ(run("label --input x --termdb y --fuzzy-threshold 101"), 1);
  EXPECT_EQ(run("transform --input x --kind shift_cipher --shift 26"), 1);
  EXPECT_EQ(run("transform --input x --kind simple_caption"), 1);
  EXPECT_EQ(run("metrics --input a --robustness b"), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run(""), 1);
  // Data errors: 2.
  EXPECT_EQ(run("label --input " + path("three.jsonl") + " --termdb " + path("nope.tsv")), 2);
  write("dup.jsonl", "{\"id\":\"a\"}\n{\"id\":\"a\"}\n");
  EXPECT_EQ(run("label --input " + path("dup.jsonl") + " --termdb " + path("terms.tsv") +
                " --output " + path("o.jsonl")),
            2);
  EXPECT_NE(read("err.txt").find("duplicate"), std::string::npos);
  write("bad_terms.tsv", "0\tlion\n0\tgoose\n");
  EXPECT_EQ(run("label --input " + path("three.jsonl") + " --termdb " + path("bad_terms.tsv")), 2);
  EXPECT_EQ(run("--help > /dev/null"), 0);
}

TEST_F(Cli, TransformShiftCipher) {
  write("abc.jsonl", R"({"id":"x","title":"abc"})" "\n");
  ASSERT_EQ(run("transform --kind shift_cipher --shift 1 --caption-source title --input " +
                path("abc.jsonl") + " --output " + path("out.jsonl")),
            0);
  EXPECT_EQ(ordered_json::parse(lines("out.jsonl")[0])["title"], "bcd");
}

TEST_F(Cli, TransformScrambleIsReproducible) {
  const std::string args = "transform --kind scramble --seed 42 --input " + path("three.jsonl");
  ASSERT_EQ(run(args + " --workers 1 --output " + path("s1.jsonl")), 0);
  ASSERT_EQ(run(args + " --workers 4 --output " + path("s2.jsonl")), 0);
  EXPECT_EQ(read("s1.jsonl"), read("s2.jsonl"));
  // ttd scramble lands in the title; tags and description are cleared.
  const auto first = ordered_json::parse(lines("s1.jsonl")[0]);
  EXPECT_EQ(first["tags"], ordered_json::array());
  EXPECT_EQ(first["title"].get<std::string>().size(), std::string("A lion resting zoo").size());
}

TEST_F(Cli, TransformSimpleAndSimplerCaption) {
  write("lex.txt", "lion\nsand\n");
  ASSERT_EQ(run("transform --kind simple_caption --lexicon " + path("lex.txt") + " --input " +
                path("three.jsonl") + " --output " + path("simple.jsonl")),
            0);
  const auto simple = lines("simple.jsonl");
  EXPECT_EQ(ordered_json::parse(simple[0])["title"], "an image of a lion");
  EXPECT_EQ(ordered_json::parse(simple[1])["title"], "");
  EXPECT_EQ(ordered_json::parse(simple[2])["title"], "an image of a sand");

  write("gt.jsonl", R"({"id":"x","title":"whatever","ground_truth":1})" "\n");
  ASSERT_EQ(run("transform --kind simpler_caption --termdb " + path("terms.tsv") +
                " --template 'A photo of a CLASSNAME' --input " + path("gt.jsonl") +
                " --output " + path("simpler.jsonl")),
            0);
  EXPECT_EQ(ordered_json::parse(lines("simpler.jsonl")[0])["title"], "a photo of a goose");

  write("empty_lex.txt", "\n");
  EXPECT_EQ(run("transform --kind simple_caption --lexicon " + path("empty_lex.txt") +
                " --input " + path("three.jsonl")),
            2);
}

TEST_F(Cli, TransformTokenStrip) {
  write("wl.txt", "lion\n");
  ASSERT_EQ(run("transform --kind token_strip --whitelist " + path("wl.txt") + " --input " +
                path("three.jsonl") + " --output " + path("out.jsonl")),
            0);
  EXPECT_EQ(ordered_json::parse(lines("out.jsonl")[0])["title"], "0 lion 0 0");
}

TEST_F(Cli, Stats) {
  ASSERT_EQ(run("stats --caption-source title --input " + path("three.jsonl") + " --output " +
                path("s.json")),
            0);
  const auto s = ordered_json::parse(read("s.json"))["stats"];
  EXPECT_EQ(s["count"], 3);
  EXPECT_EQ(s["unique_tokens"], 5);  // a lion resting sunset beach
}

TEST_F(Cli, MetricsRobustnessAndAgreement) {
  write("rob.csv",
        "model_id,base_acc,in_a,in_r,in_s,in_v2,n_base,n_shift\n"
        "in100-sup,0.801,0.094,0.230,0.297,0.710,5000,\n");
  ASSERT_EQ(run("metrics --robustness " + path("rob.csv") + " --output " + path("m.json")), 0)
      << read("err.txt");
  const auto r = ordered_json::parse(read("m.json"))["records"][0];
  EXPECT_NEAR(r["avg_rob"].get<double>(), 0.33275, 1e-12);
  EXPECT_NEAR(r["err"].get<double>(), 0.33275 / 0.801, 1e-12);
  EXPECT_NEAR(r["base_acc_halfwidth"].get<double>(), 0.011, 0.0005);

  write("agree.jsonl",
        R"({"id":"a","labels":[1],"ground_truth":1,"extra_labels":{"clip":[1]}})" "\n"
        R"({"id":"b","labels":[2],"ground_truth":1,"extra_labels":{"clip":[1]}})" "\n"
        R"({"id":"c","labels":[],"ground_truth":1,"extra_labels":{"clip":[1]}})" "\n");
  ASSERT_EQ(run("metrics --agree-with clip --input " + path("agree.jsonl") + " --output " +
                path("a.json")),
            0)
      << read("err.txt");
  const auto a = ordered_json::parse(read("a.json"));
  EXPECT_EQ(a["agreement"]["fraction"], 0.5);
  EXPECT_EQ(a["label_quality"]["unlabeled"], 1);

  write("nogt.jsonl", R"({"id":"a","labels":[1]})" "\n");
  EXPECT_EQ(run("metrics --input " + path("nogt.jsonl")), 2);
}

TEST_F(Cli, FitWithPlot) {
  write("pts.csv", "model_id,base_acc,shift_metric\na,0.2,0.1\nb,0.4,0.2\nc,0.8,0.4\n");
  ASSERT_EQ(run("fit --space linear --input " + path("pts.csv") + " --output " + path("f.json") +
                " --plot " + path("plot.tsv")),
            0);
  const auto f = ordered_json::parse(read("f.json"));
  EXPECT_NEAR(f["r2"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(f["slope"].get<double>(), 0.5, 1e-12);
  const auto plot = lines("plot.tsv");
  ASSERT_EQ(plot.size(), 4u);
  EXPECT_EQ(plot[0], "model_id\tx\ty\ty_fit");
  EXPECT_EQ(run("fit --input " + path("pts.csv") + " --space probit"), 1);
}

TEST_F(Cli, FitOnYfccFixture) {
  ASSERT_EQ(run(std::string("fit --space linear --input ") + CAPMATCH_FIXTURES +
                "/trend_yfcc.csv --output " + path("f.json")),
            0)
      << read("err.txt");
  const double r2 = ordered_json::parse(read("f.json"))["r2"].get<double>();
  EXPECT_GE(r2, 0.80);
  EXPECT_LE(r2, 0.90);
}

TEST_F(Cli, SynsetExpansionInLabel) {
  write("lex.jsonl", R"({"word":"lion","synonym":["panthera leo"]})" "\n");
  write("leo.jsonl", R"({"id":"x","title":"a Panthera leo"})" "\n");
  ASSERT_EQ(run("label --synset-lexicon " + path("lex.jsonl") +
                " --synset-relations synonym --input " + path("leo.jsonl") + " --termdb " +
                path("terms.tsv") + " --output " + path("out.jsonl")),
            0)
      << read("err.txt");
  EXPECT_EQ(ordered_json::parse(lines("out.jsonl")[0])["labels"], ordered_json::parse("[0]"));
  EXPECT_EQ(run("label --synset-lexicon " + path("lex.jsonl") + " --input " + path("leo.jsonl") +
                " --termdb " + path("terms.tsv")),
            1);
}

TEST_F(Cli, IdempotentOutputs) {
  const std::string args = "label --fuzzy --input " + path("three.jsonl") + " --termdb " +
                           path("terms.tsv") + " --output ";
  ASSERT_EQ(run(args + path("r1.jsonl")), 0);
  ASSERT_EQ(run(args + path("r2.jsonl")), 0);
  EXPECT_EQ(read("r1.jsonl"), read("r2.jsonl"));
  EXPECT_EQ(read("r1.jsonl.stats.json"), read("r2.jsonl.stats.json"));
}

}  // namespace
