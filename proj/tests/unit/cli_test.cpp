// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "smisel/cli.hpp"
#include "support/synthetic.hpp"

namespace smisel {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "smisel_cli_test";
    fs::remove_all(dir_);
    synth::CorpusSpec spec;
    spec.rare_docs = 40;
    spec.common_docs = 200;
    synth::write_files(synth::make_corpus(spec), spec, dir_);
  }

  static CliRun run(std::vector<std::string> args, bool with_inputs = true) {
    std::vector<std::string> argv = {"smisel"};
    argv.insert(argv.end(), args.begin(), args.end());
    if (with_inputs) {
      const std::vector<std::string> inputs = {
          "--dataset",    (dir_ / "corpus.csv").string(),  "--rare-label", "rare",
          "--embeddings", (dir_ / "vectors.txt").string(), "--queries",    (dir_ / "queries.txt").string()};
      argv.insert(argv.end(), inputs.begin(), inputs.end());
    }
    std::vector<const char*> raw;
    for (const auto& a : argv) raw.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(raw.size()), raw.data(), out, err);
    return {code, out.str(), err.str()};
  }

  static std::vector<std::string> small(std::vector<std::string> extra) {
    std::vector<std::string> a = {"--split", "20/100/10/10", "--epochs", "5", "--lr", "0.5"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static inline fs::path dir_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST_F(CliTest, SelectPrintsIdsAndComposition) {
  const auto r = run(cat({"select"}, small({"--strategy", "flvmi", "--budget", "7", "--seed", "3"})));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "seed 3");
  const auto ids = words(l[1]);
  ASSERT_EQ(ids.size(), 8u);
  EXPECT_EQ(ids[0], "selected");
  const auto comp = words(l[2]);
  ASSERT_EQ(comp.size(), 3u);
  EXPECT_EQ(comp[0], "composition");
  EXPECT_EQ(comp[1].rfind("common=", 0), 0u);
  EXPECT_EQ(comp[2].rfind("rare=", 0), 0u);
  EXPECT_EQ(std::stoi(comp[1].substr(7)) + std::stoi(comp[2].substr(5)), 7);
}

TEST_F(CliTest, ExperimentIsByteIdenticalAcrossRuns) {
  const auto args = small({"--strategy", "logdetmi", "--budget", "8", "--trials", "2", "--format",
                           "json"});
  const auto a = run(cat(cat({"experiment"}, args), {"--output", (dir_ / "exp_a").string()}));
  const auto b = run(cat(cat({"experiment"}, args), {"--output", (dir_ / "exp_b").string()}));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(a.out.find("wrote "), std::string::npos);
  const auto ja = slurp(dir_ / "exp_a" / "provenance.json");
  EXPECT_FALSE(ja.empty());
  EXPECT_EQ(ja, slurp(dir_ / "exp_b" / "provenance.json"));
  EXPECT_FALSE(fs::exists(dir_ / "exp_a" / "results.csv"));
}

TEST_F(CliTest, CsvFormatWritesOnlyTheTable) {
  const auto out = dir_ / "csv_only";
  const auto r = run(cat({"experiment"}, small({"--strategy", "random", "--budget", "8", "--format",
                                                 "csv", "--output", out.string()})));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "results.csv"));
  EXPECT_FALSE(fs::exists(out / "provenance.json"));
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const auto cfg = dir_ / "run.ini";
  std::ofstream(cfg) << "strategy = gcmi\nbudget = 9\nsplit = 20/100/10/10\nseed = 4\n";
  const auto from_file = run({"select", "--config", cfg.string()});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(words(lines(from_file.out)[1]).size(), 10u);
  EXPECT_EQ(lines(from_file.out)[0], "seed 4");
  const auto overridden = run({"select", "--config", cfg.string(), "--budget", "5"});
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(words(lines(overridden.out)[1]).size(), 6u);
}

TEST_F(CliTest, AblateWritesOneRowPerFraction) {
  const auto out = dir_ / "ablate";
  const auto r = run(cat({"ablate"}, small({"--strategy", "flqmi", "--budget", "6", "--fractions",
                                             "0.4,1", "--output", out.string()})));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(out / "results.csv")).size(), 3u);
  const auto bad = run(cat({"ablate"}, small({"--strategy", "random", "--budget", "6", "--output",
                                               out.string()})));
  EXPECT_EQ(bad.code, 2);
}

TEST_F(CliTest, SeedListSetsTrialCount) {
  const auto out = dir_ / "seeds";
  const auto r = run(cat({"experiment"}, small({"--strategy", "random", "--budget", "5", "--seeds",
                                                 "8,3", "--output", out.string(), "--format",
                                                 "json"})));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = parse_provenance(slurp(out / "provenance.json"));
  ASSERT_EQ(j.size(), 1u);
  ASSERT_EQ(j[0].trials.size(), 2u);
  EXPECT_EQ(j[0].trials[0].seed, 8u);
  EXPECT_EQ(j[0].trials[1].seed, 3u);
}

TEST_F(CliTest, DatasetTagDefaultsApply) {
  // The youtube split asks for 85 rare documents; this corpus has 40.
  const auto r = run({"select", "--dataset-tag", "youtube"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("insufficient instances of class 'rare'"), std::string::npos) << r.err;
  EXPECT_EQ(run({"select", "--dataset-tag", "imdb"}).code, 2);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"select", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({}, false).code, 2);
  EXPECT_EQ(run(cat({"select"}, small({"--strategy", "oracle", "--budget", "3"}))).code, 2);
  EXPECT_EQ(run(cat({"select"}, small({"--budget", "0"}))).code, 2);
  EXPECT_EQ(run(cat({"select"}, small({"--budget", "3", "--imbalance", "1:10"}))).code, 2);
  EXPECT_EQ(run({"select", "--dataset", "/nonexistent.csv", "--rare-label", "x", "--embeddings",
                 "/nonexistent.txt", "--budget", "3", "--split", "1/1/1/1"},
                false)
                .code,
            4);
  const auto blocked = dir_ / "blocked";
  std::ofstream(blocked) << "x";
  EXPECT_EQ(run(cat({"experiment"}, small({"--strategy", "random", "--budget", "3", "--output",
                                           (blocked / "out").string()})))
                .code,
            4);
  const auto help = run({"--help"}, false);
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("--strategy"), std::string::npos);
}

}  // namespace
}  // namespace smisel
