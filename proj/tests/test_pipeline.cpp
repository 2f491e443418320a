// Copyright 2026 The TriDep Authors. All Rights Reserved.
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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tridep/error.hpp"
#include "tridep/pipeline.hpp"
#include "tridep/synth.hpp"

namespace {

namespace pl = tridep::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

json base_config() {
  std::ifstream in(fs::path(TRIDEP_SOURCE_DIR) / "configs" / "synthetic_trimodal.json");
  return json::parse(in);
}

std::string config_error(const json& j) {
  try {
    pl::parse_config(j.dump());
  } catch (const tridep::ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRIDEP_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Config, ShippedConfigParses) {
  const auto cfg = pl::parse_config(base_config().dump());
  EXPECT_EQ(cfg.k, 5);
  EXPECT_EQ(cfg.modalities.size(), 3u);
  EXPECT_EQ(cfg.fusion.size(), 4u);
  const auto* eeg = cfg.find(tridep::Modality::kEeg);
  ASSERT_NE(eeg, nullptr);
  EXPECT_EQ(eeg->encoder.input_dim, 290u);
  EXPECT_EQ(cfg.find(tridep::Modality::kSpeech)->encoder.input_dim, 46u);
  EXPECT_FALSE(cfg.fusion[1].prior.has_value());
  EXPECT_EQ(cfg.fusion[0].describe(), "EEG + Speech + Text (0.2 : 0.4 : 0.4)");
}

TEST(Config, CanonicalJsonRoundTrips) {
  const auto cfg = pl::parse_config(base_config().dump());
  const auto text = pl::config_to_json(cfg);
  EXPECT_EQ(pl::config_to_json(pl::parse_config(text)), text);
  EXPECT_EQ(pl::fnv1a64(text), pl::fnv1a64(pl::config_to_json(pl::parse_config(text))));
  EXPECT_EQ(pl::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(pl::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, UnknownEncoder) {
  auto j = base_config();
  j["modalities"]["eeg"]["encoder"]["kind"] = "transformer_xl";
  EXPECT_NE(config_error(j).find("unknown encoder 'transformer_xl'"), std::string::npos);
}

TEST(Config, EncoderAndKindMustMatchModality) {
  auto j = base_config();
  j["modalities"]["eeg"]["encoder"]["kind"] = "text_lstm";
  j["modalities"]["text"]["feature_kind"] = "mfcc";
  const auto err = config_error(j);
  EXPECT_NE(err.find("does not apply"), std::string::npos);
  EXPECT_NE(err.find("does not belong"), std::string::npos);
}

TEST(Config, ReportsEveryProblem) {
  auto j = base_config();
  j["k"] = 1;
  j["fusion"][0]["weights"] = {0.5, 0.4, 0.4};
  j["fusion"][1]["prior"] = 1.5;
  j["fusion"][3]["modalities"] = {"eeg"};
  j["modalities"]["speech"]["train"]["learning_rate"] = 0.0;
  const auto err = config_error(j);
  EXPECT_NE(err.find("k must be"), std::string::npos);
  EXPECT_NE(err.find("weights sum"), std::string::npos);
  EXPECT_NE(err.find("prior"), std::string::npos);
  EXPECT_NE(err.find("majority_vote needs"), std::string::npos);
  EXPECT_NE(err.find("learning_rate"), std::string::npos);
  EXPECT_NE(err.find("5 problems"), std::string::npos) << err;
}

TEST(Config, FusionNeedsConfiguredModalities) {
  auto j = base_config();
  j["modalities"].erase("text");
  EXPECT_NE(config_error(j).find("'text' is not configured"), std::string::npos);
}

TEST(Config, StructuralErrors) {
  EXPECT_THROW(pl::parse_config("{"), tridep::ConfigError);
  EXPECT_THROW(pl::parse_config("[]"), tridep::ConfigError);
  auto j = base_config();
  j["extra"] = 1;
  j["modalities"]["smell"] = json::object();
  j["modalities"]["eeg"]["encoder"]["hidden"] = "big";
  const auto err = config_error(j);
  EXPECT_NE(err.find("unknown field 'extra'"), std::string::npos);
  EXPECT_NE(err.find("unknown modality 'smell'"), std::string::npos);
  EXPECT_NE(err.find("hidden: wrong type"), std::string::npos);
  EXPECT_THROW(pl::load_config("/nonexistent/config.json"), tridep::ConfigError);
}

TEST(Report, TextLayout) {
  pl::ReportSet rs;
  rs.k = 2;
  rs.seed = 7;
  tridep::eval::MetricsReport m = tridep::eval::aggregate({{0.8, 0.75}, {0.9, 0.85}});
  rs.rows.push_back({"EEG", "handcrafted + eeg_gru_attn", m});
  rs.rows.push_back({"Majority Voting", "EEG + Speech + Text", m});
  const auto text = pl::render_report_text(rs);
  EXPECT_NE(text.find("0.850 ± 0.071"), std::string::npos);
  EXPECT_NE(text.find("Majority Voting"), std::string::npos);
  const auto j = json::parse(pl::render_report_json(rs));
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][0]["f1"], "0.850 ± 0.071");
}

TEST(Posteriors, JsonRoundTrip) {
  std::vector<pl::PosteriorRecord> r = {{"sub-001", tridep::Modality::kText, 0.25, 0.75, 1}};
  const auto back = pl::posteriors_from_json(pl::posteriors_to_json(r));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].subject_id, "sub-001");
  EXPECT_EQ(back[0].modality, tridep::Modality::kText);
  EXPECT_EQ(back[0].p1, 0.75);
  EXPECT_EQ(back[0].true_label, 1);
}

class PipelineRun : public ::testing::Test {
 protected:
  static fs::path root;

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / ("tridep_pipeline_test_" + std::to_string(::getpid()));
    fs::remove_all(root);
    tridep::synth::SynthSpec s;
    s.n_subjects = 8;
    s.eeg_seconds = 30.0;
    s.speech_seconds = 6.0;
    s.recordings = 2;
    s.eeg_alpha_shift = 4.0;
    s.speech_f0_shift = 40.0;
    s.text_embedding_shift = 0.5;
    tridep::synth::generate(s, root / "data");
    auto j = base_config();
    j["dataset_root"] = (root / "data").string();
    j["output_dir"] = (root / "out_a").string();
    j["k"] = 2;
    for (auto& [name, m] : j["modalities"].items()) {
      m["encoder"]["hidden"] = 4;
      m["train"]["max_epochs"] = 3;
    }
    std::ofstream(root / "config.json") << j.dump(2);
  }
  static void TearDownTestSuite() { fs::remove_all(root); }
};
fs::path PipelineRun::root;

TEST_F(PipelineRun, CliRunIsDeterministicAndComplete) {
  const auto cfg = (root / "config.json").string();
  ASSERT_EQ(run_cli("run -q --config " + cfg), 0);
  ASSERT_EQ(run_cli("run -q --config " + cfg + " --out " + (root / "out_b").string()), 0);
  const auto a = root / "out_a", b = root / "out_b";
  EXPECT_EQ(slurp(a / "report.txt"), slurp(b / "report.txt"));
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "split.json"), slurp(b / "split.json"));

  const auto report = json::parse(slurp(a / "report.json"));
  ASSERT_EQ(report["rows"].size(), 7u);
  EXPECT_EQ(report["rows"][0]["category"], "EEG");
  EXPECT_EQ(report["rows"][6]["category"], "Majority Voting");

  const auto manifest = json::parse(slurp(a / "run_manifest.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["version"], std::string(pl::kVersion));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);

  for (const char* mod : {"eeg", "speech", "text"}) {
    for (int f = 1; f <= 2; ++f) {
      EXPECT_TRUE(fs::exists(a / "posteriors" / mod / ("fold_" + std::to_string(f) + ".json")));
      EXPECT_TRUE(fs::exists(a / "models" / mod / ("fold_" + std::to_string(f)) / "checkpoint.json"));
    }
  }
}

TEST_F(PipelineRun, PosteriorsComeOnlyFromHeldOutSubjects) {
  const auto cfg = (root / "config.json").string();
  const auto out = root / "out_c";
  ASSERT_EQ(run_cli("run -q --config " + cfg + " --out " + out.string()), 0);
  const auto plan = tridep::eval::load_plan(out / "split.json");
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto recs = pl::posteriors_from_json(
        slurp(out / "posteriors" / "text" / ("fold_" + std::to_string(f + 1) + ".json")));
    std::vector<std::string> ids;
    for (const auto& r : recs) ids.push_back(r.subject_id);
    EXPECT_EQ(ids, plan.folds[f]);
  }
}

TEST_F(PipelineRun, StagesCanRunSeparately) {
  const auto cfg = (root / "config.json").string();
  const auto out = " --out " + (root / "out_d").string();
  EXPECT_EQ(run_cli("train -q --config " + cfg + out), 3);  // no split yet
  for (const char* stage : {"split", "preprocess", "features", "train", "fuse", "report"}) {
    ASSERT_EQ(run_cli(std::string(stage) + " -q --config " + cfg + out), 0) << stage;
  }
  EXPECT_TRUE(fs::exists(root / "out_d" / "preprocessed"));
  EXPECT_TRUE(fs::exists(root / "out_d" / "report.txt"));
}

TEST_F(PipelineRun, InvalidConfigExitsTwoAndWritesNothing) {
  auto j = base_config();
  j["dataset_root"] = (root / "data").string();
  j["output_dir"] = (root / "never").string();
  j["modalities"]["eeg"]["encoder"]["kind"] = "transformer_xl";
  std::ofstream(root / "bad.json") << j.dump();
  EXPECT_EQ(run_cli("run --config " + (root / "bad.json").string()), 2);
  EXPECT_FALSE(fs::exists(root / "never"));
}

TEST_F(PipelineRun, ExitCodes) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("--version"), 0);
  auto j = base_config();
  j["dataset_root"] = (root / "missing").string();
  j["output_dir"] = (root / "out_e").string();
  std::ofstream(root / "missing.json") << j.dump();
  EXPECT_EQ(run_cli("split --config " + (root / "missing.json").string()), 3);
  std::ofstream(root / "badspec.json") << R"({"n_subjects": -3})";
  EXPECT_EQ(run_cli("synth --config " + (root / "badspec.json").string() + " --out " +
                    (root / "s").string()),
            2);
  EXPECT_EQ(run_cli("split --config " + (root / "config.json").string() + " --folds 1"), 2);
}

}  // namespace
