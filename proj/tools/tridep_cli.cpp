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
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "tridep/error.hpp"
#include "tridep/pipeline.hpp"
#include "tridep/synth.hpp"

namespace {

using tridep::pipeline::Experiment;
using tridep::pipeline::ExperimentConfig;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  bool quiet = false;
};

ExperimentConfig resolve(const Options& o) {
  auto cfg = tridep::pipeline::load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.folds) cfg.k = *o.folds;
  return cfg;
}

Experiment make(const Options& o) {
  tridep::pipeline::Logger log;
  if (!o.quiet) log = [](const std::string& m) { std::cerr << m << "\n"; };
  return Experiment(resolve(o), log);
}

int synth(const Options& o) {
  tridep::synth::SynthSpec spec;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw tridep::ConfigError("cannot open synth spec: " + o.config);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = tridep::synth::spec_from_json(ss.str());
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.out.empty()) throw tridep::ConfigError("synth needs --out");
  tridep::synth::generate(spec, o.out);
  if (!o.quiet) std::cerr << "synth: " << spec.n_subjects << " subjects written to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tridep: trimodal EEG, speech and text depression detection"};
  app.set_version_flag("--version", std::string(tridep::pipeline::kVersion));
  app.require_subcommand(1);

  Options o;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "JSON configuration file");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the seed");
    sub->add_option("--out", o.out, "override the output directory");
    sub->add_flag("-q,--quiet", o.quiet, "suppress progress messages");
  };

  auto* split = app.add_subcommand("split", "write the subject-level stratified fold plan");
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
  auto* preprocess = app.add_subcommand("preprocess", "filter, resample and segment raw signals");
  auto* features = app.add_subcommand("features", "compute per-subject feature manifests");
  auto* train = app.add_subcommand("train", "train one encoder per modality and fold");
  auto* fuse = app.add_subcommand("fuse", "combine unimodal posteriors");
  auto* report = app.add_subcommand("report", "aggregate fold metrics into report files");
  auto* run = app.add_subcommand("run", "split, features, train, fuse and report");
  for (auto* s : {split, preprocess, features, train, fuse, report, run}) {
    add_common(s, true);
    s->add_option("--folds", o.folds, "override the number of folds");
  }
  add_common(synth_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return synth(o);
    auto exp = make(o);
    if (split->parsed()) exp.split();
    if (preprocess->parsed()) exp.preprocess();
    if (features->parsed()) exp.features();
    if (train->parsed()) exp.train();
    if (fuse->parsed()) exp.fuse();
    if (report->parsed()) std::cout << tridep::pipeline::render_report_text(exp.report());
    if (run->parsed()) std::cout << tridep::pipeline::render_report_text(exp.run());
    return 0;
  } catch (const tridep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tridep::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const tridep::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
