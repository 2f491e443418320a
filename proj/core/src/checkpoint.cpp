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

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tridep/encoders.hpp"
#include "tridep/error.hpp"
#include "tridep/feature_store.hpp"

namespace tridep::nn {

using nlohmann::json;

void save_checkpoint(const Model& model, const FeatureScaler& scaler, std::uint64_t seed,
                     int epoch, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& c = model.config();
  json j;
  j["format"] = "tdep-checkpoint/1";
  j["encoder"] = {{"kind", std::string(to_string(c.kind))},
                  {"input_dim", c.input_dim},
                  {"hidden", c.hidden},
                  {"layers", c.layers},
                  {"dropout", c.dropout},
                  {"pool", std::string(to_string(c.pool))}};
  j["seed"] = seed;
  j["epoch"] = epoch;
  j["scaler"] = {{"mean", scaler.mean}, {"scale", scaler.scale}};
  j["params"] = json::array();
  for (std::size_t i = 0; i < model.params().list.size(); ++i) {
    const auto& p = model.params().list[i];
    const std::string file = "param_" + std::to_string(i) + ".tdep";
    store::write_tensor(store::to_tensor(p.value.v, {static_cast<std::uint32_t>(p.value.rows),
                                                     static_cast<std::uint32_t>(p.value.cols)}),
                        dir / file);
    j["params"].push_back({{"name", p.name}, {"file", file}, {"dims", {p.value.rows, p.value.cols}}});
  }
  std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint in " + dir.string());
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw DataError("cannot open checkpoint in " + dir.string());
  Checkpoint ck;
  try {
    const json j = json::parse(in);
    const auto& e = j.at("encoder");
    EncoderConfig c;
    const auto kind = parse_encoder_kind(e.at("kind").get<std::string>());
    const auto pool = parse_pool_kind(e.at("pool").get<std::string>());
    if (!kind || !pool) throw DataError("checkpoint: unknown encoder or pool kind");
    c.kind = *kind;
    c.pool = *pool;
    c.input_dim = e.at("input_dim").get<std::size_t>();
    c.hidden = e.at("hidden").get<std::size_t>();
    c.layers = e.at("layers").get<std::size_t>();
    c.dropout = e.at("dropout").get<double>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.epoch = j.at("epoch").get<int>();
    ck.model = Model(c, 0);
    ck.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    ck.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
    auto& list = ck.model.params().list;
    const auto& ps = j.at("params");
    if (ps.size() != list.size()) throw DataError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (ps[i].at("name").get<std::string>() != list[i].name) {
        throw DataError("checkpoint: parameter order mismatch at " + list[i].name);
      }
      const auto t = store::read_tensor(dir / ps[i].at("file").get<std::string>());
      if (t.payload.size() != list[i].value.size()) {
        throw DataError("checkpoint: wrong size for " + list[i].name);
      }
      for (std::size_t k = 0; k < t.payload.size(); ++k) list[i].value.v[k] = t.payload[k];
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("checkpoint: ") + ex.what());
  }
  return ck;
}

}  // namespace tridep::nn
