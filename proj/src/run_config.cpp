#include "ofm/run_config.hpp"

#include <fstream>
#include <json.hpp>

#include "config_json.hpp"
#include "ofm/common.hpp"
#include "ofm/rng.hpp"

namespace ofm {

RunConfig resolve_seeds(RunConfig c, uint64_t master) {
  c.seed = master;
  c.sim_seed = mix_seed(master, 11);
  c.init_seed = mix_seed(master, 22);
  c.train.seed = mix_seed(master, 33);
  c.pairs.seed = mix_seed(master, 44);
  return c;
}

std::string run_config_to_text(const RunConfig& c) {
  nlohmann::json j = {
      {"seed", c.seed},
      {"sim_seed", c.sim_seed},
      {"init_seed", c.init_seed},
      {"sim", to_json(c.sim)},
      {"encoder", to_json(c.encoder)},
      {"train", to_json(c.train)},
      {"pairs",
       {{"scheme", c.pairs.scheme == PairScheme::Stratified ? "stratified" : "random"},
        {"bins", c.pairs.bins},
        {"candidate_factor", c.pairs.candidate_factor},
        {"fraction", c.pairs.fraction},
        {"seed", c.pairs.seed}}},
      {"keep_fraction", c.keep_fraction}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  RunConfig c;
  c.seed = j.at("seed").get<uint64_t>();
  c.sim_seed = j.at("sim_seed").get<uint64_t>();
  c.init_seed = j.at("init_seed").get<uint64_t>();
  c.sim = sim_params_from_json(j.at("sim"));
  c.encoder = encoder_config_from_json(j.at("encoder"));
  c.train = train_config_from_json(j.at("train"));
  const auto& jp = j.at("pairs");
  const std::string scheme = jp.at("scheme").get<std::string>();
  require(scheme == "stratified" || scheme == "random", "run config: unknown pair scheme");
  c.pairs.scheme = scheme == "stratified" ? PairScheme::Stratified : PairScheme::Random;
  c.pairs.bins = jp.at("bins").get<int>();
  c.pairs.candidate_factor = jp.at("candidate_factor").get<long>();
  c.pairs.fraction = jp.at("fraction").get<double>();
  c.pairs.seed = jp.at("seed").get<uint64_t>();
  c.keep_fraction = j.at("keep_fraction").get<double>();
  require(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0,
          "run config: keep_fraction must lie in (0, 1]");
  return c;
}

void write_run_config(const std::string& path, const RunConfig& c) {
  std::ofstream f(path);
  require(f.good(), "cannot write run config");
  f << run_config_to_text(c);
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("cannot read run config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return run_config_from_text(text);
}

}  // namespace ofm
