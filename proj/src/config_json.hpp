#pragma once

// JSON (de)serialization for the config structs, shared by checkpoints and
// resolved run configs. Round trips are exact for the fields listed here.

#include <json.hpp>

#include "ofm/nn.hpp"
#include "ofm/simulator.hpp"

namespace ofm {

inline nlohmann::json to_json(const EncoderConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const ConvBlock& b : c.blocks)
    blocks.push_back({{"kernel", b.kernel},
                      {"channels", b.channels},
                      {"n_convs", b.n_convs},
                      {"pool", b.pool}});
  return {{"input_side", c.input_side},
          {"blur", blur_mode_name(c.blur)},
          {"blur_filters", c.blur_filters},
          {"blocks", blocks},
          {"pool", pool_kind_name(c.pool)},
          {"gem_p_init", c.gem_p_init},
          {"act", act_kind_name(c.act)},
          {"prelu_alpha_init", c.prelu_alpha_init},
          {"head", head_kind_name(c.head)},
          {"dropout", c.dropout},
          {"l2", c.l2}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.input_side = j.at("input_side").get<int>();
  c.blur = blur_mode_from_name(j.at("blur").get<std::string>());
  c.blur_filters = j.at("blur_filters").get<int>();
  c.blocks.clear();
  for (const auto& jb : j.at("blocks")) {
    ConvBlock b;
    b.kernel = jb.at("kernel").get<int>();
    b.channels = jb.at("channels").get<int>();
    b.n_convs = jb.at("n_convs").get<int>();
    b.pool = jb.at("pool").get<bool>();
    c.blocks.push_back(b);
  }
  c.pool = pool_kind_from_name(j.at("pool").get<std::string>());
  c.gem_p_init = j.at("gem_p_init").get<double>();
  c.act = act_kind_from_name(j.at("act").get<std::string>());
  c.prelu_alpha_init = j.at("prelu_alpha_init").get<double>();
  c.head = head_kind_from_name(j.at("head").get<std::string>());
  c.dropout = j.at("dropout").get<double>();
  c.l2 = j.at("l2").get<double>();
  return c;
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr_max", t.lr_max},
          {"seed", t.seed},
          {"curriculum", t.curriculum},
          {"style", train_style_name(t.style)},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"val_pair_count", t.val_pair_count}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.lr_max = j.at("lr_max").get<double>();
  t.seed = j.at("seed").get<uint64_t>();
  t.curriculum = j.at("curriculum").get<bool>();
  t.style = train_style_from_name(j.at("style").get<std::string>());
  t.adam_beta2 = j.at("adam_beta2").get<double>();
  t.adam_eps = j.at("adam_eps").get<double>();
  t.val_pair_count = j.at("val_pair_count").get<int>();
  return t;
}

inline nlohmann::json to_json(const SimParams& p) {
  return {{"side", p.side},
          {"pixel_size", p.pixel_size},
          {"n_images", p.n_images},
          {"snr", p.snr},
          {"shift_max", p.shift_max},
          {"apply_ctf", p.apply_ctf},
          {"defocus_min", p.defocus_min},
          {"defocus_max", p.defocus_max},
          {"cs_mm", p.ctf.cs_mm},
          {"voltage_kv", p.ctf.voltage_kv},
          {"amplitude_contrast", p.ctf.amplitude_contrast},
          {"symmetry", p.symmetry}};
}

inline SimParams sim_params_from_json(const nlohmann::json& j) {
  SimParams p;
  p.side = j.at("side").get<int>();
  p.pixel_size = j.at("pixel_size").get<double>();
  p.n_images = j.at("n_images").get<int>();
  p.snr = j.at("snr").get<double>();
  p.shift_max = j.at("shift_max").get<double>();
  p.apply_ctf = j.at("apply_ctf").get<bool>();
  p.defocus_min = j.at("defocus_min").get<double>();
  p.defocus_max = j.at("defocus_max").get<double>();
  p.ctf.cs_mm = j.at("cs_mm").get<double>();
  p.ctf.voltage_kv = j.at("voltage_kv").get<double>();
  p.ctf.amplitude_contrast = j.at("amplitude_contrast").get<double>();
  p.symmetry = j.at("symmetry").get<std::string>();
  return p;
}

}  // namespace ofm
