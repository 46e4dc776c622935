#pragma once

// Resolved run configuration. One JSON document carries every knob a run
// uses: simulation parameters, the encoder and trainer configs, pair
// selection, and the filtering fraction. All seeds are stored explicitly so
// re-running from the resolved copy reproduces the run byte for byte.

#include <cstdint>
#include <string>

#include "ofm/nn.hpp"
#include "ofm/sampling.hpp"
#include "ofm/simulator.hpp"

namespace ofm {

struct PairConfig {
  PairScheme scheme = PairScheme::Stratified;
  int bins = 8;
  long candidate_factor = 60;  // stratified: candidates = factor * train split size
  double fraction = 0.01;      // random: fraction of all unique pairs
  uint64_t seed = 1;
};

struct RunConfig {
  uint64_t seed = 1;  // master seed; the section seeds derive from it
  uint64_t sim_seed = 1;
  uint64_t init_seed = 1;  // encoder weight initialization
  SimParams sim;
  EncoderConfig encoder;
  TrainConfig train;
  PairConfig pairs;
  double keep_fraction = 0.75;
};

// Derives sim/init/pair/train seeds from the master seed. Loading a resolved
// config skips this, so explicitly stored seeds always win.
RunConfig resolve_seeds(RunConfig c, uint64_t master);

std::string run_config_to_text(const RunConfig& c);  // stable key order
RunConfig run_config_from_text(const std::string& text);
void write_run_config(const std::string& path, const RunConfig& c);
RunConfig read_run_config(const std::string& path);

}  // namespace ofm
