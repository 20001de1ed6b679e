#pragma once

#include <cstdint>
#include <vector>

#include "auscult/random_forest.hpp"

namespace auscult::forest {

struct RfTuneOptions {
  int budget = 30;  // total model evaluations
  int warmup = 19;  // default config + random probes before the guided phase
  int num_trees = 500;
  std::vector<std::string> always_split;
  std::uint64_t seed = 0;
  // Skip the surrogate and spend the whole budget on random probes.
  bool random_search_only = false;
  int threads = 1;
};

struct RfTuneResult {
  RfConfig best;
  double best_oob_log_loss = 0.0;
  struct Eval {
    int mtry = 0;
    int min_node_size = 0;
    double oob_log_loss = 0.0;
  };
  std::vector<Eval> history;  // evaluation order
};

// Minimizes OOB log-loss over (mtry, min_node_size). The warmup evaluates
// the default configuration first, then random probes; the remaining budget
// picks candidates by expected improvement under a Gaussian-process
// surrogate (RBF kernel). Evaluations are cached per configuration and all
// fits share one derived seed, so the search is deterministic.
RfTuneResult rf_tune(const dataset::Dataset& train, const RfTuneOptions& opt);

}  // namespace auscult::forest
