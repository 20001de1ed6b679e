#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "auscult/dataset.hpp"

namespace auscult::forest {

struct RfConfig {
  int num_trees = 500;
  int mtry = 0;  // 0 = floor(sqrt(columns)), resolved at fit time
  int min_node_size = 1;
  std::vector<std::string> always_split;  // candidate at every node
  std::uint64_t seed = 0;
  // Keeps per-node candidate column sets for structural tests.
  bool record_candidates = false;
};

struct RfNode {
  int column = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_p1 = 0.0;  // pathological fraction in the leaf
};

struct RfTree {
  std::vector<RfNode> nodes;  // nodes[0] is the root
  std::vector<std::uint32_t> oob_rows;
  // Parallel to nodes when record_candidates; empty lists at leaves.
  std::vector<std::vector<int>> candidates;
};

class RandomForest {
 public:
  // CART/Gini probability forest on bootstrap samples. Throws
  // SingleClassTrainingSet when labels are constant.
  static RandomForest fit(const dataset::Dataset& ds, const RfConfig& cfg,
                          int threads = 1);

  // Mean leaf class fraction over trees, one score per row.
  std::vector<double> predict_rows(
      const std::vector<std::vector<double>>& rows) const;
  std::vector<double> predict(const dataset::Dataset& ds) const;

  // Per training row, averaged over trees whose bootstrap excluded it;
  // NaN when no tree did.
  const std::vector<double>& oob_scores() const { return oob_scores_; }
  double oob_log_loss() const;

  const RfConfig& config() const { return config_; }
  const std::vector<std::string>& column_names() const { return columns_; }
  const std::vector<RfTree>& trees() const { return trees_; }

  void save(const std::filesystem::path& path) const;
  static RandomForest load(const std::filesystem::path& path);

 private:
  RfConfig config_;
  std::vector<std::string> columns_;
  std::vector<RfTree> trees_;
  std::vector<double> oob_scores_;
  std::vector<int> oob_labels_;  // training labels, for oob_log_loss
};

}  // namespace auscult::forest
