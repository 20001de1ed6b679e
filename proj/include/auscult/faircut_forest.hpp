#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "auscult/dataset.hpp"

namespace auscult::forest {

struct FcfConfig {
  int num_trees = 500;
  int ndim = 3;  // columns per projection
  double pick_pooled_gain = 1.0;  // probability of a gain-guided threshold
  std::size_t sample_size = 0;    // 0 = the full training set per tree
  std::uint64_t seed = 0;
};

struct FcfNode {
  bool leaf = true;
  double leaf_credit = 0.0;  // depth + c(node size) at termination
  // Split: z = sum coeffs[j] * (x[columns[j]] - means[j]) / sds[j];
  // z < threshold goes left.
  std::vector<int> columns;
  std::vector<double> coeffs;
  std::vector<double> means;
  std::vector<double> sds;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
};

struct FcfTree {
  std::vector<FcfNode> nodes;  // nodes[0] is the root
};

// Average path length of an unsuccessful BST search among m points;
// normalizes isolation depths. c(1) = 0, c(2) = 1 exactly.
double average_path_length(std::size_t m);

class FaircutForest {
 public:
  // Unsupervised fit on the rows only. Each split projects ndim random
  // columns (standard-normal coefficients over per-tree standardized values)
  // and, with probability pick_pooled_gain, takes the threshold maximizing
  // the pooled standard-deviation gain; otherwise a uniform random cut.
  static FaircutForest fit(const dataset::Dataset& ds, const FcfConfig& cfg,
                           int threads = 1);
  static FaircutForest fit_rows(const std::vector<std::vector<double>>& rows,
                                const std::vector<std::string>& column_names,
                                const FcfConfig& cfg, int threads = 1);

  // Anomaly score 2^(-E[depth]/c(sample_size)) in (0, 1); higher = more
  // anomalous.
  std::vector<double> score_rows(
      const std::vector<std::vector<double>>& rows) const;
  std::vector<double> score(const dataset::Dataset& ds) const;

  const FcfConfig& config() const { return config_; }
  const std::vector<std::string>& column_names() const { return columns_; }
  const std::vector<FcfTree>& trees() const { return trees_; }

  void save(const std::filesystem::path& path) const;
  static FaircutForest load(const std::filesystem::path& path);

 private:
  FcfConfig config_;
  std::vector<std::string> columns_;
  std::vector<FcfTree> trees_;
  std::size_t sample_size_ = 0;  // resolved (0 -> n_rows)
};

}  // namespace auscult::forest
