#include "auscult/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "auscult/error.hpp"
#include "auscult/parallel.hpp"
#include "auscult/rng.hpp"
#include "auscult/stats.hpp"

namespace auscult::forest {

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& matrix;
  const std::vector<int>& labels;
  const std::vector<int>& always_cols;
  int mtry;
  int min_node_size;
  bool record_candidates;
  Rng& rng;
  RfTree& tree;

  // rows carries bootstrap duplicates; [begin, end) is this node's slice.
  std::vector<std::uint32_t>& rows;

  int grow(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    std::size_t n_pos = 0;
    for (std::size_t i = begin; i < end; ++i) n_pos += labels[rows[i]] == 1;

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (record_candidates) tree.candidates.emplace_back();

    const bool pure = n_pos == 0 || n_pos == n;
    if (pure || n <= static_cast<std::size_t>(min_node_size)) {
      tree.nodes[node_id].leaf_p1 =
          static_cast<double>(n_pos) / static_cast<double>(n);
      return node_id;
    }

    // Candidate set: mtry random columns plus the always-split ones.
    const int n_cols = static_cast<int>(matrix[0].size());
    std::vector<int> candidates;
    {
      auto drawn = rng.sample_without_replacement(
          static_cast<std::size_t>(n_cols), static_cast<std::size_t>(mtry));
      candidates.assign(drawn.begin(), drawn.end());
      candidates.insert(candidates.end(), always_cols.begin(),
                        always_cols.end());
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()),
                       candidates.end());
    }
    if (record_candidates) tree.candidates[node_id] = candidates;

    // Best Gini split: sort the node slice per column, sweep midpoints.
    const double total = static_cast<double>(n);
    const double parent_gini =
        1.0 - std::pow(static_cast<double>(n_pos) / total, 2) -
        std::pow(static_cast<double>(n - n_pos) / total, 2);

    int best_col = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::vector<std::pair<double, int>> values(n);  // (value, label)
    for (int col : candidates) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t row = rows[begin + i];
        values[i] = {matrix[row][static_cast<std::size_t>(col)], labels[row]};
      }
      std::sort(values.begin(), values.end());
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += values[i].second == 1;
        if (values[i].first == values[i + 1].first) continue;
        const double n_left = static_cast<double>(i + 1);
        const double n_right = total - n_left;
        const double right_pos = static_cast<double>(n_pos - left_pos);
        const double pl = static_cast<double>(left_pos) / n_left;
        const double pr = right_pos / n_right;
        const double child_gini =
            (n_left * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)) +
             n_right * (1.0 - pr * pr - (1.0 - pr) * (1.0 - pr))) /
            total;
        const double gain = parent_gini - child_gini;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_col = col;
          best_threshold = (values[i].first + values[i + 1].first) / 2.0;
        }
      }
    }

    if (best_col < 0) {  // no candidate separates the rows
      tree.nodes[node_id].leaf_p1 =
          static_cast<double>(n_pos) / static_cast<double>(n);
      return node_id;
    }

    // Partition in place: < threshold left, >= right.
    const auto mid = std::partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t row) {
          return matrix[row][static_cast<std::size_t>(best_col)] <
                 best_threshold;
        });
    const std::size_t split =
        static_cast<std::size_t>(mid - rows.begin());

    tree.nodes[node_id].column = best_col;
    tree.nodes[node_id].threshold = best_threshold;
    const int left = grow(begin, split);
    tree.nodes[node_id].left = left;
    const int right = grow(split, end);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

double tree_score(const RfTree& tree, const std::vector<double>& row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].column >= 0) {
    const RfNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row[static_cast<std::size_t>(nd.column)] < nd.threshold ? nd.left
                                                                   : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_p1;
}

}  // namespace

RandomForest RandomForest::fit(const dataset::Dataset& ds, const RfConfig& cfg,
                               int threads) {
  const std::size_t n_rows = ds.rows();
  const std::size_t n_cols = ds.cols();
  if (n_rows < 2) fail(Errc::SingleClassTrainingSet, "too few rows to fit");
  {
    bool pos = false, neg = false;
    for (int label : ds.labels) (label == 1 ? pos : neg) = true;
    if (!pos || !neg)
      fail(Errc::SingleClassTrainingSet, "training labels are constant");
  }

  RandomForest model;
  model.config_ = cfg;
  model.columns_ = ds.column_names;
  if (model.config_.mtry <= 0)
    model.config_.mtry = std::max(
        1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_cols)))));
  model.config_.mtry =
      std::min(model.config_.mtry, static_cast<int>(n_cols));
  if (model.config_.min_node_size < 1) model.config_.min_node_size = 1;

  std::vector<int> always_cols;
  for (const auto& name : cfg.always_split) {
    const auto it =
        std::find(ds.column_names.begin(), ds.column_names.end(), name);
    if (it == ds.column_names.end())
      fail(Errc::ColumnMismatch, "always_split column not in dataset: " + name);
    always_cols.push_back(static_cast<int>(it - ds.column_names.begin()));
  }
  std::sort(always_cols.begin(), always_cols.end());

  model.trees_.resize(static_cast<std::size_t>(cfg.num_trees));
  parallel_for(
      static_cast<std::size_t>(cfg.num_trees), threads, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, t));
        std::vector<std::uint32_t> rows(n_rows);
        std::vector<bool> in_bag(n_rows, false);
        for (std::size_t i = 0; i < n_rows; ++i) {
          const std::size_t pick = rng.below(n_rows);
          rows[i] = static_cast<std::uint32_t>(pick);
          in_bag[pick] = true;
        }
        RfTree& tree = model.trees_[t];
        for (std::size_t i = 0; i < n_rows; ++i) {
          if (!in_bag[i]) tree.oob_rows.push_back(static_cast<std::uint32_t>(i));
        }
        TreeBuilder builder{ds.matrix,
                            ds.labels,
                            always_cols,
                            model.config_.mtry,
                            model.config_.min_node_size,
                            cfg.record_candidates,
                            rng,
                            tree,
                            rows};
        builder.grow(0, n_rows);
      });

  // OOB aggregation (single-threaded reduction, order fixed by tree index).
  std::vector<double> score_sum(n_rows, 0.0);
  std::vector<std::uint32_t> score_count(n_rows, 0);
  for (const auto& tree : model.trees_) {
    for (std::uint32_t row : tree.oob_rows) {
      score_sum[row] += tree_score(tree, ds.matrix[row]);
      score_count[row] += 1;
    }
  }
  model.oob_scores_.assign(n_rows, stats::kNa);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (score_count[i] > 0)
      model.oob_scores_[i] = score_sum[i] / static_cast<double>(score_count[i]);
  }

  // Label cache for oob_log_loss.
  model.oob_labels_ = ds.labels;
  return model;
}

std::vector<double> RandomForest::predict_rows(
    const std::vector<std::vector<double>>& rows) const {
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != columns_.size())
      fail(Errc::ColumnMismatch, "prediction row width mismatch");
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree_score(tree, row);
    scores.push_back(acc / static_cast<double>(trees_.size()));
  }
  return scores;
}

std::vector<double> RandomForest::predict(const dataset::Dataset& ds) const {
  if (ds.column_names != columns_)
    fail(Errc::ColumnMismatch, "prediction columns differ from training");
  return predict_rows(ds.matrix);
}

double RandomForest::oob_log_loss() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < oob_scores_.size(); ++i) {
    const double p_raw = oob_scores_[i];
    if (!std::isfinite(p_raw)) continue;
    const double p = std::clamp(p_raw, 1e-12, 1.0 - 1e-12);
    acc += oob_labels_[i] == 1 ? -std::log(p) : -std::log1p(-p);
    ++n;
  }
  return n > 0 ? acc / static_cast<double>(n) : stats::kNa;
}

// --- serialization -----------------------------------------------------------

void RandomForest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json doc;
  doc["kind"] = "rf";
  doc["version"] = 1;
  doc["config"] = {{"num_trees", config_.num_trees},
                   {"mtry", config_.mtry},
                   {"min_node_size", config_.min_node_size},
                   {"always_split", config_.always_split},
                   {"seed", config_.seed}};
  doc["columns"] = columns_;
  nlohmann::ordered_json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::ordered_json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes)
      nodes.push_back({node.column, node.threshold, node.left, node.right,
                       node.leaf_p1});
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << doc.dump() << '\n';
}

RandomForest RandomForest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadModelFile, std::string("model parse: ") + e.what());
  }
  RandomForest model;
  try {
    if (doc.at("kind").get<std::string>() != "rf")
      fail(Errc::BadModelFile, "not a random-forest model file");
    const auto& cfg = doc.at("config");
    model.config_.num_trees = cfg.at("num_trees").get<int>();
    model.config_.mtry = cfg.at("mtry").get<int>();
    model.config_.min_node_size = cfg.at("min_node_size").get<int>();
    model.config_.always_split =
        cfg.at("always_split").get<std::vector<std::string>>();
    model.config_.seed = cfg.at("seed").get<std::uint64_t>();
    model.columns_ = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& jt : doc.at("trees")) {
      RfTree tree;
      for (const auto& jn : jt.at("nodes")) {
        RfNode node;
        node.column = jn.at(0).get<int>();
        node.threshold = jn.at(1).get<double>();
        node.left = jn.at(2).get<int>();
        node.right = jn.at(3).get<int>();
        node.leaf_p1 = jn.at(4).get<double>();
        tree.nodes.push_back(node);
      }
      model.trees_.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadModelFile, std::string("model schema: ") + e.what());
  }
  return model;
}

}  // namespace auscult::forest
