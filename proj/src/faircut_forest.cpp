#include "auscult/faircut_forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "auscult/error.hpp"
#include "auscult/parallel.hpp"
#include "auscult/rng.hpp"

namespace auscult::forest {

double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  // Exact harmonic numbers keep small-node credits exact; the asymptotic
  // form takes over where the difference is far below tolerance.
  constexpr std::size_t kExactLimit = 4096;
  const auto harmonic = [](std::size_t n) {
    double h = 0.0;
    for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
    return h;
  };
  const double n1 = static_cast<double>(m - 1);
  const double h = m - 1 <= kExactLimit
                       ? harmonic(m - 1)
                       : std::log(n1) + 0.5772156649015328606;
  return 2.0 * h - 2.0 * n1 / static_cast<double>(m);
}

namespace {

struct FcfBuilder {
  const std::vector<std::vector<double>>& matrix;
  const std::vector<double>& col_means;  // per-tree sample statistics
  const std::vector<double>& col_sds;
  int ndim;
  double pick_pooled_gain;
  std::size_t depth_limit;
  Rng& rng;
  FcfTree& tree;
  std::vector<std::uint32_t>& rows;

  double project(const FcfNode& node, const std::vector<double>& row) const {
    double z = 0.0;
    for (std::size_t j = 0; j < node.columns.size(); ++j) {
      const double x = row[static_cast<std::size_t>(node.columns[j])];
      z += node.coeffs[j] * (x - node.means[j]) / node.sds[j];
    }
    return z;
  }

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    if (n <= 1 || depth >= depth_limit) {
      tree.nodes[node_id].leaf_credit =
          static_cast<double>(depth) + average_path_length(n);
      return node_id;
    }

    FcfNode split;
    const std::size_t n_cols = matrix[0].size();
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(ndim), n_cols);
    const auto drawn = rng.sample_without_replacement(n_cols, take);
    for (std::size_t col : drawn) {
      split.columns.push_back(static_cast<int>(col));
      split.coeffs.push_back(rng.normal());
      split.means.push_back(col_means[col]);
      split.sds.push_back(col_sds[col] > 0.0 ? col_sds[col] : 1.0);
    }

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i)
      z[i] = project(split, matrix[rows[begin + i]]);

    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {  // degenerate projection
      tree.nodes[node_id].leaf_credit =
          static_cast<double>(depth) + average_path_length(n);
      return node_id;
    }

    const bool guided = rng.real() < pick_pooled_gain;
    if (guided) {
      std::vector<double> candidates;
      if (n <= 1024) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
          if (sorted[i] != sorted[i + 1])
            candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
        }
      } else {
        for (int q = 1; q <= 256; ++q) {
          const std::size_t idx =
              static_cast<std::size_t>(static_cast<double>(q) *
                                       static_cast<double>(n - 1) / 257.0);
          candidates.push_back(sorted[idx]);
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(
            std::unique(candidates.begin(), candidates.end()),
            candidates.end());
        // A candidate equal to the minimum would make one side empty.
        while (!candidates.empty() && candidates.front() <= sorted.front())
          candidates.erase(candidates.begin());
      }

      // Pooled gain g(t) = s_all - (nL*sL + nR*sR)/n via prefix sums over the
      // sorted projections (population standard deviations).
      std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + sorted[i];
        prefix_sq[i + 1] = prefix_sq[i] + sorted[i] * sorted[i];
      }
      auto sd_of = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
        const double cnt = static_cast<double>(hi - lo);
        const double mean = (prefix[hi] - prefix[lo]) / cnt;
        const double var =
            (prefix_sq[hi] - prefix_sq[lo]) / cnt - mean * mean;
        return std::sqrt(std::max(var, 0.0));
      };
      const double s_all = sd_of(0, n);

      double best_gain = -1.0;
      double best_threshold = 0.0;
      for (double t : candidates) {
        const std::size_t n_left = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), t) -
            sorted.begin());
        if (n_left == 0 || n_left == n) continue;
        const double gain =
            s_all - (static_cast<double>(n_left) * sd_of(0, n_left) +
                     static_cast<double>(n - n_left) * sd_of(n_left, n)) /
                        static_cast<double>(n);
        if (gain > best_gain) {
          best_gain = gain;
          best_threshold = t;
        }
      }
      if (best_gain < 0.0) {  // no usable candidate (all mass at one value)
        tree.nodes[node_id].leaf_credit =
            static_cast<double>(depth) + average_path_length(n);
        return node_id;
      }
      split.threshold = best_threshold;
    } else {
      split.threshold = rng.uniform(sorted.front(), sorted.back());
      // Guarantee both sides nonempty under z < t | z >= t.
      if (split.threshold <= sorted.front())
        split.threshold = std::nextafter(sorted.front(), sorted.back());
    }

    // Partition rows by projection, keeping z aligned.
    std::size_t lo = 0, hi = n;
    std::vector<std::uint32_t> scratch(n);
    std::vector<std::uint32_t> node_rows(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                         rows.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i] < split.threshold) scratch[lo++] = node_rows[i];
      else scratch[--hi] = node_rows[i];
    }
    if (lo == 0 || lo == n) {  // numeric edge: fall back to a leaf
      tree.nodes[node_id].leaf_credit =
          static_cast<double>(depth) + average_path_length(n);
      return node_id;
    }
    std::copy(scratch.begin(), scratch.end(),
              rows.begin() + static_cast<std::ptrdiff_t>(begin));

    split.leaf = false;
    tree.nodes[node_id] = std::move(split);
    const int left = grow(begin, begin + lo, depth + 1);
    tree.nodes[node_id].left = left;
    const int right = grow(begin + lo, end, depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

// The leaf credit already carries the path depth, so traversal just looks it
// up.
double tree_depth(const FcfTree& tree, const std::vector<double>& row) {
  int node = 0;
  for (;;) {
    const FcfNode& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.leaf) return nd.leaf_credit;
    double z = 0.0;
    for (std::size_t j = 0; j < nd.columns.size(); ++j) {
      const double x = row[static_cast<std::size_t>(nd.columns[j])];
      z += nd.coeffs[j] * (x - nd.means[j]) / nd.sds[j];
    }
    node = z < nd.threshold ? nd.left : nd.right;
  }
}

}  // namespace

FaircutForest FaircutForest::fit(const dataset::Dataset& ds,
                                 const FcfConfig& cfg, int threads) {
  return fit_rows(ds.matrix, ds.column_names, cfg, threads);
}

FaircutForest FaircutForest::fit_rows(
    const std::vector<std::vector<double>>& rows,
    const std::vector<std::string>& column_names, const FcfConfig& cfg,
    int threads) {
  const std::size_t n_rows = rows.size();
  if (n_rows < 2) fail(Errc::SingleClassTrainingSet, "need at least 2 rows");

  FaircutForest model;
  model.config_ = cfg;
  model.columns_ = column_names;
  model.sample_size_ = cfg.sample_size == 0
                           ? n_rows
                           : std::min(cfg.sample_size, n_rows);
  const std::size_t psi = model.sample_size_;
  const std::size_t depth_limit = 2 * static_cast<std::size_t>(std::ceil(
                                          std::log2(static_cast<double>(psi))));

  model.trees_.resize(static_cast<std::size_t>(cfg.num_trees));
  parallel_for(
      static_cast<std::size_t>(cfg.num_trees), threads, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, t));
        std::vector<std::uint32_t> sample;
        if (psi == n_rows) {
          sample.resize(n_rows);
          for (std::size_t i = 0; i < n_rows; ++i)
            sample[i] = static_cast<std::uint32_t>(i);
        } else {
          for (std::size_t i : rng.sample_without_replacement(n_rows, psi))
            sample.push_back(static_cast<std::uint32_t>(i));
        }

        // Per-tree column standardization from the tree's own sample.
        const std::size_t n_cols = rows[0].size();
        std::vector<double> means(n_cols, 0.0), sds(n_cols, 0.0);
        for (std::uint32_t r : sample) {
          for (std::size_t c = 0; c < n_cols; ++c) means[c] += rows[r][c];
        }
        for (std::size_t c = 0; c < n_cols; ++c)
          means[c] /= static_cast<double>(sample.size());
        for (std::uint32_t r : sample) {
          for (std::size_t c = 0; c < n_cols; ++c) {
            const double d = rows[r][c] - means[c];
            sds[c] += d * d;
          }
        }
        for (std::size_t c = 0; c < n_cols; ++c)
          sds[c] = std::sqrt(sds[c] / static_cast<double>(sample.size()));

        FcfBuilder builder{rows,
                           means,
                           sds,
                           cfg.ndim,
                           cfg.pick_pooled_gain,
                           depth_limit,
                           rng,
                           model.trees_[t],
                           sample};
        builder.grow(0, sample.size(), 0);
      });
  return model;
}

std::vector<double> FaircutForest::score_rows(
    const std::vector<std::vector<double>>& rows) const {
  const double c_psi = average_path_length(sample_size_);
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != columns_.size())
      fail(Errc::ColumnMismatch, "scoring row width mismatch");
    double depth_sum = 0.0;
    for (const auto& tree : trees_) depth_sum += tree_depth(tree, row);
    const double mean_depth = depth_sum / static_cast<double>(trees_.size());
    scores.push_back(std::pow(2.0, -mean_depth / c_psi));
  }
  return scores;
}

std::vector<double> FaircutForest::score(const dataset::Dataset& ds) const {
  if (ds.column_names != columns_)
    fail(Errc::ColumnMismatch, "scoring columns differ from training");
  return score_rows(ds.matrix);
}

// --- serialization -----------------------------------------------------------

void FaircutForest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json doc;
  doc["kind"] = "fcf";
  doc["version"] = 1;
  doc["config"] = {{"num_trees", config_.num_trees},
                   {"ndim", config_.ndim},
                   {"pick_pooled_gain", config_.pick_pooled_gain},
                   {"sample_size", config_.sample_size},
                   {"seed", config_.seed}};
  doc["columns"] = columns_;
  doc["resolved_sample_size"] = sample_size_;
  nlohmann::ordered_json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::ordered_json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      if (node.leaf) {
        nodes.push_back({{"credit", node.leaf_credit}});
      } else {
        nodes.push_back({{"cols", node.columns},
                         {"coeffs", node.coeffs},
                         {"means", node.means},
                         {"sds", node.sds},
                         {"t", node.threshold},
                         {"l", node.left},
                         {"r", node.right}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << doc.dump() << '\n';
}

FaircutForest FaircutForest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadModelFile, std::string("model parse: ") + e.what());
  }
  FaircutForest model;
  try {
    if (doc.at("kind").get<std::string>() != "fcf")
      fail(Errc::BadModelFile, "not a fair-cut forest model file");
    const auto& cfg = doc.at("config");
    model.config_.num_trees = cfg.at("num_trees").get<int>();
    model.config_.ndim = cfg.at("ndim").get<int>();
    model.config_.pick_pooled_gain = cfg.at("pick_pooled_gain").get<double>();
    model.config_.sample_size = cfg.at("sample_size").get<std::size_t>();
    model.config_.seed = cfg.at("seed").get<std::uint64_t>();
    model.columns_ = doc.at("columns").get<std::vector<std::string>>();
    model.sample_size_ = doc.at("resolved_sample_size").get<std::size_t>();
    for (const auto& jt : doc.at("trees")) {
      FcfTree tree;
      for (const auto& jn : jt.at("nodes")) {
        FcfNode node;
        if (jn.contains("credit")) {
          node.leaf = true;
          node.leaf_credit = jn.at("credit").get<double>();
        } else {
          node.leaf = false;
          node.columns = jn.at("cols").get<std::vector<int>>();
          node.coeffs = jn.at("coeffs").get<std::vector<double>>();
          node.means = jn.at("means").get<std::vector<double>>();
          node.sds = jn.at("sds").get<std::vector<double>>();
          node.threshold = jn.at("t").get<double>();
          node.left = jn.at("l").get<int>();
          node.right = jn.at("r").get<int>();
        }
        tree.nodes.push_back(std::move(node));
      }
      model.trees_.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadModelFile, std::string("model schema: ") + e.what());
  }
  return model;
}

}  // namespace auscult::forest
