#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "auscult/error.hpp"
#include "auscult/faircut_forest.hpp"
#include "auscult/random_forest.hpp"
#include "auscult/rf_tune.hpp"
#include "auscult/rng.hpp"
#include "test_util.hpp"

using namespace auscult;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("auscult_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("random forest memorizes distinct training rows") {
  const auto ds = testutil::separable_dataset(40, 5, 0.0, 21);  // pure noise
  forest::RfConfig cfg;
  cfg.num_trees = 200;
  cfg.seed = 5;
  const auto rf = forest::RandomForest::fit(ds, cfg);
  const auto scores = rf.predict(ds);
  for (std::size_t r = 0; r < ds.rows(); ++r)
    CHECK((scores[r] >= 0.5) == (ds.labels[r] == 1));
}

TEST_CASE("random forest separates an easy problem out of bag") {
  const auto ds = testutil::separable_dataset(500, 10, 3.0, 7);
  forest::RfConfig cfg;
  cfg.num_trees = 500;
  cfg.seed = 3;
  const auto rf = forest::RandomForest::fit(ds, cfg, 4);
  const auto& oob = rf.oob_scores();
  int correct = 0, counted = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    if (!std::isfinite(oob[r])) continue;
    ++counted;
    correct += (oob[r] >= 0.5) == (ds.labels[r] == 1);
  }
  CHECK(counted == 500);  // with 500 trees every row is OOB somewhere
  CHECK(static_cast<double>(correct) / counted >= 0.95);
  CHECK(std::isfinite(rf.oob_log_loss()));
  CHECK(rf.oob_log_loss() < 0.35);
}

TEST_CASE("always-split columns are candidates at every node") {
  auto ds = testutil::separable_dataset(80, 6, 1.0, 13);
  ds.column_names[5] = "meta_side";
  forest::RfConfig cfg;
  cfg.num_trees = 25;
  cfg.mtry = 2;
  cfg.seed = 17;
  cfg.always_split = {"meta_side"};
  cfg.record_candidates = true;
  const auto rf = forest::RandomForest::fit(ds, cfg);
  int internal_nodes = 0;
  for (const auto& tree : rf.trees()) {
    REQUIRE(tree.candidates.size() == tree.nodes.size());
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      if (tree.nodes[n].column < 0) continue;  // leaf
      ++internal_nodes;
      const auto& cand = tree.candidates[n];
      CHECK(std::count(cand.begin(), cand.end(), 5) == 1);
      // mtry random + the pinned column
      CHECK(cand.size() <= 3);
    }
  }
  CHECK(internal_nodes > 0);

  cfg.always_split = {"no_such_column"};
  CHECK_FAILS_WITH(Errc::ColumnMismatch, forest::RandomForest::fit(ds, cfg));
}

TEST_CASE("random forest input validation") {
  auto ds = testutil::separable_dataset(20, 3, 1.0, 1);
  for (auto& label : ds.labels) label = 1;
  forest::RfConfig cfg;
  cfg.num_trees = 5;
  CHECK_FAILS_WITH(Errc::SingleClassTrainingSet,
                   forest::RandomForest::fit(ds, cfg));

  const auto ok = testutil::separable_dataset(20, 3, 1.0, 1);
  const auto rf = forest::RandomForest::fit(ok, forest::RfConfig{.num_trees = 5});
  CHECK_FAILS_WITH(Errc::ColumnMismatch,
                   rf.predict_rows({{1.0, 2.0}}));
  auto renamed = ok;
  renamed.column_names[0] = "other";
  CHECK_FAILS_WITH(Errc::ColumnMismatch, rf.predict(renamed));
}

TEST_CASE("random forest is deterministic and survives serialization") {
  const auto dir = temp_dir("rfser");
  const auto ds = testutil::separable_dataset(60, 4, 2.0, 19);
  forest::RfConfig cfg;
  cfg.num_trees = 50;
  cfg.seed = 23;
  const auto a = forest::RandomForest::fit(ds, cfg, 1);
  const auto b = forest::RandomForest::fit(ds, cfg, 4);
  const auto pa = a.predict(ds);
  const auto pb = b.predict(ds);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);

  a.save(dir / "rf.json");
  const auto loaded = forest::RandomForest::load(dir / "rf.json");
  const auto pl = loaded.predict(ds);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pl[i]);
  CHECK(loaded.config().num_trees == 50);
  CHECK(loaded.column_names() == ds.column_names);

  {
    std::ofstream out(dir / "garbage.json");
    out << "{\"kind\": \"zip\"}";
  }
  CHECK_FAILS_WITH(Errc::BadModelFile,
                   forest::RandomForest::load(dir / "garbage.json"));
  CHECK_FAILS_WITH(Errc::IoFailure,
                   forest::RandomForest::load(dir / "nope.json"));
}

TEST_CASE("tuner returns the best evaluated configuration") {
  const auto ds = testutil::separable_dataset(80, 8, 1.5, 31);
  forest::RfTuneOptions opt;
  opt.budget = 12;
  opt.warmup = 6;
  opt.num_trees = 60;
  opt.seed = 11;
  const auto result = forest::rf_tune(ds, opt);

  CHECK(result.history.size() <= 12);
  CHECK(result.history.size() >= 6);
  // the default configuration is probed first
  CHECK(result.history[0].mtry ==
        static_cast<int>(std::sqrt(8.0)));
  CHECK(result.history[0].min_node_size == 1);
  // best is the argmin over the history
  double best = result.history[0].oob_log_loss;
  for (const auto& eval : result.history) best = std::min(best, eval.oob_log_loss);
  CHECK(result.best_oob_log_loss == best);
  CHECK(result.best_oob_log_loss <= result.history[0].oob_log_loss);

  // evaluations are cached: no duplicate (mtry, min_node_size)
  std::set<std::pair<int, int>> seen;
  for (const auto& eval : result.history)
    CHECK(seen.insert({eval.mtry, eval.min_node_size}).second);

  // bounds of the search space
  for (const auto& eval : result.history) {
    CHECK(eval.mtry >= 1);
    CHECK(eval.mtry <= 8);
    CHECK(eval.min_node_size >= 1);
    CHECK(eval.min_node_size <= std::max<std::size_t>(1, ds.rows() / 4));
  }

  // deterministic
  const auto again = forest::rf_tune(ds, opt);
  REQUIRE(again.history.size() == result.history.size());
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    CHECK(again.history[i].mtry == result.history[i].mtry);
    CHECK(again.history[i].oob_log_loss == result.history[i].oob_log_loss);
  }
  CHECK(again.best.mtry == result.best.mtry);
}

TEST_CASE("tuned model never loses to the default configuration") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto ds = testutil::separable_dataset(60, 12, 1.0, 40 + seed);
    forest::RfTuneOptions opt;
    opt.budget = 10;
    opt.warmup = 5;
    opt.num_trees = 40;
    opt.seed = seed;
    const auto result = forest::rf_tune(ds, opt);
    CHECK(result.best_oob_log_loss <= result.history[0].oob_log_loss);
  }
}

// --- fair-cut forest -------------------------------------------------------------

TEST_CASE("average path length normalization") {
  CHECK(forest::average_path_length(0) == 0.0);
  CHECK(forest::average_path_length(1) == 0.0);
  CHECK(forest::average_path_length(2) == 1.0);
  // c(m) = 2 H(m-1) - 2 (m-1)/m
  const double h3 = 1.0 + 0.5 + 1.0 / 3.0;
  CHECK(forest::average_path_length(4) ==
        doctest::Approx(2.0 * h3 - 2.0 * 3.0 / 4.0).epsilon(1e-12));
  // the asymptotic branch stays continuous
  const double exact = forest::average_path_length(4096);
  const double approx = forest::average_path_length(4098);
  CHECK(std::abs(exact - approx) < 0.01);
  CHECK(forest::average_path_length(100) <
        forest::average_path_length(1000));
}

TEST_CASE("a gross outlier is split off at the root") {
  // single column, twenty zeros and one ten: the pooled-gain cut must
  // isolate the outlier immediately
  std::vector<std::vector<double>> rows(21, std::vector<double>{0.0});
  rows[20][0] = 10.0;
  forest::FcfConfig cfg;
  cfg.num_trees = 1;
  cfg.ndim = 1;
  cfg.seed = 2;
  const auto fcf = forest::FaircutForest::fit_rows(rows, {"x"}, cfg);
  const auto& tree = fcf.trees()[0];
  REQUIRE(!tree.nodes[0].leaf);
  const auto& left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
  const auto& right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
  CHECK(left.leaf);
  CHECK(right.leaf);

  const auto scores = fcf.score_rows(rows);
  for (std::size_t r = 0; r < 20; ++r) CHECK(scores[20] > scores[r]);
  for (double s : scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("injected outlier gets the top score across seeds") {
  int top = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 200; ++r) {
      std::vector<double> row(5);
      for (double& v : row) v = rng.normal();
      rows.push_back(row);
    }
    rows.push_back(std::vector<double>(5, 10.0));

    forest::FcfConfig cfg;
    cfg.num_trees = 100;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto fcf = forest::FaircutForest::fit_rows(
        rows, {"a", "b", "c", "d", "e"}, cfg);
    const auto scores = fcf.score_rows(rows);
    const auto top_idx = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    top += top_idx == 200;
    for (double s : scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }
  CHECK(top >= 95);
}

TEST_CASE("fair-cut forest determinism and serialization") {
  const auto dir = temp_dir("fcfser");
  const auto ds = testutil::separable_dataset(50, 6, 1.0, 9);
  forest::FcfConfig cfg;
  cfg.num_trees = 80;
  cfg.seed = 4;
  const auto a = forest::FaircutForest::fit(ds, cfg, 1);
  const auto b = forest::FaircutForest::fit(ds, cfg, 4);
  const auto sa = a.score(ds);
  const auto sb = b.score(ds);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == sb[i]);

  a.save(dir / "fcf.json");
  const auto loaded = forest::FaircutForest::load(dir / "fcf.json");
  const auto sl = loaded.score(ds);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == sl[i]);

  CHECK_FAILS_WITH(Errc::ColumnMismatch, a.score_rows({{1.0}}));
  CHECK_FAILS_WITH(
      Errc::SingleClassTrainingSet,
      forest::FaircutForest::fit_rows({{1.0}}, {"x"}, cfg));
}

TEST_CASE("random cuts are a valid fallback") {
  const auto ds = testutil::separable_dataset(60, 4, 0.5, 77);
  forest::FcfConfig cfg;
  cfg.num_trees = 50;
  cfg.pick_pooled_gain = 0.0;  // pure isolation-forest style cuts
  cfg.seed = 12;
  const auto fcf = forest::FaircutForest::fit(ds, cfg);
  for (double s : fcf.score(ds)) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("subsampled trees score rows they never saw") {
  const auto ds = testutil::separable_dataset(300, 4, 1.0, 15);
  forest::FcfConfig cfg;
  cfg.num_trees = 60;
  cfg.sample_size = 64;
  cfg.seed = 6;
  const auto fcf = forest::FaircutForest::fit(ds, cfg);
  const auto scores = fcf.score(ds);
  CHECK(scores.size() == 300);
  for (double s : scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}
