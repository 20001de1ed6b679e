#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "auscult/dataset.hpp"
#include "auscult/faircut_forest.hpp"
#include "auscult/fusion.hpp"
#include "auscult/metrics.hpp"
#include "auscult/random_forest.hpp"

namespace auscult::cv {

struct FoldPlan {
  int k = 9;
  int repeats = 30;
  // assignment[repeat][subject_code] = fold index in [0, k)
  std::vector<std::map<std::string, int>> assignment;
};

// Subject-level stratified assignment; strata are sex x diagnosis. Per fold
// and repeat, each stratum contributes floor(m/k) or ceil(m/k) subjects.
// Deterministic in (subjects, k, repeats, seed).
FoldPlan make_folds(const std::vector<audio::SubjectMeta>& subjects, int k,
                    int repeats, std::uint64_t seed);

struct ModelSpec {
  enum class Kind { Rf, Fcf };
  Kind kind = Kind::Rf;
  int num_trees = 500;

  // RF: per-fold hyperparameter search over (mtry, min_node_size) by OOB
  // log-loss; tune=false fits the defaults instead.
  bool tune = true;
  int tune_budget = 30;
  int tune_warmup = 19;
  std::vector<std::string> always_split;

  // FCF
  int ndim = 3;
  double pick_pooled_gain = 1.0;
};

struct RunResult {
  int repeat = 0;
  // Every dataset row scored exactly once (pooled over folds).
  std::vector<fusion::Prediction> row_predictions;
  // What the metrics were computed on: fused groups, or the rows again.
  std::vector<fusion::Prediction> eval_predictions;
  double auc_roc = 0.0;
  double auc_prc = 0.0;
};

// Per repeat: fit on the training folds, score the test fold, pool, fuse if
// a scope is given, and compute both AUCs. Model seeds are derived from
// (seed, repeat, fold) so results are independent of thread count.
std::vector<RunResult> run_cv(const dataset::Dataset& ds, const FoldPlan& plan,
                              const ModelSpec& spec,
                              const std::optional<fusion::Scope>& scope,
                              std::uint64_t seed, int threads = 1);

struct MetricReport {
  std::size_t n_runs = 0;
  bool has_ci = false;
  double auc_roc_mean = 0.0;
  double auc_roc_ci = 0.0;  // half-width
  double auc_prc_mean = 0.0;
  double auc_prc_ci = 0.0;
  int central_repeat = 0;  // run closest to the mean AUC ROC
  double threshold = 0.0;  // equal-error-rate threshold of the central run
  metrics::ConfusionMetrics central;
};

// Mean +/- z*sd/sqrt(R) for both AUCs (z=1.645 at the default 0.90) and
// confusion metrics of the central run at its EER threshold.
MetricReport aggregate_runs(const std::vector<RunResult>& runs,
                            double confidence = 0.90);

// CSV: repeat, fold, row_id, subject, side, level, channel, window, score,
// label, fused_scope.
void save_predictions(const std::filesystem::path& path,
                      const std::vector<RunResult>& runs,
                      bool fused_view = false);

}  // namespace auscult::cv
