#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "auscult/cross_validation.hpp"
#include "auscult/dataset.hpp"
#include "auscult/features.hpp"
#include "auscult/fusion.hpp"

namespace auscult::pipeline {

struct PipelineConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  dataset::Windowing windowing = dataset::Windowing::W5;
  dataset::Variant variant = dataset::Variant::Cms;
  cv::ModelSpec::Kind model = cv::ModelSpec::Kind::Rf;
  std::optional<fusion::Scope> fusion_scope;
  int k = 9;
  int repeats = 30;
  std::uint64_t seed = 1;
  int threads = 1;

  // Supervised model knobs.
  int num_trees = 500;
  bool tune = true;
  int tune_budget = 30;
  int tune_warmup = 19;

  // Unsupervised model knobs.
  int ndim = 3;
  double pick_pooled_gain = 1.0;

  // NA handling before modeling. Values < 1 drop columns whose NA fraction
  // exceeds the limit (shrinking the dataset); the default keeps every
  // column and median-fills instead.
  double max_na_fraction = 1.0;

  // Accept (windowing, variant, fusion) combinations outside the published
  // experiment grid.
  bool allow_novel = false;
  bool write_plots = true;
  // Reuse previously extracted features instead of recomputing.
  std::filesystem::path features_csv;
};

struct PipelineResult {
  std::string label;  // e.g. "RF w5 cms ( 45 x 740 )" or "... fused"
  std::size_t rows = 0;
  std::size_t cols = 0;
  cv::MetricReport report;
  std::vector<cv::RunResult> runs;
};

// True when the combination appears in the published experiment grid.
bool combo_published(dataset::Windowing w, dataset::Variant v,
                     const std::optional<fusion::Scope>& scope);

// Extracts features for every recording at the given windowing.
features::FeatureTable extract_features(const audio::CorpusIndex& index,
                                        const std::filesystem::path& corpus_dir,
                                        dataset::Windowing windowing,
                                        int threads = 1);

// Builds the requested dataset variant (with meta columns when supervised)
// from a feature table. always_split_out receives the attached meta column
// names.
dataset::Dataset assemble(const features::FeatureTable& table,
                          const audio::CorpusIndex& index,
                          dataset::Variant variant, bool supervised,
                          double max_na_fraction,
                          std::vector<std::string>* always_split_out = nullptr);

// Full run: corpus -> features -> dataset -> CV -> report files (report.json,
// report.csv, predictions.csv and optional roc.svg / prc.svg in out_dir).
// On failure every file this call created is removed before rethrowing.
PipelineResult run_pipeline(const PipelineConfig& config);

// Formats one report row; the CSV column order is
// Model, AUC ROC, AUC PRC, Acc, Kappa, Sens, Spec, Prec, NPV, F1.
std::string report_csv_header();
std::string report_csv_row(const std::string& label,
                           const cv::MetricReport& report);

void write_report_files(const std::filesystem::path& out_dir,
                        const PipelineResult& result,
                        const PipelineConfig& config);

}  // namespace auscult::pipeline
