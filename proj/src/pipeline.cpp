#include "auscult/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "auscult/error.hpp"
#include "auscult/parallel.hpp"
#include "auscult/rng.hpp"
#include "auscult/stats.hpp"

namespace auscult::pipeline {

namespace {

using dataset::Variant;
using dataset::Windowing;

std::string combo_key(Windowing w, Variant v,
                      const std::optional<fusion::Scope>& scope) {
  std::string key = std::string(dataset::to_string(w)) + " " +
                    dataset::to_string(v) + " ";
  key += scope ? fusion::to_string(*scope) : "none";
  return key;
}

}  // namespace

bool combo_published(Windowing w, Variant v,
                     const std::optional<fusion::Scope>& scope) {
  static const std::set<std::string> kPublished = {
      // patient-based
      "w0 cms none", "w3 cms none", "w5 cms none", "w0 c6 none", "w5 c6 none",
      "w0 raw code", "w3 raw code", "w5 raw code", "w5 wms code",
      "w0 c2 code", "w0 c3 code", "w5 c2 code", "w5 c3 code",
      // side-based
      "w0 c3 none", "w5 c3 none",
      "w0 raw code_side", "w3 raw code_side", "w5 raw code_side",
      "w5 wms code_side",
      // level-based
      "w0 c2 none", "w5 c2 none",
      "w0 raw code_level", "w3 raw code_level", "w5 raw code_level",
      "w5 wms code_level",
      // channel-based
      "w0 raw none", "w5 wms none", "w3 raw code_channel",
      "w5 raw code_channel",
      // window-based
      "w3 raw none", "w5 raw none",
  };
  return kPublished.count(combo_key(w, v, scope)) > 0;
}

features::FeatureTable extract_features(const audio::CorpusIndex& index,
                                        const std::filesystem::path& corpus_dir,
                                        Windowing windowing, int threads) {
  if (index.entries.empty()) fail(Errc::EmptyCorpus, "manifest lists no files");
  const int n_windows = dataset::window_count(windowing);

  features::FeatureTable table;
  table.registry = features::default_registry();

  // Slot per (entry, window) keeps output order independent of scheduling.
  std::vector<std::vector<features::UnitFeatures>> slots(index.entries.size());
  parallel_for(index.entries.size(), threads, [&](std::size_t e) {
    const audio::Recording rec =
        audio::load_wav(corpus_dir / index.entries[e].file, index);
    auto& units = slots[e];
    for (const audio::WindowedRecording& win :
         audio::split_windows(rec, n_windows)) {
      features::UnitFeatures unit;
      unit.subject_code = win.subject_code;
      unit.channel = win.channel;
      unit.side = win.side;
      unit.level = win.level;
      unit.window_index = win.window_index;
      unit.n_windows = win.n_windows;
      unit.fv = features::extract(win, table.registry);
      units.push_back(std::move(unit));
    }
  });
  for (auto& units : slots) {
    for (auto& unit : units) table.units.push_back(std::move(unit));
  }
  return table;
}

dataset::Dataset assemble(const features::FeatureTable& table,
                          const audio::CorpusIndex& index, Variant variant,
                          bool supervised, double max_na_fraction,
                          std::vector<std::string>* always_split_out) {
  dataset::Dataset ds;
  switch (variant) {
    case Variant::Raw:
      ds = dataset::build_raw(table, index);
      break;
    case Variant::Cms:
      ds = dataset::aggregate_cms(table, index);
      break;
    case Variant::Wms:
      ds = dataset::aggregate_wms(table, index);
      break;
    case Variant::C2:
    case Variant::C3:
    case Variant::C6: {
      const dataset::Dataset base =
          table.units.front().n_windows == 1
              ? dataset::build_raw(table, index)
              : dataset::aggregate_wms(table, index);
      ds = dataset::concat(variant, base);
      break;
    }
  }

  std::vector<std::string> always;
  if (supervised) {
    const auto fields = dataset::applicable_meta(variant);
    if (!fields.empty()) {
      ds = dataset::attach_meta(ds, fields);
      for (dataset::MetaField field : fields) {
        always.push_back(field == dataset::MetaField::Side
                             ? "meta_side"
                             : (field == dataset::MetaField::Level
                                    ? "meta_level"
                                    : "meta_channel"));
      }
    }
  }
  if (always_split_out) *always_split_out = always;

  if (max_na_fraction < 1.0) {
    // Explicit opt-in: drop leaky columns (this changes the column count).
    dataset::ImputePolicy policy;
    policy.kind = dataset::ImputePolicy::Kind::DropColumns;
    policy.max_na_fraction = max_na_fraction;
    ds = dataset::impute_na(ds, policy).ds;
  } else {
    // Shape-preserving default: all-NA columns become constant zero, the
    // rest are median-filled.
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      bool any = false;
      for (const auto& row : ds.matrix) {
        if (std::isfinite(row[c])) {
          any = true;
          break;
        }
      }
      if (!any) {
        for (auto& row : ds.matrix) row[c] = 0.0;
      }
    }
    dataset::ImputePolicy policy;
    policy.kind = dataset::ImputePolicy::Kind::MedianImpute;
    ds = dataset::impute_na(ds, policy).ds;
  }
  return ds;
}

// --- report formatting ---------------------------------------------------------

namespace {

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "NA";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string format_auc(double mean, double ci, bool has_ci) {
  std::string out = format_fixed(mean, 3);
  if (has_ci) out += " ± " + format_fixed(ci, 3);
  return out;
}

}  // namespace

std::string report_csv_header() {
  return "Model,AUC ROC,AUC PRC,Acc,Kappa,Sens,Spec,Prec,NPV,F1";
}

std::string report_csv_row(const std::string& label,
                           const cv::MetricReport& report) {
  std::ostringstream row;
  row << label << ',' << format_auc(report.auc_roc_mean, report.auc_roc_ci,
                                    report.has_ci)
      << ','
      << format_auc(report.auc_prc_mean, report.auc_prc_ci, report.has_ci)
      << ',' << format_fixed(report.central.accuracy * 100.0, 2) << ','
      << format_fixed(report.central.kappa, 3) << ','
      << format_fixed(report.central.sensitivity, 3) << ','
      << format_fixed(report.central.specificity, 3) << ','
      << format_fixed(report.central.precision, 3) << ','
      << format_fixed(report.central.npv, 3) << ','
      << format_fixed(report.central.f1, 3);
  return row.str();
}

// --- curve plots ---------------------------------------------------------------

namespace {

// TPR sampled on a fixed FPR grid (step interpolation of the ROC staircase).
std::vector<double> roc_on_grid(const std::vector<fusion::Prediction>& preds,
                                const std::vector<double>& grid) {
  std::vector<std::pair<double, int>> ranked;  // (score, label)
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& pred : preds) {
    ranked.push_back({pred.score, pred.label});
    (pred.label == 1 ? n_pos : n_neg) += 1;
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<std::pair<double, double>> points{{0.0, 0.0}};  // (fpr, tpr)
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < ranked.size()) {
    std::size_t j = i;
    while (j < ranked.size() && ranked[j].first == ranked[i].first) ++j;
    for (std::size_t t = i; t < j; ++t) (ranked[t].second == 1 ? tp : fp) += 1;
    points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                      static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }

  std::vector<double> tpr(grid.size(), 0.0);
  std::size_t p = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (p + 1 < points.size() && points[p + 1].first <= grid[g] + 1e-12) ++p;
    tpr[g] = points[p].second;
  }
  return tpr;
}

// Precision sampled on a fixed recall grid.
std::vector<double> prc_on_grid(const std::vector<fusion::Prediction>& preds,
                                const std::vector<double>& grid) {
  std::vector<std::pair<double, int>> ranked;
  std::size_t n_pos = 0;
  for (const auto& pred : preds) {
    ranked.push_back({pred.score, pred.label});
    n_pos += pred.label == 1;
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  });

  std::vector<std::pair<double, double>> points;  // (recall, precision)
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].second == 1;
    points.push_back({static_cast<double>(tp) / static_cast<double>(n_pos),
                      static_cast<double>(tp) / static_cast<double>(k + 1)});
  }

  std::vector<double> precision(grid.size(), 1.0);
  std::size_t p = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (p < points.size() && points[p].first < grid[g] - 1e-12) ++p;
    precision[g] = p < points.size() ? points[p].second : points.back().second;
  }
  return precision;
}

struct Band {
  std::vector<double> mean, lo, hi;
};

Band band_over_runs(const std::vector<std::vector<double>>& curves) {
  const std::size_t n_grid = curves[0].size();
  const double r = std::sqrt(static_cast<double>(curves.size()));
  Band band;
  band.mean.resize(n_grid);
  band.lo.resize(n_grid);
  band.hi.resize(n_grid);
  std::vector<double> column(curves.size());
  for (std::size_t g = 0; g < n_grid; ++g) {
    for (std::size_t c = 0; c < curves.size(); ++c) column[c] = curves[c][g];
    const double mean = stats::mean(column);
    const double half =
        curves.size() >= 2 ? 1.645 * stats::stdev_sample(column) / r : 0.0;
    band.mean[g] = mean;
    band.lo[g] = std::max(0.0, mean - half);
    band.hi[g] = std::min(1.0, mean + half);
  }
  return band;
}

void write_curve_svg(const std::filesystem::path& path, const Band& band,
                     const std::vector<double>& grid, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     bool diagonal) {
  constexpr double kX0 = 60, kX1 = 440, kY0 = 300, kY1 = 40;
  auto px = [&](double x) { return kX0 + x * (kX1 - kX0); };
  auto py = [&](double y) { return kY0 + y * (kY1 - kY0); };
  char buf[64];
  auto point = [&](double x, double y) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
    return std::string(buf);
  };

  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
         "height=\"360\" viewBox=\"0 0 480 360\">\n"
      << "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";

  // Confidence band polygon.
  out << "<polygon fill=\"#d8d8d8\" stroke=\"none\" points=\"";
  for (std::size_t g = 0; g < grid.size(); ++g) out << point(grid[g], band.hi[g]);
  for (std::size_t g = grid.size(); g-- > 0;) out << point(grid[g], band.lo[g]);
  out << "\"/>\n";

  if (diagonal) {
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1)
        << "\" y2=\"" << py(1)
        << "\" stroke=\"#999999\" stroke-dasharray=\"5,4\"/>\n";
  }

  out << "<polyline fill=\"none\" stroke=\"#2060c0\" stroke-width=\"2\" "
         "points=\"";
  for (std::size_t g = 0; g < grid.size(); ++g)
    out << point(grid[g], band.mean[g]);
  out << "\"/>\n";

  // Axes and ticks.
  out << "<line x1=\"" << kX0 << "\" y1=\"" << kY0 << "\" x2=\"" << kX1
      << "\" y2=\"" << kY0 << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kX0 << "\" y1=\"" << kY0 << "\" x2=\"" << kX0
      << "\" y2=\"" << kY1 << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    out << "<text x=\"" << px(v) << "\" y=\"" << kY0 + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << buf << "</text>\n"
        << "<text x=\"" << kX0 - 8 << "\" y=\"" << py(v) + 3
        << "\" font-size=\"10\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  out << "<text x=\"" << (kX0 + kX1) / 2 << "\" y=\"" << kY0 + 34
      << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << (kY0 + kY1) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "16 "
      << (kY0 + kY1) / 2 << ")\">" << y_label << "</text>\n"
      << "<text x=\"" << (kX0 + kX1) / 2
      << "\" y=\"22\" font-size=\"13\" text-anchor=\"middle\">" << title
      << "</text>\n</svg>\n";
}

}  // namespace

void write_report_files(const std::filesystem::path& out_dir,
                        const PipelineResult& result,
                        const PipelineConfig& config) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "report.csv");
    if (!out) fail(Errc::IoFailure, "cannot write report.csv");
    out << report_csv_header() << '\n'
        << report_csv_row(result.label, result.report) << '\n';
  }

  {
    nlohmann::ordered_json doc;
    doc["label"] = result.label;
    doc["model"] = config.model == cv::ModelSpec::Kind::Rf ? "rf" : "fcf";
    doc["windowing"] = dataset::to_string(config.windowing);
    doc["variant"] = dataset::to_string(config.variant);
    doc["fusion"] = config.fusion_scope
                        ? nlohmann::json(fusion::to_string(*config.fusion_scope))
                        : nlohmann::json(nullptr);
    doc["rows"] = result.rows;
    doc["cols"] = result.cols;
    doc["k"] = config.k;
    doc["repeats"] = config.repeats;
    doc["seed"] = config.seed;
    doc["n_runs"] = result.report.n_runs;
    doc["auc_roc"] = {{"mean", result.report.auc_roc_mean},
                      {"ci90", result.report.auc_roc_ci}};
    doc["auc_prc"] = {{"mean", result.report.auc_prc_mean},
                      {"ci90", result.report.auc_prc_ci}};
    doc["central_repeat"] = result.report.central_repeat;
    doc["threshold"] = result.report.threshold;
    const auto& central = result.report.central;
    doc["confusion"] = {{"tp", central.tp},
                        {"tn", central.tn},
                        {"fp", central.fp},
                        {"fn", central.fn},
                        {"accuracy", central.accuracy},
                        {"kappa", central.kappa},
                        {"sensitivity", central.sensitivity},
                        {"specificity", central.specificity},
                        {"precision", central.precision},
                        {"npv", central.npv},
                        {"f1", central.f1}};
    nlohmann::ordered_json per_run = nlohmann::json::array();
    for (const auto& run : result.runs)
      per_run.push_back({{"repeat", run.repeat},
                         {"auc_roc", run.auc_roc},
                         {"auc_prc", run.auc_prc}});
    doc["per_run"] = std::move(per_run);
    std::ofstream out(out_dir / "report.json");
    if (!out) fail(Errc::IoFailure, "cannot write report.json");
    out << doc.dump(2) << '\n';
  }

  cv::save_predictions(out_dir / "predictions.csv", result.runs, false);
  if (config.fusion_scope)
    cv::save_predictions(out_dir / "predictions_fused.csv", result.runs, true);

  if (config.write_plots) {
    std::vector<double> grid(101);
    for (std::size_t g = 0; g < grid.size(); ++g)
      grid[g] = static_cast<double>(g) / 100.0;
    std::vector<std::vector<double>> rocs, prcs;
    for (const auto& run : result.runs) {
      rocs.push_back(roc_on_grid(run.eval_predictions, grid));
      prcs.push_back(prc_on_grid(run.eval_predictions, grid));
    }
    write_curve_svg(out_dir / "roc.svg", band_over_runs(rocs), grid,
                    result.label, "False positive rate", "True positive rate",
                    true);
    write_curve_svg(out_dir / "prc.svg", band_over_runs(prcs), grid,
                    result.label, "Recall", "Precision", false);
  }
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  if (!combo_published(config.windowing, config.variant, config.fusion_scope) &&
      !config.allow_novel)
    fail(Errc::BadConfig,
         "combination " +
             combo_key(config.windowing, config.variant, config.fusion_scope) +
             " is outside the published grid; pass allow_novel to force");
  if (config.repeats < 1 || config.k < 2)
    fail(Errc::BadConfig, "need repeats >= 1 and k >= 2");

  const audio::CorpusIndex index =
      audio::load_manifest(config.corpus_dir / "manifest.csv");
  audio::validate_files(index, config.corpus_dir);

  features::FeatureTable table;
  if (!config.features_csv.empty()) {
    table = features::load_feature_table(config.features_csv);
  } else {
    table = extract_features(index, config.corpus_dir, config.windowing,
                             config.threads);
  }

  const bool supervised = config.model == cv::ModelSpec::Kind::Rf;
  std::vector<std::string> always_split;
  const dataset::Dataset ds =
      assemble(table, index, config.variant, supervised,
               config.max_na_fraction, &always_split);

  const cv::FoldPlan plan =
      cv::make_folds(index.subjects, config.k, config.repeats,
                     derive_seed(config.seed, 0xf01d));

  cv::ModelSpec spec;
  spec.kind = config.model;
  spec.num_trees = config.num_trees;
  spec.tune = config.tune;
  spec.tune_budget = config.tune_budget;
  spec.tune_warmup = config.tune_warmup;
  spec.always_split = always_split;
  spec.ndim = config.ndim;
  spec.pick_pooled_gain = config.pick_pooled_gain;

  PipelineResult result;
  result.runs = cv::run_cv(ds, plan, spec, config.fusion_scope,
                           derive_seed(config.seed, 0xcf), config.threads);
  result.report = cv::aggregate_runs(result.runs);
  result.rows = ds.rows();
  result.cols = ds.cols();

  std::ostringstream label;
  label << (supervised ? "RF" : "FCF") << ' '
        << dataset::to_string(config.windowing) << ' '
        << dataset::to_string(config.variant) << " ( " << ds.rows() << " x "
        << ds.cols() << " )";
  if (config.fusion_scope) label << " fused";
  result.label = label.str();

  // Written last, and removed wholesale if anything above threw; the caller
  // sees either a complete report or none.
  const std::vector<std::filesystem::path> outputs = {
      config.out_dir / "report.csv",    config.out_dir / "report.json",
      config.out_dir / "predictions.csv",
      config.out_dir / "predictions_fused.csv",
      config.out_dir / "roc.svg",       config.out_dir / "prc.svg"};
  try {
    write_report_files(config.out_dir, result, config);
  } catch (...) {
    for (const auto& path : outputs) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
    throw;
  }
  return result;
}

}  // namespace auscult::pipeline
