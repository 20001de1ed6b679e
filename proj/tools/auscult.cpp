// Command-line front end: synth | features | assemble | run | report.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "auscult/audio.hpp"
#include "auscult/error.hpp"
#include "auscult/pipeline.hpp"
#include "auscult/synth.hpp"

namespace {

using namespace auscult;

int default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void add_threads_option(CLI::App* cmd, int& threads) {
  cmd->add_option("--threads", threads, "worker thread count")
      ->envname("AUSCULT_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

const std::map<std::string, dataset::Windowing> kWindowings = {
    {"w0", dataset::Windowing::W0},
    {"w3", dataset::Windowing::W3},
    {"w5", dataset::Windowing::W5}};

const std::map<std::string, dataset::Variant> kVariants = {
    {"raw", dataset::Variant::Raw}, {"cms", dataset::Variant::Cms},
    {"wms", dataset::Variant::Wms}, {"c2", dataset::Variant::C2},
    {"c3", dataset::Variant::C3},   {"c6", dataset::Variant::C6}};

const std::map<std::string, cv::ModelSpec::Kind> kModels = {
    {"rf", cv::ModelSpec::Kind::Rf}, {"fcf", cv::ModelSpec::Kind::Fcf}};

struct RunArgs {
  pipeline::PipelineConfig config;
  std::string fusion = "none";
  std::string corpus, out, features, config_file;
  bool tune = true;
  bool plots = true;
};

// Flat key=value lines; '#' starts a comment. Keys already given on the
// command line keep their command-line value.
void apply_config_file(const std::string& path, CLI::App* cmd, RunArgs& args,
                       int& threads) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, "cannot read config file " + path);

  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  auto to_bool = [](const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(Errc::BadConfig, "bad boolean for " + key + ": " + v);
  };

  const std::map<std::string, std::function<void(const std::string&)>>
      setters = {
          {"corpus", [&](const std::string& v) { args.corpus = v; }},
          {"out", [&](const std::string& v) { args.out = v; }},
          {"features", [&](const std::string& v) { args.features = v; }},
          {"windowing",
           [&](const std::string& v) {
             args.config.windowing = dataset::windowing_from_string(v);
           }},
          {"variant",
           [&](const std::string& v) {
             args.config.variant = dataset::variant_from_string(v);
           }},
          {"model",
           [&](const std::string& v) {
             const auto it = kModels.find(v);
             if (it == kModels.end())
               fail(Errc::BadConfig, "unknown model: " + v);
             args.config.model = it->second;
           }},
          {"fusion", [&](const std::string& v) { args.fusion = v; }},
          {"k",
           [&](const std::string& v) { args.config.k = std::stoi(v); }},
          {"repeats",
           [&](const std::string& v) { args.config.repeats = std::stoi(v); }},
          {"seed",
           [&](const std::string& v) { args.config.seed = std::stoull(v); }},
          {"trees",
           [&](const std::string& v) {
             args.config.num_trees = std::stoi(v);
           }},
          {"tune",
           [&](const std::string& v) { args.tune = to_bool("tune", v); }},
          {"tune-budget",
           [&](const std::string& v) {
             args.config.tune_budget = std::stoi(v);
           }},
          {"tune-warmup",
           [&](const std::string& v) {
             args.config.tune_warmup = std::stoi(v);
           }},
          {"ndim",
           [&](const std::string& v) { args.config.ndim = std::stoi(v); }},
          {"pick-pooled-gain",
           [&](const std::string& v) {
             args.config.pick_pooled_gain = std::stod(v);
           }},
          {"max-na-fraction",
           [&](const std::string& v) {
             args.config.max_na_fraction = std::stod(v);
           }},
          {"allow-novel",
           [&](const std::string& v) {
             args.config.allow_novel = to_bool("allow-novel", v);
           }},
          {"plots",
           [&](const std::string& v) { args.plots = to_bool("plots", v); }},
          {"threads",
           [&](const std::string& v) { threads = std::stoi(v); }},
      };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::BadConfig,
           path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      fail(Errc::BadConfig,
           path + ":" + std::to_string(line_no) + ": unknown key " + key);
    // Command-line flags win over file values. Flag names map 1:1 onto
    // config keys except tune/plots, which are exposed as --no-* flags.
    const std::string flag = key == "tune" ? "--no-tune"
                             : key == "plots" ? "--no-plots"
                             : key == "trees" ? "--trees"
                                              : "--" + key;
    if (cmd->count(flag) > 0) continue;
    try {
      it->second(value);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(Errc::BadConfig, path + ":" + std::to_string(line_no) +
                                ": bad value for " + key + ": " + value);
    }
  }
}

void setup_synth(CLI::App& app, int& threads) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto spec = std::make_shared<synth::SynthSpec>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--out", *out, "output directory")->required();
  cmd->add_option("--subjects", spec->n_subjects, "number of subjects")
      ->capture_default_str();
  cmd->add_option("--frac", spec->pathological_fraction,
                  "pathological fraction")
      ->capture_default_str();
  cmd->add_option("--seed", spec->seed, "corpus seed")->capture_default_str();
  cmd->add_option("--snr-db", spec->snr_db,
                  "pathology level relative to the calibrated default")
      ->capture_default_str();
  cmd->add_option("--duration", spec->duration_s, "recording length, seconds")
      ->capture_default_str();
  add_threads_option(cmd, threads);
  cmd->callback([spec, out, &threads] {
    const audio::CorpusIndex index = synth::generate(*spec, *out, threads);
    std::cout << "wrote " << index.entries.size() << " recordings ("
              << index.subjects.size() << " subjects) to " << *out << '\n';
  });
}

void setup_features(CLI::App& app, int& threads) {
  auto* cmd =
      app.add_subcommand("features", "Extract per-window feature tables");
  auto corpus = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto windowings = std::make_shared<std::vector<std::string>>(
      std::vector<std::string>{"w5"});
  cmd->add_option("--corpus", *corpus, "corpus directory with manifest.csv")
      ->required();
  cmd->add_option("--out", *out, "output directory")->required();
  cmd->add_option("--windowing", *windowings, "windowing levels (repeatable)")
      ->check(CLI::IsMember({"w0", "w3", "w5"}))
      ->capture_default_str();
  add_threads_option(cmd, threads);
  cmd->callback([corpus, out, windowings, &threads] {
    const audio::CorpusIndex index =
        audio::load_manifest(std::filesystem::path(*corpus) / "manifest.csv");
    audio::validate_files(index, *corpus);
    std::filesystem::create_directories(*out);
    for (const std::string& w : *windowings) {
      const features::FeatureTable table = pipeline::extract_features(
          index, *corpus, dataset::windowing_from_string(w), threads);
      const auto path =
          std::filesystem::path(*out) / ("features_" + w + ".csv");
      features::save_feature_table(path, table);
      std::cout << "wrote " << table.units.size() << " feature rows to "
                << path.string() << '\n';
    }
  });
}

void setup_assemble(CLI::App& app) {
  auto* cmd =
      app.add_subcommand("assemble", "Build a dataset from extracted features");
  auto features_csv = std::make_shared<std::string>();
  auto corpus = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto variant = std::make_shared<dataset::Variant>(dataset::Variant::Cms);
  auto supervised = std::make_shared<bool>(false);
  auto max_na = std::make_shared<double>(1.0);
  cmd->add_option("--features", *features_csv, "feature table CSV")
      ->required();
  cmd->add_option("--corpus", *corpus, "corpus directory with manifest.csv")
      ->required();
  cmd->add_option("--out", *out, "output dataset CSV")->required();
  cmd->add_option("--variant", *variant, "dataset variant")
      ->transform(CLI::CheckedTransformer(kVariants))
      ->capture_default_str();
  cmd->add_flag("--supervised", *supervised,
                "attach meta columns for supervised models");
  cmd->add_option("--max-na-fraction", *max_na,
                  "drop columns above this NA fraction (1 = keep all)")
      ->capture_default_str();
  cmd->callback([features_csv, corpus, out, variant, supervised, max_na] {
    const features::FeatureTable table =
        features::load_feature_table(*features_csv);
    const audio::CorpusIndex index =
        audio::load_manifest(std::filesystem::path(*corpus) / "manifest.csv");
    const dataset::Dataset ds =
        pipeline::assemble(table, index, *variant, *supervised, *max_na);
    dataset::save_dataset(*out, ds);
    std::cout << "wrote " << ds.rows() << " x " << ds.cols() << " dataset to "
              << *out << '\n';
  });
}

void setup_run(CLI::App& app, int& threads) {
  auto* cmd = app.add_subcommand("run", "Cross-validated evaluation run");
  auto args = std::make_shared<RunArgs>();
  auto no_tune = std::make_shared<bool>(false);
  auto no_plots = std::make_shared<bool>(false);

  cmd->add_option("--config", args->config_file,
                  "flat key=value config file; explicit flags override");
  cmd->add_option("--corpus", args->corpus,
                  "corpus directory with manifest.csv");
  cmd->add_option("--out", args->out, "report output directory");
  cmd->add_option("--windowing", args->config.windowing, "windowing level")
      ->transform(CLI::CheckedTransformer(kWindowings))
      ->default_str("w5");
  cmd->add_option("--variant", args->config.variant, "dataset variant")
      ->transform(CLI::CheckedTransformer(kVariants))
      ->default_str("cms");
  cmd->add_option("--model", args->config.model, "model kind")
      ->transform(CLI::CheckedTransformer(kModels))
      ->default_str("rf");
  cmd->add_option("--fusion", args->fusion,
                  "decision fusion scope (none, code, code_side, code_level, "
                  "code_channel)")
      ->check(CLI::IsMember(
          {"none", "code", "code_side", "code_level", "code_channel"}))
      ->capture_default_str();
  cmd->add_option("--k", args->config.k, "folds")->capture_default_str();
  cmd->add_option("--repeats", args->config.repeats, "CV repeats")
      ->capture_default_str();
  cmd->add_option("--seed", args->config.seed, "run seed")
      ->capture_default_str();
  cmd->add_option("--trees", args->config.num_trees, "trees per forest")
      ->capture_default_str();
  cmd->add_flag("--no-tune", *no_tune, "skip hyperparameter tuning (rf)");
  cmd->add_option("--tune-budget", args->config.tune_budget,
                  "tuning evaluations (rf)")
      ->capture_default_str();
  cmd->add_option("--tune-warmup", args->config.tune_warmup,
                  "random warmup evaluations (rf)")
      ->capture_default_str();
  cmd->add_option("--ndim", args->config.ndim, "columns per split (fcf)")
      ->capture_default_str();
  cmd->add_option("--pick-pooled-gain", args->config.pick_pooled_gain,
                  "probability of the guided split criterion (fcf)")
      ->capture_default_str();
  cmd->add_option("--max-na-fraction", args->config.max_na_fraction,
                  "drop columns above this NA fraction (1 = keep all)")
      ->capture_default_str();
  cmd->add_flag("--allow-novel", args->config.allow_novel,
                "permit combinations outside the published grid");
  cmd->add_flag("--no-plots", *no_plots, "skip roc.svg / prc.svg");
  cmd->add_option("--features", args->features,
                  "reuse a previously extracted feature table");
  add_threads_option(cmd, threads);

  cmd->callback([cmd, args, no_tune, no_plots, &threads] {
    if (*no_tune) args->tune = false;
    if (*no_plots) args->plots = false;
    if (!args->config_file.empty())
      apply_config_file(args->config_file, cmd, *args, threads);
    if (args->corpus.empty())
      fail(Errc::BadConfig, "corpus is required (flag or config file)");
    if (args->out.empty())
      fail(Errc::BadConfig, "out is required (flag or config file)");
    args->config.corpus_dir = args->corpus;
    args->config.out_dir = args->out;
    args->config.threads = threads;
    args->config.tune = args->tune;
    args->config.write_plots = args->plots;
    args->config.features_csv = args->features;
    if (args->fusion != "none")
      args->config.fusion_scope = fusion::scope_from_string(args->fusion);
    const pipeline::PipelineResult result = pipeline::run_pipeline(args->config);
    std::cout << pipeline::report_csv_header() << '\n'
              << pipeline::report_csv_row(result.label, result.report) << '\n';
  });
}

void setup_report(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "report", "Combine run output directories into one results table");
  auto dirs = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("dirs", *dirs, "run output directories")->required();
  cmd->add_option("--out", *out, "write the table here instead of stdout");
  cmd->callback([dirs, out] {
    std::vector<std::string> rows;
    for (const std::string& dir : *dirs) {
      const auto path = std::filesystem::path(dir) / "report.csv";
      std::ifstream in(path);
      if (!in) fail(Errc::IoFailure, "cannot read " + path.string());
      std::string header, row;
      if (!std::getline(in, header) || !std::getline(in, row) ||
          header != pipeline::report_csv_header())
        fail(Errc::IoFailure, path.string() + " is not a run report");
      rows.push_back(row);
    }
    std::ostringstream table;
    table << pipeline::report_csv_header() << '\n';
    for (const std::string& row : rows) table << row << '\n';
    if (out->empty()) {
      std::cout << table.str();
    } else {
      std::ofstream file(*out);
      if (!file) fail(Errc::IoFailure, "cannot write " + *out);
      file << table.str();
      std::cout << "wrote " << rows.size() << " rows to " << *out << '\n';
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathological lung sound detection pipeline"};
  app.require_subcommand(1);
  int threads = default_threads();

  setup_synth(app, threads);
  setup_features(app, threads);
  setup_assemble(app);
  setup_run(app, threads);
  setup_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const auscult::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
