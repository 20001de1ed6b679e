#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "auscult/cross_validation.hpp"
#include "auscult/error.hpp"
#include "auscult/rng.hpp"
#include "test_util.hpp"

using namespace auscult;

namespace {

// The clinical corpus demographics: 19 pathological (8 F / 11 M),
// 26 normal (12 F / 14 M).
std::vector<audio::SubjectMeta> clinic_subjects() {
  std::vector<audio::SubjectMeta> subjects;
  auto add = [&](int count, audio::Sex sex, int diagnosis) {
    for (int i = 0; i < count; ++i) {
      audio::SubjectMeta meta;
      meta.subject_code = testutil::subject_code(
          static_cast<int>(subjects.size()));
      meta.sex = sex;
      meta.age = 50.0;
      meta.diagnosis = diagnosis;
      subjects.push_back(meta);
    }
  };
  add(8, audio::Sex::Female, 1);
  add(11, audio::Sex::Male, 1);
  add(12, audio::Sex::Female, 0);
  add(14, audio::Sex::Male, 0);
  return subjects;
}

}  // namespace

TEST_CASE("fold plans are stratified, balanced and leak-free") {
  const auto subjects = clinic_subjects();
  const auto plan = cv::make_folds(subjects, 9, 30, 42);
  REQUIRE(plan.assignment.size() == 30);
  CHECK(plan.k == 9);

  for (const auto& repeat : plan.assignment) {
    // every subject appears exactly once
    CHECK(repeat.size() == subjects.size());

    std::vector<int> fold_sizes(9, 0);
    std::map<std::pair<int, int>, std::vector<int>> strata_counts;
    for (const auto& subject : subjects) {
      const int fold = repeat.at(subject.subject_code);
      CHECK(fold >= 0);
      CHECK(fold < 9);
      ++fold_sizes[static_cast<std::size_t>(fold)];
      auto& counts = strata_counts[{static_cast<int>(subject.sex),
                                    subject.diagnosis}];
      counts.resize(9, 0);
      ++counts[static_cast<std::size_t>(fold)];
    }
    for (int size : fold_sizes) CHECK(size == 5);  // 45 / 9 exactly

    // per-stratum fold counts within floor/ceil of m/k
    for (const auto& [stratum, counts] : strata_counts) {
      int total = 0;
      for (int c : counts) total += c;
      for (int c : counts) {
        CHECK(c >= total / 9);
        CHECK(c <= (total + 8) / 9);
      }
    }
  }

  // repeats differ from each other
  CHECK(plan.assignment[0] != plan.assignment[1]);

  // deterministic in the seed
  const auto again = cv::make_folds(subjects, 9, 30, 42);
  for (int r = 0; r < 30; ++r)
    CHECK(again.assignment[static_cast<std::size_t>(r)] ==
          plan.assignment[static_cast<std::size_t>(r)]);
  const auto other = cv::make_folds(subjects, 9, 30, 43);
  CHECK(other.assignment[0] != plan.assignment[0]);
}

TEST_CASE("fold plan rejects impossible k") {
  const auto subjects = clinic_subjects();
  CHECK_FAILS_WITH(Errc::TooFewSubjectsForK,
                   cv::make_folds(subjects, 1, 1, 0));
  CHECK_FAILS_WITH(Errc::TooFewSubjectsForK,
                   cv::make_folds(subjects, 46, 1, 0));
  const auto plan = cv::make_folds(subjects, 45, 1, 0);  // leave-one-out
  std::set<int> folds;
  for (const auto& [code, fold] : plan.assignment[0]) folds.insert(fold);
  CHECK(folds.size() == 45);
}

TEST_CASE("cross-validation scores every row exactly once") {
  const auto ds = testutil::separable_dataset(24, 4, 2.5, 314);
  std::vector<audio::SubjectMeta> subjects;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    audio::SubjectMeta meta;
    meta.subject_code = ds.row_meta[r].subject_code;
    meta.sex = r % 2 == 0 ? audio::Sex::Female : audio::Sex::Male;
    meta.diagnosis = ds.labels[r];
    subjects.push_back(meta);
  }
  const auto plan = cv::make_folds(subjects, 4, 3, 5);

  cv::ModelSpec spec;
  spec.kind = cv::ModelSpec::Kind::Rf;
  spec.num_trees = 60;
  spec.tune = false;
  const auto runs = cv::run_cv(ds, plan, spec, std::nullopt, 99, 2);
  REQUIRE(runs.size() == 3);

  for (const auto& run : runs) {
    REQUIRE(run.row_predictions.size() == ds.rows());
    std::set<long> ids;
    for (const auto& pred : run.row_predictions) {
      ids.insert(pred.row_id);
      CHECK(pred.label == ds.labels[static_cast<std::size_t>(pred.row_id)]);
      CHECK(pred.score >= 0.0);
      CHECK(pred.score <= 1.0);
      CHECK(pred.fold ==
            plan.assignment[static_cast<std::size_t>(run.repeat)].at(
                pred.meta.subject_code));
    }
    CHECK(ids.size() == ds.rows());
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == static_cast<long>(ds.rows()) - 1);
    // no fusion: evaluation set is the row set
    CHECK(run.eval_predictions.size() == ds.rows());
    CHECK(run.auc_roc >= 0.9);  // trivially separable
    CHECK(run.auc_roc <= 1.0);
    CHECK(run.auc_prc <= 1.0);
  }

  // thread-count invariance
  const auto runs1 = cv::run_cv(ds, plan, spec, std::nullopt, 99, 1);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    REQUIRE(runs1[r].row_predictions.size() == runs[r].row_predictions.size());
    for (std::size_t i = 0; i < runs[r].row_predictions.size(); ++i)
      CHECK(runs1[r].row_predictions[i].score ==
            runs[r].row_predictions[i].score);
    CHECK(runs1[r].auc_roc == runs[r].auc_roc);
  }
}

TEST_CASE("cross-validation with fusion evaluates groups") {
  // 8 subjects x 6 channel rows, separable at the subject level
  dataset::Dataset ds;
  ds.variant = dataset::Variant::Raw;
  ds.column_names = {"x0", "x1"};
  Rng rng(8);
  std::vector<audio::SubjectMeta> subjects;
  const auto channel_map = testutil::channel_map();
  for (int s = 0; s < 8; ++s) {
    audio::SubjectMeta meta;
    meta.subject_code = testutil::subject_code(s);
    meta.sex = s % 2 == 0 ? audio::Sex::Female : audio::Sex::Male;
    meta.diagnosis = s % 2;
    subjects.push_back(meta);
    for (int ch = 1; ch <= 6; ++ch) {
      dataset::RowMeta rm;
      rm.subject_code = meta.subject_code;
      rm.channel = ch;
      rm.side = channel_map.at(ch).first;
      rm.level = channel_map.at(ch).second;
      ds.row_meta.push_back(rm);
      ds.labels.push_back(meta.diagnosis);
      ds.matrix.push_back({rng.normal() + 3.0 * meta.diagnosis, rng.normal()});
    }
  }

  const auto plan = cv::make_folds(subjects, 4, 2, 3);
  cv::ModelSpec spec;
  spec.num_trees = 40;
  spec.tune = false;
  const auto runs =
      cv::run_cv(ds, plan, spec, fusion::Scope::Code, 17, 2);
  for (const auto& run : runs) {
    CHECK(run.row_predictions.size() == 48);
    CHECK(run.eval_predictions.size() == 8);  // one per subject
    for (const auto& pred : run.eval_predictions) {
      CHECK(pred.fused_scope == "code");
      CHECK(pred.row_id == -1);
    }
  }

  // FCF over the same plan
  cv::ModelSpec fcf;
  fcf.kind = cv::ModelSpec::Kind::Fcf;
  fcf.num_trees = 60;
  const auto fruns = cv::run_cv(ds, plan, fcf, fusion::Scope::Code, 17, 2);
  for (const auto& run : fruns) {
    CHECK(run.eval_predictions.size() == 8);
    for (const auto& pred : run.row_predictions) {
      CHECK(pred.score > 0.0);
      CHECK(pred.score < 1.0);
    }
  }
}

TEST_CASE("run_cv rejects a plan that misses subjects") {
  const auto ds = testutil::separable_dataset(10, 3, 1.0, 2);
  std::vector<audio::SubjectMeta> few;
  for (int s = 0; s < 5; ++s) {
    audio::SubjectMeta meta;
    meta.subject_code = testutil::subject_code(s);
    meta.diagnosis = s % 2;
    few.push_back(meta);
  }
  const auto plan = cv::make_folds(few, 2, 1, 1);
  cv::ModelSpec spec;
  spec.num_trees = 10;
  spec.tune = false;
  CHECK_FAILS_WITH(Errc::UnknownSubject,
                   cv::run_cv(ds, plan, spec, std::nullopt, 1, 1));
}

TEST_CASE("aggregation computes the confidence interval and central run") {
  std::vector<cv::RunResult> runs(4);
  const double aucs[] = {0.60, 0.70, 0.62, 0.68};
  for (int r = 0; r < 4; ++r) {
    runs[static_cast<std::size_t>(r)].repeat = r;
    runs[static_cast<std::size_t>(r)].auc_roc = aucs[r];
    runs[static_cast<std::size_t>(r)].auc_prc = aucs[r] + 0.1;
    // predictions so the central run's confusion metrics exist
    for (int i = 0; i < 6; ++i) {
      fusion::Prediction p;
      p.repeat = r;
      p.row_id = i;
      p.score = i / 6.0;
      p.label = i >= 3;
      runs[static_cast<std::size_t>(r)].eval_predictions.push_back(p);
    }
  }

  const auto report = cv::aggregate_runs(runs);
  CHECK(report.n_runs == 4);
  CHECK(report.has_ci);
  CHECK(report.auc_roc_mean == doctest::Approx(0.65).epsilon(1e-12));
  const double sd = std::sqrt((0.0025 + 0.0025 + 0.0009 + 0.0009) / 3.0);
  CHECK(report.auc_roc_ci ==
        doctest::Approx(1.645 * sd / 2.0).epsilon(1e-9));
  // |0.62 - 0.65| < |0.60/0.70/0.68 - 0.65| except 0.68 ties at 0.03;
  // 0.62 appears earlier
  CHECK(report.central_repeat == 2);
  CHECK(report.central.tp == 3);
  CHECK(report.central.tn == 3);

  // confidence levels
  const auto wide = cv::aggregate_runs(runs, 0.99);
  CHECK(wide.auc_roc_ci > report.auc_roc_ci);
  CHECK_FAILS_WITH(Errc::BadConfig, cv::aggregate_runs(runs, 0.5));

  // single run: point estimate only
  const auto single = cv::aggregate_runs({runs[0]});
  CHECK(!single.has_ci);
  CHECK(single.auc_roc_mean == doctest::Approx(0.60).epsilon(1e-12));
  CHECK(single.auc_roc_ci == 0.0);

  CHECK_FAILS_WITH(Errc::BadConfig, cv::aggregate_runs({}));
}

TEST_CASE("prediction CSV lists rows in a stable order") {
  const auto dir =
      std::filesystem::temp_directory_path() / "auscult_predcsv";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  std::vector<cv::RunResult> runs(1);
  runs[0].repeat = 0;
  for (int i = 0; i < 3; ++i) {
    fusion::Prediction p;
    p.repeat = 0;
    p.fold = i % 2;
    p.row_id = i;
    p.meta.subject_code = testutil::subject_code(i);
    p.meta.channel = i + 1;
    p.score = 0.25 * i;
    p.label = i > 0;
    runs[0].row_predictions.push_back(p);
    runs[0].eval_predictions.push_back(p);
  }

  cv::save_predictions(dir / "p.csv", runs);
  std::ifstream in(dir / "p.csv");
  std::string header, line1;
  std::getline(in, header);
  std::getline(in, line1);
  CHECK(header ==
        "repeat,fold,row_id,subject,side,level,channel,window,score,label,"
        "fused_scope");
  CHECK(line1.substr(0, 6) == "0,0,0,");
  CHECK(line1.find("S01") != std::string::npos);
}
