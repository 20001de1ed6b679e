#include "auscult/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "auscult/error.hpp"
#include "auscult/parallel.hpp"
#include "auscult/rf_tune.hpp"
#include "auscult/rng.hpp"
#include "auscult/stats.hpp"

namespace auscult::cv {

FoldPlan make_folds(const std::vector<audio::SubjectMeta>& subjects, int k,
                    int repeats, std::uint64_t seed) {
  const std::size_t n_subjects = subjects.size();
  if (k < 2 || static_cast<std::size_t>(k) > n_subjects)
    fail(Errc::TooFewSubjectsForK, "k must satisfy 2 <= k <= subject count");

  // Strata keyed (sex, diagnosis), members in subject order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n_subjects; ++i)
    strata[{subjects[i].sex == audio::Sex::Female ? 0 : 1,
            subjects[i].diagnosis}]
        .push_back(i);

  FoldPlan plan;
  plan.k = k;
  plan.repeats = repeats;
  plan.assignment.resize(static_cast<std::size_t>(repeats));

  const std::size_t base_size = n_subjects / static_cast<std::size_t>(k);
  const std::size_t size_rem = n_subjects % static_cast<std::size_t>(k);

  for (int repeat = 0; repeat < repeats; ++repeat) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(repeat)));

    std::vector<int> fold_order(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) fold_order[static_cast<std::size_t>(f)] = f;
    rng.shuffle(fold_order);

    std::vector<std::size_t> capacity(static_cast<std::size_t>(k), base_size);
    for (std::size_t i = 0; i < size_rem; ++i)
      capacity[static_cast<std::size_t>(fold_order[i])] += 1;

    // Shuffle each stratum's members (stratum key order fixes rng order).
    struct StratumDraw {
      std::vector<std::size_t> members;
      std::size_t quota = 0;
      std::size_t extras = 0;
    };
    std::vector<StratumDraw> draws;
    for (const auto& [key, members] : strata) {
      StratumDraw draw;
      draw.members = members;
      rng.shuffle(draw.members);
      draw.quota = draw.members.size() / static_cast<std::size_t>(k);
      draw.extras = draw.members.size() % static_cast<std::size_t>(k);
      draws.push_back(std::move(draw));
    }

    auto& fold_of = plan.assignment[static_cast<std::size_t>(repeat)];
    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);

    // Base quotas: quota members per fold from every stratum.
    for (auto& draw : draws) {
      std::size_t next = 0;
      for (int f = 0; f < k; ++f) {
        for (std::size_t q = 0; q < draw.quota; ++q)
          fold_of[subjects[draw.members[next++]].subject_code] = f;
        load[static_cast<std::size_t>(f)] += draw.quota;
      }
      // Extras stay at the tail: members[next..].
      draw.members.erase(draw.members.begin(),
                         draw.members.begin() + static_cast<std::ptrdiff_t>(next));
    }

    // Extras: stratum with the most leftovers first, to the emptiest folds
    // (slack = capacity - load), so fold sizes stay balanced.
    std::vector<std::size_t> order(draws.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return draws[a].extras > draws[b].extras;
    });
    std::vector<int> fold_rank(static_cast<std::size_t>(k));
    for (int pos = 0; pos < k; ++pos)
      fold_rank[static_cast<std::size_t>(fold_order[pos])] = pos;

    for (std::size_t s : order) {
      StratumDraw& draw = draws[s];
      std::vector<int> folds(static_cast<std::size_t>(k));
      for (int f = 0; f < k; ++f) folds[static_cast<std::size_t>(f)] = f;
      std::stable_sort(folds.begin(), folds.end(), [&](int a, int b) {
        const auto slack_a = static_cast<std::ptrdiff_t>(capacity[static_cast<std::size_t>(a)]) -
                             static_cast<std::ptrdiff_t>(load[static_cast<std::size_t>(a)]);
        const auto slack_b = static_cast<std::ptrdiff_t>(capacity[static_cast<std::size_t>(b)]) -
                             static_cast<std::ptrdiff_t>(load[static_cast<std::size_t>(b)]);
        if (slack_a != slack_b) return slack_a > slack_b;
        return fold_rank[static_cast<std::size_t>(a)] <
               fold_rank[static_cast<std::size_t>(b)];
      });
      for (std::size_t e = 0; e < draw.extras; ++e) {
        const int f = folds[e];
        fold_of[subjects[draw.members[e]].subject_code] = f;
        load[static_cast<std::size_t>(f)] += 1;
      }
    }
  }
  return plan;
}

namespace {

dataset::Dataset subset_rows(const dataset::Dataset& ds,
                             const std::vector<std::size_t>& rows) {
  dataset::Dataset out;
  out.variant = ds.variant;
  out.windowing = ds.windowing;
  out.column_names = ds.column_names;
  out.matrix.reserve(rows.size());
  for (std::size_t r : rows) {
    out.matrix.push_back(ds.matrix[r]);
    out.row_meta.push_back(ds.row_meta[r]);
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

}  // namespace

std::vector<RunResult> run_cv(const dataset::Dataset& ds, const FoldPlan& plan,
                              const ModelSpec& spec,
                              const std::optional<fusion::Scope>& scope,
                              std::uint64_t seed, int threads) {
  const std::size_t n_rows = ds.rows();
  const std::size_t n_tasks = static_cast<std::size_t>(plan.repeats) *
                              static_cast<std::size_t>(plan.k);

  // Every subject in the dataset must be planned, for every repeat.
  for (const auto& per_repeat : plan.assignment) {
    for (const auto& meta : ds.row_meta) {
      if (!per_repeat.count(meta.subject_code))
        fail(Errc::UnknownSubject,
             "fold plan misses subject " + meta.subject_code);
    }
  }

  // slot[(repeat, fold)] = predictions of that test fold.
  std::vector<std::vector<fusion::Prediction>> slots(n_tasks);

  parallel_for(n_tasks, threads, [&](std::size_t task) {
    const int repeat = static_cast<int>(task) / plan.k;
    const int fold = static_cast<int>(task) % plan.k;
    const auto& fold_of = plan.assignment[static_cast<std::size_t>(repeat)];

    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < n_rows; ++r) {
      const int f = fold_of.at(ds.row_meta[r].subject_code);
      (f == fold ? test_rows : train_rows).push_back(r);
    }
    if (test_rows.empty()) return;

    const dataset::Dataset train = subset_rows(ds, train_rows);
    const dataset::Dataset test = subset_rows(ds, test_rows);
    const std::uint64_t task_seed =
        derive_seed(seed, static_cast<std::uint64_t>(repeat),
                    static_cast<std::uint64_t>(fold));

    std::vector<double> scores;
    if (spec.kind == ModelSpec::Kind::Rf) {
      forest::RfConfig cfg;
      if (spec.tune) {
        forest::RfTuneOptions opt;
        opt.budget = spec.tune_budget;
        opt.warmup = spec.tune_warmup;
        opt.num_trees = spec.num_trees;
        opt.always_split = spec.always_split;
        opt.seed = task_seed;
        cfg = forest::rf_tune(train, opt).best;
      } else {
        cfg.num_trees = spec.num_trees;
        cfg.always_split = spec.always_split;
        cfg.seed = derive_seed(task_seed, 0xf17);
      }
      const auto model = forest::RandomForest::fit(train, cfg);
      scores = model.predict(test);
    } else {
      forest::FcfConfig cfg;
      cfg.num_trees = spec.num_trees;
      cfg.ndim = spec.ndim;
      cfg.pick_pooled_gain = spec.pick_pooled_gain;
      cfg.seed = task_seed;
      const auto model = forest::FaircutForest::fit(train, cfg);
      scores = model.score(test);
    }

    auto& out = slots[task];
    out.reserve(test_rows.size());
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      fusion::Prediction pred;
      pred.repeat = repeat;
      pred.fold = fold;
      pred.row_id = static_cast<long>(test_rows[i]);
      pred.meta = ds.row_meta[test_rows[i]];
      pred.score = scores[i];
      pred.label = ds.labels[test_rows[i]];
      out.push_back(std::move(pred));
    }
  });

  std::vector<RunResult> runs(static_cast<std::size_t>(plan.repeats));
  for (int repeat = 0; repeat < plan.repeats; ++repeat) {
    RunResult& run = runs[static_cast<std::size_t>(repeat)];
    run.repeat = repeat;
    for (int fold = 0; fold < plan.k; ++fold) {
      const auto& slot =
          slots[static_cast<std::size_t>(repeat) *
                    static_cast<std::size_t>(plan.k) +
                static_cast<std::size_t>(fold)];
      run.row_predictions.insert(run.row_predictions.end(), slot.begin(),
                                 slot.end());
    }
    // Pooled predictions, sorted back to dataset row order.
    std::sort(run.row_predictions.begin(), run.row_predictions.end(),
              [](const auto& a, const auto& b) { return a.row_id < b.row_id; });

    run.eval_predictions =
        scope ? fusion::fuse(run.row_predictions, *scope) : run.row_predictions;

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(run.eval_predictions.size());
    for (const auto& pred : run.eval_predictions) {
      scores.push_back(pred.score);
      labels.push_back(pred.label);
    }
    run.auc_roc = metrics::auc_roc(scores, labels);
    run.auc_prc = metrics::auc_prc(scores, labels);
  }
  return runs;
}

MetricReport aggregate_runs(const std::vector<RunResult>& runs,
                            double confidence) {
  if (runs.empty()) fail(Errc::BadConfig, "no runs to aggregate");
  double z = 0.0;
  if (std::abs(confidence - 0.90) < 1e-9) z = 1.645;
  else if (std::abs(confidence - 0.95) < 1e-9) z = 1.96;
  else if (std::abs(confidence - 0.99) < 1e-9) z = 2.576;
  else fail(Errc::BadConfig, "supported confidence levels: 0.90, 0.95, 0.99");

  MetricReport report;
  report.n_runs = runs.size();

  std::vector<double> rocs, prcs;
  for (const auto& run : runs) {
    rocs.push_back(run.auc_roc);
    prcs.push_back(run.auc_prc);
  }
  report.auc_roc_mean = stats::mean(rocs);
  report.auc_prc_mean = stats::mean(prcs);
  if (runs.size() >= 2) {
    report.has_ci = true;
    const double r = std::sqrt(static_cast<double>(runs.size()));
    report.auc_roc_ci = z * stats::stdev_sample(rocs) / r;
    report.auc_prc_ci = z * stats::stdev_sample(prcs) / r;
  }

  // Central run: AUC ROC closest to the mean; first such on ties.
  std::size_t central = 0;
  double best_gap = std::abs(rocs[0] - report.auc_roc_mean);
  for (std::size_t i = 1; i < rocs.size(); ++i) {
    const double gap = std::abs(rocs[i] - report.auc_roc_mean);
    if (gap < best_gap - 1e-15) {
      best_gap = gap;
      central = i;
    }
  }
  report.central_repeat = runs[central].repeat;

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& pred : runs[central].eval_predictions) {
    scores.push_back(pred.score);
    labels.push_back(pred.label);
  }
  report.threshold = metrics::eer_threshold(scores, labels);
  report.central = metrics::confusion_metrics(scores, labels, report.threshold);
  return report;
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<RunResult>& runs, bool fused_view) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << "repeat,fold,row_id,subject,side,level,channel,window,score,label,"
         "fused_scope\n";
  char buf[32];
  for (const auto& run : runs) {
    const auto& preds = fused_view ? run.eval_predictions : run.row_predictions;
    for (const auto& pred : preds) {
      const dataset::RowMeta& meta = pred.meta;
      std::snprintf(buf, sizeof(buf), "%.17g", pred.score);
      out << pred.repeat << ',' << pred.fold << ',' << pred.row_id << ','
          << meta.subject_code << ','
          << (meta.side ? audio::to_string(*meta.side) : "") << ','
          << (meta.level ? audio::to_string(*meta.level) : "") << ','
          << (meta.channel ? std::to_string(*meta.channel) : "") << ','
          << (meta.window ? std::to_string(*meta.window) : "") << ',' << buf
          << ',' << pred.label << ',' << pred.fused_scope << '\n';
    }
  }
  if (!out) fail(Errc::IoFailure, "short write to " + path.string());
}

}  // namespace auscult::cv
