#include "auscult/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "auscult/error.hpp"
#include "auscult/stats.hpp"

namespace auscult::metrics {

namespace {

void require_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int label : labels) (label == 1 ? pos : neg) = true;
  if (!pos || !neg)
    fail(Errc::SingleClassInput, "metric needs both classes present");
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(labels);
  // Rank-based evaluation: average rank of positives over a sorted copy,
  // with tied scores sharing their mean rank. Equivalent to pair counting.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        pos_rank_sum += mean_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) *
                                      (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_prc(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Descending scores; ties broken positives-last so tied blocks are scored
  // pessimistically and deterministically.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return labels[a] < labels[b];
  });

  std::size_t n_pos = 0;
  for (int label : labels) n_pos += label == 1;

  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[order[k]] == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

double eer_threshold(std::span<const double> scores,
                     std::span<const int> labels) {
  require_both_classes(labels);
  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::vector<double> candidates;
  if (unique.size() == 1) {
    candidates.push_back(unique[0]);
  } else {
    for (std::size_t i = 0; i + 1 < unique.size(); ++i)
      candidates.push_back((unique[i] + unique[i + 1]) / 2.0);
  }

  double best_threshold = candidates.front();
  double best_gap = stats::kNa;
  double best_acc = -1.0;
  for (double threshold : candidates) {
    const ConfusionMetrics m = confusion_metrics(scores, labels, threshold);
    const double gap = std::abs(m.sensitivity - m.specificity);
    const bool better =
        !std::isfinite(best_gap) || gap < best_gap - 1e-15 ||
        (std::abs(gap - best_gap) <= 1e-15 &&
         (m.accuracy > best_acc + 1e-15 ||
          (std::abs(m.accuracy - best_acc) <= 1e-15 &&
           threshold < best_threshold)));
    if (better) {
      best_gap = gap;
      best_acc = m.accuracy;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

ConfusionMetrics confusion_from_counts(long tp, long tn, long fp, long fn) {
  ConfusionMetrics m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;

  auto ratio = [](double num, double den) {
    return den > 0.0 ? num / den : stats::kNa;
  };
  const double total = static_cast<double>(tp + tn + fp + fn);
  m.accuracy = ratio(static_cast<double>(tp + tn), total);
  m.sensitivity = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.specificity = ratio(static_cast<double>(tn), static_cast<double>(tn + fp));
  m.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.npv = ratio(static_cast<double>(tn), static_cast<double>(tn + fn));
  m.f1 = ratio(2.0 * static_cast<double>(tp),
               static_cast<double>(2 * tp + fp + fn));

  // Chance agreement from the confusion-matrix marginals.
  if (total > 0.0) {
    const double pe =
        (static_cast<double>(tp + fp) * static_cast<double>(tp + fn) +
         static_cast<double>(fn + tn) * static_cast<double>(fp + tn)) /
        (total * total);
    m.kappa = pe < 1.0 ? (m.accuracy - pe) / (1.0 - pe) : stats::kNa;
  } else {
    m.kappa = stats::kNa;
  }
  return m;
}

ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                   std::span<const int> labels,
                                   double threshold) {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_pos = scores[i] >= threshold;
    const bool actual_pos = labels[i] == 1;
    if (predicted_pos && actual_pos) ++tp;
    else if (predicted_pos) ++fp;
    else if (actual_pos) ++fn;
    else ++tn;
  }
  return confusion_from_counts(tp, tn, fp, fn);
}

}  // namespace auscult::metrics
