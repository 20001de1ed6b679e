#pragma once

#include <span>
#include <vector>

namespace auscult::metrics {

// Mann-Whitney statistic: P(score_neg < score_pos), ties counted 0.5.
// Throws SingleClassInput unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// Average precision: precision summed at each positive while descending the
// score ranking (step integration of the PR curve).
double auc_prc(std::span<const double> scores, std::span<const int> labels);

// Equal-error-rate operating point: candidate thresholds are midpoints of
// adjacent sorted unique scores (or the single score when all are equal);
// minimizes |Sens - Spec|, ties resolved toward higher accuracy, then the
// lower threshold. score >= threshold classifies positive.
double eer_threshold(std::span<const double> scores,
                     std::span<const int> labels);

// All rates NaN when their denominator is zero.
struct ConfusionMetrics {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double npv = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
};

ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                   std::span<const int> labels,
                                   double threshold);

// Metrics straight from counts (the score/label overload reduces to this).
ConfusionMetrics confusion_from_counts(long tp, long tn, long fp, long fn);

}  // namespace auscult::metrics
