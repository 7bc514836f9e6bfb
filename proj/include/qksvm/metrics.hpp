#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace qksvm {

// Confusion counts with class 1 (the minority class) as positive.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double f1_minority = 0.0;
  double auc = 0.5;
  bool auc_single_class = false;  // flagged when a class is absent
};

// accuracy = (tp+tn)/n; F1 = 2tp/(2tp+fp+fn) with 0/0 -> 0; AUC is the
// Mann-Whitney statistic over score pairs with ties credited 0.5.
MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       std::span<const double> scores);

double f1_minority_score(std::span<const int> y_true, std::span<const int> y_pred);

struct BootstrapResult {
  double delta_observed = 0.0;
  double delta_mean = 0.0;
  double ci_lo = 0.0;  // 2.5th percentile
  double ci_hi = 0.0;  // 97.5th percentile
  double p_value = 1.0;            // one-sided, H1: F1_A > F1_B
  double p_value_two_sided = 1.0;  // 2 * min(tail probabilities), capped at 1
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
};

// Paired bootstrap over test indices drawn with replacement; each resample
// uses an index-derived substream so the result is identical for any worker
// count. p = (1 + #{delta* <= 0}) / (resamples + 1).
BootstrapResult paired_bootstrap(std::span<const int> y_true, std::span<const int> pred_a,
                                 std::span<const int> pred_b, std::size_t resamples = 10000,
                                 std::uint64_t seed = 42, unsigned threads = 1);

std::string metrics_to_json(const MetricsReport& r);
std::string bootstrap_to_json(const BootstrapResult& r);

}  // namespace qksvm
