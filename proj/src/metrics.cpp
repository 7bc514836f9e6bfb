#include "qksvm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "qksvm/rng.hpp"
#include "qksvm/threading.hpp"

namespace qksvm {

double f1_minority_score(std::span<const int> y_true, std::span<const int> y_pred) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1) {
      if (y_true[i] == 1)
        ++tp;
      else
        ++fp;
    } else if (y_true[i] == 1) {
      ++fn;
    }
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       std::span<const double> scores) {
  const std::size_t n = y_true.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty input");
  if (y_pred.size() != n || scores.size() != n)
    throw std::invalid_argument("evaluate: length mismatch");

  MetricsReport r;
  for (std::size_t i = 0; i < n; ++i) {
    const bool truth = y_true[i] == 1;
    const bool pred = y_pred[i] == 1;
    if (truth && pred) ++r.tp;
    else if (!truth && pred) ++r.fp;
    else if (truth && !pred) ++r.fn;
    else ++r.tn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(n);
  const std::size_t f1_denom = 2 * r.tp + r.fp + r.fn;
  r.f1_minority =
      f1_denom == 0 ? 0.0 : 2.0 * static_cast<double>(r.tp) / static_cast<double>(f1_denom);

  const std::size_t n1 = r.tp + r.fn;
  const std::size_t n0 = r.fp + r.tn;
  if (n1 == 0 || n0 == 0) {
    r.auc = 0.5;
    r.auc_single_class = true;
    return r;
  }

  // Mann-Whitney in integer half-units: 2U = 2 * wins + ties, where a win is
  // a positive scored strictly above a negative. Exactly equals pair counting.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  std::uint64_t two_u = 0;
  std::uint64_t negatives_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::uint64_t group_pos = 0, group_neg = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (y_true[order[j]] == 1)
        ++group_pos;
      else
        ++group_neg;
      ++j;
    }
    two_u += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    i = j;
  }
  r.auc = static_cast<double>(two_u) /
          (2.0 * static_cast<double>(n1) * static_cast<double>(n0));
  return r;
}

namespace {

double percentile_linear(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BootstrapResult paired_bootstrap(std::span<const int> y_true, std::span<const int> pred_a,
                                 std::span<const int> pred_b, std::size_t resamples,
                                 std::uint64_t seed, unsigned threads) {
  const std::size_t n = y_true.size();
  if (n == 0) throw std::invalid_argument("paired_bootstrap: empty input");
  if (pred_a.size() != n || pred_b.size() != n)
    throw std::invalid_argument("paired_bootstrap: length mismatch");
  if (resamples < 1) throw std::invalid_argument("paired_bootstrap: resamples must be >= 1");

  BootstrapResult r;
  r.resamples = resamples;
  r.seed = seed;
  r.delta_observed = f1_minority_score(y_true, pred_a) - f1_minority_score(y_true, pred_b);

  std::vector<double> deltas(resamples);
  parallel_for(0, resamples, threads, [&](std::size_t rep) {
    Rng rng(substream_seed(seed, rep));
    std::size_t tp_a = 0, fp_a = 0, fn_a = 0;
    std::size_t tp_b = 0, fp_b = 0, fn_b = 0;
    for (std::size_t draw = 0; draw < n; ++draw) {
      const std::size_t i = static_cast<std::size_t>(rng.next_below(n));
      const bool truth = y_true[i] == 1;
      if (pred_a[i] == 1) {
        if (truth) ++tp_a;
        else ++fp_a;
      } else if (truth) {
        ++fn_a;
      }
      if (pred_b[i] == 1) {
        if (truth) ++tp_b;
        else ++fp_b;
      } else if (truth) {
        ++fn_b;
      }
    }
    const std::size_t da = 2 * tp_a + fp_a + fn_a;
    const std::size_t db = 2 * tp_b + fp_b + fn_b;
    const double f1a = da == 0 ? 0.0 : 2.0 * static_cast<double>(tp_a) / static_cast<double>(da);
    const double f1b = db == 0 ? 0.0 : 2.0 * static_cast<double>(tp_b) / static_cast<double>(db);
    deltas[rep] = f1a - f1b;
  });

  double sum = 0.0;
  std::size_t non_positive = 0, non_negative = 0;
  for (double d : deltas) {
    sum += d;
    if (d <= 0.0) ++non_positive;
    if (d >= 0.0) ++non_negative;
  }
  r.delta_mean = sum / static_cast<double>(resamples);

  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  r.ci_lo = percentile_linear(sorted, 0.025);
  r.ci_hi = percentile_linear(sorted, 0.975);

  const double b1 = static_cast<double>(resamples + 1);
  const double p_hi = (1.0 + static_cast<double>(non_positive)) / b1;
  const double p_lo = (1.0 + static_cast<double>(non_negative)) / b1;
  r.p_value = p_hi;
  r.p_value_two_sided = std::min(1.0, 2.0 * std::min(p_hi, p_lo));
  return r;
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["accuracy"] = r.accuracy;
  j["f1_minority"] = r.f1_minority;
  j["auc"] = r.auc;
  j["auc_single_class"] = r.auc_single_class;
  return j.dump(2);
}

std::string bootstrap_to_json(const BootstrapResult& r) {
  nlohmann::ordered_json j;
  j["delta_observed"] = r.delta_observed;
  j["delta_mean"] = r.delta_mean;
  j["ci_lo"] = r.ci_lo;
  j["ci_hi"] = r.ci_hi;
  j["p_value"] = r.p_value;
  j["p_value_two_sided"] = r.p_value_two_sided;
  j["resamples"] = r.resamples;
  j["seed"] = r.seed;
  return j.dump(2);
}

}  // namespace qksvm
