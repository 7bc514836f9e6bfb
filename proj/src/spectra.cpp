#include "qksvm/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "qksvm/errors.hpp"

namespace qksvm {

SpectrumReport spectrum(const KernelMatrix& k) {
  auto eig = sym_eigen(k.values);
  SpectrumReport r;
  r.eigenvalues = std::move(eig.eigenvalues);
  r.lambda_max = r.eigenvalues.front();
  if (!(r.lambda_max > 0.0)) throw NumericalError("spectrum: kernel has no positive mass");
  r.threshold = 1e-10 * r.lambda_max;

  double mass = 0.0;
  for (double ev : r.eigenvalues) {
    if (ev > r.threshold) {
      ++r.n_positive;
      mass += ev;
    }
  }
  double entropy = 0.0;
  for (double ev : r.eigenvalues) {
    if (ev > r.threshold) {
      const double p = ev / mass;
      entropy -= p * std::log(p);
    }
  }
  r.eff_rank = std::exp(entropy);
  return r;
}

std::string spectrum_to_json(const SpectrumReport& r, bool include_eigenvalues) {
  nlohmann::ordered_json j;
  j["n"] = r.eigenvalues.size();
  j["n_positive"] = r.n_positive;
  j["eff_rank"] = r.eff_rank;
  j["lambda_max"] = r.lambda_max;
  j["threshold"] = r.threshold;
  if (include_eigenvalues) j["eigenvalues"] = r.eigenvalues;
  return j.dump(2);
}

void eigenvalues_to_csv(const SpectrumReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open eigenvalue csv for writing: " + path);
  out << "index,eigenvalue\n";
  char buf[40];
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, r.eigenvalues[i]);
    out << buf;
  }
}

VarianceReport variance_stats(const KernelMatrix& k, std::span<const int> labels,
                              std::size_t subsample, Rng& rng) {
  const std::size_t n = k.values.rows();
  if (k.values.cols() != n)
    throw std::invalid_argument("variance_stats: kernel must be square");
  if (labels.size() != n)
    throw std::invalid_argument("variance_stats: labels length must match kernel");
  if (subsample < 2) throw std::invalid_argument("variance_stats: subsample must be >= 2");
  subsample = std::min(subsample, n);

  // Stratified seeded subsample, proportional per class.
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < n; ++i)
    by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  std::vector<std::size_t> chosen;
  const double frac = static_cast<double>(subsample) / static_cast<double>(n);
  std::size_t want0 = static_cast<std::size_t>(frac * static_cast<double>(by_class[0].size()));
  want0 = std::min(want0, by_class[0].size());
  std::size_t want1 = subsample - want0;
  if (want1 > by_class[1].size()) {
    want0 += want1 - by_class[1].size();
    want1 = by_class[1].size();
    want0 = std::min(want0, by_class[0].size());
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const auto perm = shuffled_indices(by_class[c].size(), rng);
    const std::size_t want = c == 0 ? want0 : want1;
    for (std::size_t i = 0; i < want; ++i) chosen.push_back(by_class[c][perm[i]]);
  }
  std::sort(chosen.begin(), chosen.end());

  VarianceReport r;
  r.subsample_size = chosen.size();
  double sum = 0.0, sum_within = 0.0, sum_between = 0.0;
  std::size_t count = 0, count_within = 0, count_between = 0;
  for (std::size_t a = 0; a < chosen.size(); ++a) {
    for (std::size_t b = 0; b < chosen.size(); ++b) {
      if (a == b) continue;
      const double v = k.values(chosen[a], chosen[b]);
      sum += v;
      ++count;
      if (labels[chosen[a]] == labels[chosen[b]]) {
        sum_within += v;
        ++count_within;
      } else {
        sum_between += v;
        ++count_between;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("variance_stats: no off-diagonal pairs");
  r.k_mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t a = 0; a < chosen.size(); ++a)
    for (std::size_t b = 0; b < chosen.size(); ++b) {
      if (a == b) continue;
      const double d = k.values(chosen[a], chosen[b]) - r.k_mean;
      ss += d * d;
    }
  r.k_var = ss / static_cast<double>(count);
  r.k_std = std::sqrt(r.k_var);
  r.k_var = r.k_std * r.k_std;  // keeps k_var == k_std^2 exactly
  r.within_class_mean = count_within ? sum_within / static_cast<double>(count_within) : 0.0;
  r.between_class_mean =
      count_between ? sum_between / static_cast<double>(count_between) : 0.0;
  return r;
}

std::string variance_to_json(const VarianceReport& r) {
  nlohmann::ordered_json j;
  j["k_mean"] = r.k_mean;
  j["k_std"] = r.k_std;
  j["k_var"] = r.k_var;
  j["within_class_mean"] = r.within_class_mean;
  j["between_class_mean"] = r.between_class_mean;
  j["subsample_size"] = r.subsample_size;
  return j.dump(2);
}

namespace {

double rbf_eff_rank(const Matrix& x, double gamma) {
  return spectrum(rbf_kernel(x, x, gamma)).eff_rank;
}

}  // namespace

double rank_match_gamma(const Matrix& x, double target_rank, double tol_rel) {
  const std::size_t n = x.rows();
  if (n < 2) throw std::invalid_argument("rank_match_gamma: need at least 2 rows");
  if (!(target_rank > 1.0) || !(target_rank < static_cast<double>(n)))
    throw std::invalid_argument("rank_match_gamma: target must lie in (1, n)");
  if (!(tol_rel > 0.0)) throw std::invalid_argument("rank_match_gamma: tol_rel must be > 0");
  bool any_distinct = false;
  for (std::size_t i = 1; i < n && !any_distinct; ++i)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (x(i, c) != x(0, c)) {
        any_distinct = true;
        break;
      }
  if (!any_distinct)
    throw std::invalid_argument("rank_match_gamma: all rows identical");

  constexpr double kGammaMin = 1e-6;
  constexpr double kGammaMax = 1e6;
  const double tol = tol_rel * target_rank;

  double lo = 1e-2, hi = 1e2;
  double f_lo = rbf_eff_rank(x, lo);
  double f_hi = rbf_eff_rank(x, hi);
  while (f_lo > target_rank && lo > kGammaMin) {
    lo = std::max(kGammaMin, lo / 10.0);
    f_lo = rbf_eff_rank(x, lo);
  }
  while (f_hi < target_rank && hi < kGammaMax) {
    hi = std::min(kGammaMax, hi * 10.0);
    f_hi = rbf_eff_rank(x, hi);
  }
  if (f_lo > target_rank + tol || f_hi < target_rank - tol)
    throw NumericalError("rank_match_gamma: target rank unreachable within gamma bracket");
  if (std::abs(f_lo - target_rank) <= tol) return lo;
  if (std::abs(f_hi - target_rank) <= tol) return hi;

  double mid = lo;
  for (int iter = 0; iter < 60; ++iter) {
    mid = std::sqrt(lo * hi);
    const double f = rbf_eff_rank(x, mid);
    if (std::abs(f - target_rank) <= tol) return mid;
    if (f < target_rank)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericalError("rank_match_gamma: bisection did not reach the target tolerance");
}

}  // namespace qksvm
