#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qksvm/kernel.hpp"
#include "qksvm/rng.hpp"

namespace qksvm {

// Eigenspectrum diagnostics of a square kernel. eff_rank is the exponential
// of the Shannon entropy of the eigenvalue distribution above the threshold
// 1e-10 * lambda_max; invariant under positive rescaling of the kernel.
struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending
  std::size_t n_positive = 0;
  double eff_rank = 1.0;
  double lambda_max = 0.0;
  double threshold = 0.0;
};

SpectrumReport spectrum(const KernelMatrix& k);

std::string spectrum_to_json(const SpectrumReport& r, bool include_eigenvalues = false);
void eigenvalues_to_csv(const SpectrumReport& r, const std::string& path);

// Statistics over the off-diagonal entries of a stratified subsampled block,
// split by whether the index pair shares a label.
struct VarianceReport {
  double k_mean = 0.0;
  double k_std = 0.0;
  double k_var = 0.0;
  double within_class_mean = 0.0;
  double between_class_mean = 0.0;
  std::size_t subsample_size = 0;
};

VarianceReport variance_stats(const KernelMatrix& k, std::span<const int> labels,
                              std::size_t subsample, Rng& rng);

std::string variance_to_json(const VarianceReport& r);

// Binary search on log(gamma) for the RBF bandwidth whose train-kernel
// effective rank matches target_rank within tol_rel * target_rank. Relies on
// eff_rank growing with gamma for distinct rows; gamma is bracketed within
// [1e-6, 1e6] before bisection (at most 60 iterations).
double rank_match_gamma(const Matrix& x, double target_rank, double tol_rel);

}  // namespace qksvm
