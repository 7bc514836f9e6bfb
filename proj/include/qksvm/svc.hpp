#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qksvm/kernel.hpp"

namespace qksvm {

// C-SVC trained on a precomputed kernel. dual_coef holds alpha_i * y_i in
// training order (y = +1 for class 1, -1 for class 0).
struct SvcModel {
  std::vector<double> dual_coef;
  double bias = 0.0;
  std::vector<std::size_t> support;
  double c = 1.0;
  bool degenerate = false;  // single-class training set
  int degenerate_label = 0;
  double dual_objective = 0.0;  // max-form objective at the solution
  std::size_t updates = 0;
  std::vector<double> objective_trace;  // filled when requested
};

struct SvcTrainOptions {
  double tol = 1e-3;  // KKT stopping tolerance
  std::size_t max_updates = 10'000'000;
  bool record_objective = false;
};

// SMO with maximal-violating-pair working set selection on the precomputed
// kernel. Stops when the KKT gap falls below tol.
SvcModel svc_train(const KernelMatrix& k_train, std::span<const int> labels, double c,
                   const SvcTrainOptions& opts = {});

// score_j = sum_i dual_coef_i * K(test_j, train_i) + bias
std::vector<double> decision_scores(const SvcModel& m, const KernelMatrix& k_cross);

// Class 1 iff score > 0; ties go to the majority class 0.
std::vector<int> predict(const SvcModel& m, const KernelMatrix& k_cross);

void save_model_json(const SvcModel& m, const std::string& path,
                     const std::string& kernel_ref = "");
SvcModel load_model_json(const std::string& path, std::string* kernel_ref = nullptr);

}  // namespace qksvm
