#include "qksvm/svc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "qksvm/errors.hpp"

namespace qksvm {

namespace {

constexpr double kTau = 1e-12;  // floor for the pair-update denominator

double dual_objective_max_form(std::span<const double> alpha, std::span<const double> grad) {
  // min-form objective is 0.5 * sum_i alpha_i * (G_i - 1); negate for max form.
  double obj = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) obj += alpha[i] * (grad[i] - 1.0);
  return -0.5 * obj;
}

}  // namespace

SvcModel svc_train(const KernelMatrix& k_train, std::span<const int> labels, double c,
                   const SvcTrainOptions& opts) {
  const Matrix& k = k_train.values;
  const std::size_t n = k.rows();
  if (n == 0 || k.cols() != n)
    throw std::invalid_argument("svc_train: kernel must be square and nonempty");
  if (labels.size() != n)
    throw std::invalid_argument("svc_train: labels length must match kernel size");
  if (!(c > 0.0)) throw std::invalid_argument("svc_train: C must be positive");
  double max_abs = 0.0;
  for (double v : k.data()) max_abs = std::max(max_abs, std::abs(v));
  if (max_asymmetry(k) > 1e-10 * std::max(max_abs, 1.0))
    throw std::invalid_argument("svc_train: kernel is not symmetric");

  SvcModel model;
  model.c = c;
  model.dual_coef.assign(n, 0.0);

  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l == 0) has0 = true;
    else if (l == 1) has1 = true;
    else throw std::invalid_argument("svc_train: labels must be 0 or 1");
  }
  if (!has0 || !has1) {
    model.degenerate = true;
    model.degenerate_label = has1 ? 1 : 0;
    model.bias = has1 ? 1.0 : -1.0;
    return model;
  }

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // G_i = sum_j Q_ij alpha_j - 1

  const auto q_entry = [&](std::size_t i, std::size_t j) {
    return y[i] * y[j] * k(i, j);
  };

  if (opts.record_objective)
    model.objective_trace.push_back(dual_objective_max_form(alpha, grad));

  std::size_t updates = 0;
  while (updates < opts.max_updates) {
    // Maximal violating pair: i maximizes -y_i G_i over I_up, j minimizes it
    // over I_low.
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    std::size_t i_sel = n, j_sel = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
      const bool in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
      const double v = -y[t] * grad[t];
      if (in_up && v > up_best) {
        up_best = v;
        i_sel = t;
      }
      if (in_low && v < low_best) {
        low_best = v;
        j_sel = t;
      }
    }
    if (i_sel == n || j_sel == n || up_best - low_best < opts.tol) break;

    const std::size_t i = i_sel, j = j_sel;
    const double old_ai = alpha[i], old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * q_entry(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = -diff;
        }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = c + diff;
        }
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q_entry(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += q_entry(t, i) * dai + q_entry(t, j) * daj;
    ++updates;

    if (opts.record_objective)
      model.objective_trace.push_back(dual_objective_max_form(alpha, grad));
  }
  model.updates = updates;

  // bias: -y_i G_i averaged over free vectors, else the midpoint of the
  // KKT-feasible interval from the bound vectors.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0.0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0.0)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  model.bias = -rho;

  for (std::size_t t = 0; t < n; ++t) {
    model.dual_coef[t] = alpha[t] * y[t];
    if (alpha[t] > 0.0) model.support.push_back(t);
  }
  model.dual_objective = dual_objective_max_form(alpha, grad);
  return model;
}

std::vector<double> decision_scores(const SvcModel& m, const KernelMatrix& k_cross) {
  const Matrix& k = k_cross.values;
  if (k.cols() != m.dual_coef.size())
    throw std::invalid_argument("decision_scores: kernel columns must match training size");
  std::vector<double> scores(k.rows(), m.bias);
  if (m.degenerate) return scores;
  for (std::size_t j = 0; j < k.rows(); ++j) {
    double s = 0.0;
    const auto row = k.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) s += m.dual_coef[i] * row[i];
    scores[j] = s + m.bias;
  }
  return scores;
}

std::vector<int> predict(const SvcModel& m, const KernelMatrix& k_cross) {
  const auto scores = decision_scores(m, k_cross);
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > 0.0 ? 1 : 0;
  return labels;
}

void save_model_json(const SvcModel& m, const std::string& path,
                     const std::string& kernel_ref) {
  nlohmann::ordered_json j;
  j["dual_coef"] = m.dual_coef;
  j["bias"] = m.bias;
  j["support"] = m.support;
  j["c"] = m.c;
  j["degenerate"] = m.degenerate;
  j["degenerate_label"] = m.degenerate_label;
  j["kernel_ref"] = kernel_ref;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out << j.dump(2) << "\n";
}

SvcModel load_model_json(const std::string& path, std::string* kernel_ref) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
  SvcModel m;
  m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.support = j.at("support").get<std::vector<std::size_t>>();
  m.c = j.at("c").get<double>();
  m.degenerate = j.value("degenerate", false);
  m.degenerate_label = j.value("degenerate_label", 0);
  if (kernel_ref) *kernel_ref = j.value("kernel_ref", "");
  return m;
}

}  // namespace qksvm
