#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qksvm/kernel.hpp"
#include "qksvm/metrics.hpp"
#include "qksvm/pipeline.hpp"
#include "qksvm/spectra.hpp"

namespace qksvm {

struct EmbeddingSpec {
  std::string model_tag;
  std::string seed_tag;
  std::string path;
};

struct BootstrapConfig {
  std::size_t resamples = 10000;
  std::uint64_t seed = 42;
};

struct ExperimentConfig {
  std::vector<EmbeddingSpec> embeddings;
  std::vector<std::size_t> qubit_list;
  std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma_grid = {0.5, 1.0, 2.0, 5.0, 10.0};
  NormalizationMode normalization = NormalizationMode::trace;
  int dof = 1;
  std::size_t reps = 1;
  std::vector<std::size_t> reps_variants;  // extra depths for the sweep
  std::vector<int> dof_variants;           // extra encodings for the sweep
  std::uint64_t split_seed = 0;
  double svc_c = 1.0;
  double svc_tol = 1e-3;
  BootstrapConfig bootstrap;
  std::string output_dir = "out";
  std::uint64_t memory_cap_bytes = std::uint64_t{4} << 30;
  unsigned threads = 1;
  std::map<std::size_t, double> rank_targets;  // fixed eff-rank targets per q
  double rank_match_tol = 0.01;
  double collapse_threshold = 0.05;  // F1 below this counts as collapse
  std::size_t variance_subsample = 200;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

// One evaluated (method, hyperparameter, seed, q) cell.
struct RunRecord {
  std::string model_tag;
  std::string seed_tag;
  std::size_t q = 0;
  std::string method;  // qsvm | linear | rbf | rbf_rank_matched | projected
  double c = 1.0;
  double gamma = 0.0;  // 0 = not applicable
  NormalizationMode normalization = NormalizationMode::none;
  std::size_t reps = 1;
  int dof = 1;
  MetricsReport metrics;
  double eff_rank = 0.0;
  std::string spectrum_ref;
  bool collapsed = false;
  std::string note;  // e.g. unreachable_rank_target
  double wallclock_sec = 0.0;  // logged, never serialized
};

void write_results_csv(const std::vector<RunRecord>& records, const std::string& path);

class Runner {
 public:
  explicit Runner(ExperimentConfig cfg);
  ~Runner();

  // Untuned QSVM vs untuned linear SVC on identical PCA-q features.
  std::vector<RunRecord> run_tier1();
  // Untuned QSVM vs validation-C-tuned RBF at sklearn-scale gamma.
  std::vector<RunRecord> run_tier2();
  // QSVM across qubit_list with reps/dof ablation variants.
  std::vector<RunRecord> run_sweep();
  // RBF with bandwidth binary-searched to the quantum kernel's eff. rank.
  std::vector<RunRecord> run_rank_matched();
  // RBF over Pauli-Z expectation vectors, (gamma, C) by validation accuracy.
  std::vector<RunRecord> run_projected();

  const ExperimentConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qksvm
