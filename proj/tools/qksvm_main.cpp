#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qksvm/errors.hpp"
#include "qksvm/kernel.hpp"
#include "qksvm/metrics.hpp"
#include "qksvm/pipeline.hpp"
#include "qksvm/runner.hpp"
#include "qksvm/spectra.hpp"
#include "qksvm/svc.hpp"

using namespace qksvm;

namespace {

std::vector<int> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0")
      labels.push_back(0);
    else if (line == "1")
      labels.push_back(1);
    else
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 0 or 1");
  }
  if (labels.empty()) throw DataError(path + ": no labels");
  return labels;
}

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool threads_set = false;
  bool seed_set = false;
  bool out_set = false;
};

ExperimentConfig config_for_run(const GlobalFlags& g) {
  if (g.config_path.empty())
    throw ConfigError("this subcommand requires --config <json>");
  ExperimentConfig cfg = load_config(g.config_path);
  if (g.out_set) cfg.output_dir = g.out_dir;
  if (g.threads_set) cfg.threads = g.threads;
  if (g.seed_set) cfg.split_seed = g.seed;
  return cfg;
}

void print_run_summary(const std::vector<RunRecord>& records, const std::string& out_dir) {
  std::cout << records.size() << " records -> " << out_dir << "/results.csv\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qksvm: quantum-kernel SVM pipeline and experiment harness"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "experiment config JSON");
  app.add_option("--out", g.out_dir, "output directory (overrides config)")
      ->each([&](const std::string&) { g.out_set = true; });
  app.add_option("--threads", g.threads, "worker threads (overrides config)")
      ->each([&](const std::string&) { g.threads_set = true; });
  app.add_option("--seed", g.seed, "dataset split seed (overrides config)")
      ->each([&](const std::string&) { g.seed_set = true; });

  auto* tier1 = app.add_subcommand("tier1", "untuned QSVM vs untuned linear SVC");
  auto* tier2 = app.add_subcommand("tier2", "untuned QSVM vs C-tuned RBF SVC");
  auto* sweep = app.add_subcommand("sweep", "QSVM qubit sweep with reps/dof variants");
  auto* rankmatch =
      app.add_subcommand("rankmatch", "RBF bandwidth matched to the quantum eff. rank");
  auto* projected =
      app.add_subcommand("projected", "RBF over Pauli-Z expectation vectors");

  // kernel: compute a train-split kernel (plus optional test block) from an
  // embeddings file.
  auto* kernel_cmd = app.add_subcommand("kernel", "compute and save a kernel matrix");
  std::string k_data, k_kind = "quantum", k_norm = "trace";
  std::string k_out = "kernel.qkmx", k_test_out;
  std::size_t k_q = 4, k_reps = 1;
  int k_dof = 1;
  double k_gamma = 0.0;
  kernel_cmd->add_option("--data", k_data, "embeddings csv")->required();
  kernel_cmd->add_option("--q", k_q, "PCA dimension / qubit count");
  kernel_cmd->add_option("--kind", k_kind, "quantum|linear|rbf|projected");
  kernel_cmd->add_option("--normalization", k_norm, "none|trace|frobenius|cosine");
  kernel_cmd->add_option("--reps", k_reps, "re-uploading depth");
  kernel_cmd->add_option("--dof", k_dof, "1 or 3 rotations per qubit");
  kernel_cmd->add_option("--gamma", k_gamma, "bandwidth for rbf/projected (default: scale)");
  kernel_cmd->add_option("--out-file", k_out, "output .qkmx path");
  kernel_cmd->add_option("--test-out", k_test_out, "also save the test x train block");

  auto* train_cmd = app.add_subcommand("train", "train a C-SVC on a saved kernel");
  std::string t_kernel, t_data, t_model = "model.json";
  double t_c = 1.0;
  train_cmd->add_option("--kernel", t_kernel, "train kernel .qkmx")->required();
  train_cmd->add_option("--data", t_data, "embeddings csv (labels)")->required();
  train_cmd->add_option("--c", t_c, "regularization C");
  train_cmd->add_option("--model-out", t_model, "output model JSON");

  auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenspectrum of a saved kernel");
  std::string s_kernel, s_json, s_eigs;
  spectrum_cmd->add_option("--kernel", s_kernel, "kernel .qkmx")->required();
  spectrum_cmd->add_option("--json", s_json, "write report JSON here (default stdout)");
  spectrum_cmd->add_option("--eigs-csv", s_eigs, "dump eigenvalues as CSV");

  auto* bootstrap_cmd =
      app.add_subcommand("bootstrap", "paired bootstrap between two prediction files");
  std::string b_true, b_a, b_b, b_json;
  std::size_t b_resamples = 10000;
  std::uint64_t b_seed = 42;
  bootstrap_cmd->add_option("--true", b_true, "true labels, one 0/1 per line")->required();
  bootstrap_cmd->add_option("--pred-a", b_a, "predictions A")->required();
  bootstrap_cmd->add_option("--pred-b", b_b, "predictions B")->required();
  bootstrap_cmd->add_option("--resamples", b_resamples, "bootstrap resamples");
  bootstrap_cmd->add_option("--bootstrap-seed", b_seed, "bootstrap seed");
  bootstrap_cmd->add_option("--json", b_json, "write result JSON here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (tier1->parsed() || tier2->parsed() || sweep->parsed() || rankmatch->parsed() ||
        projected->parsed()) {
      Runner runner(config_for_run(g));
      std::vector<RunRecord> records;
      if (tier1->parsed()) records = runner.run_tier1();
      else if (tier2->parsed()) records = runner.run_tier2();
      else if (sweep->parsed()) records = runner.run_sweep();
      else if (rankmatch->parsed()) records = runner.run_rank_matched();
      else records = runner.run_projected();
      print_run_summary(records, runner.config().output_dir);
    } else if (kernel_cmd->parsed()) {
      const Dataset ds = load_dataset_csv(k_data);
      const SplitIndices split = split_dataset(ds, g.seed);
      const auto pipe = FittedPipeline::fit(ds.features, split.train, k_q);
      const Matrix x_train = pipe.transform(take_rows(ds.features, split.train));
      const Matrix x_test = pipe.transform(take_rows(ds.features, split.test));
      const KernelKind kind = kernel_kind_from_string(k_kind);
      const NormalizationMode mode = normalization_from_string(k_norm);
      const CircuitConfig cc{k_q, k_reps, k_dof};

      KernelMatrix train_raw, test_raw;
      KernelMeta meta;
      std::vector<double> test_self;
      switch (kind) {
        case KernelKind::quantum_fidelity: {
          KernelOptions opts;
          if (g.threads_set) opts.threads = g.threads;
          train_raw = quantum_kernel(x_train, x_train, cc, opts);
          if (!k_test_out.empty()) test_raw = quantum_kernel(x_test, x_train, cc, opts);
          meta.circuit = cc;
          break;
        }
        case KernelKind::linear: {
          train_raw = linear_kernel(x_train, x_train);
          if (!k_test_out.empty()) {
            test_raw = linear_kernel(x_test, x_train);
            const KernelMatrix self = linear_kernel(x_test, x_test);
            for (std::size_t i = 0; i < self.values.rows(); ++i)
              test_self.push_back(self.values(i, i));
          }
          break;
        }
        case KernelKind::rbf: {
          const double gamma = k_gamma > 0.0 ? k_gamma : scale_gamma(x_train);
          train_raw = rbf_kernel(x_train, x_train, gamma);
          if (!k_test_out.empty()) test_raw = rbf_kernel(x_test, x_train, gamma);
          meta.gamma = gamma;
          break;
        }
        case KernelKind::projected: {
          unsigned threads = g.threads_set ? g.threads : 1;
          const double gamma = k_gamma > 0.0 ? k_gamma : 1.0;
          const Matrix z_train = pauli_z_features(x_train, cc, threads);
          train_raw = projected_kernel(z_train, z_train, gamma);
          if (!k_test_out.empty()) {
            const Matrix z_test = pauli_z_features(x_test, cc, threads);
            test_raw = projected_kernel(z_test, z_train, gamma);
          }
          meta.circuit = cc;
          meta.gamma = k_gamma > 0.0 ? k_gamma : 1.0;
          break;
        }
      }
      meta.feature_hash = feature_hash(x_train, meta.circuit ? &cc : nullptr, kind,
                                       meta.gamma ? *meta.gamma : 0.0);
      TrainKernelStats stats;
      const KernelMatrix train = normalize_train(train_raw, mode, &stats);
      save_kernel(train, k_out, meta);
      std::cout << "train kernel " << train.values.rows() << "x" << train.values.cols()
                << " -> " << k_out << "\n";
      if (!k_test_out.empty()) {
        const KernelMatrix test = normalize_test(test_raw, stats, test_self);
        save_kernel(test, k_test_out, meta);
        std::cout << "test kernel " << test.values.rows() << "x" << test.values.cols()
                  << " -> " << k_test_out << "\n";
      }
    } else if (train_cmd->parsed()) {
      const KernelMatrix k = load_kernel(t_kernel);
      const Dataset ds = load_dataset_csv(t_data);
      const SplitIndices split = split_dataset(ds, g.seed);
      if (k.values.rows() != split.train.size())
        throw DataError("train: kernel rows (" + std::to_string(k.values.rows()) +
                        ") do not match the train split (" +
                        std::to_string(split.train.size()) + "); check --seed");
      const auto labels = take_labels(ds.labels, split.train);
      const SvcModel model = svc_train(k, labels, t_c);
      save_model_json(model, t_model, t_kernel);
      std::cout << "model with " << model.support.size() << " support vectors -> "
                << t_model << "\n";
    } else if (spectrum_cmd->parsed()) {
      const KernelMatrix k = load_kernel(s_kernel);
      const SpectrumReport rep = spectrum(k);
      const std::string json = spectrum_to_json(rep, false);
      if (s_json.empty()) {
        std::cout << json << "\n";
      } else {
        std::ofstream out(s_json);
        if (!out) throw DataError("cannot write " + s_json);
        out << spectrum_to_json(rep, true) << "\n";
      }
      if (!s_eigs.empty()) eigenvalues_to_csv(rep, s_eigs);
    } else if (bootstrap_cmd->parsed()) {
      const auto y = read_label_file(b_true);
      const auto pa = read_label_file(b_a);
      const auto pb = read_label_file(b_b);
      const unsigned threads = g.threads_set ? g.threads : 1;
      const BootstrapResult r = paired_bootstrap(y, pa, pb, b_resamples, b_seed, threads);
      const std::string json = bootstrap_to_json(r);
      if (b_json.empty()) {
        std::cout << json << "\n";
      } else {
        std::ofstream out(b_json);
        if (!out) throw DataError("cannot write " + b_json);
        out << json << "\n";
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
