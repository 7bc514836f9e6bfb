#include "qksvm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "qksvm/errors.hpp"
#include "qksvm/svc.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace qksvm {

namespace {

NormalizationMode norm_from_json(const nlohmann::json& j, const char* key,
                                 NormalizationMode fallback) {
  if (!j.contains(key)) return fallback;
  return normalization_from_string(j.at(key).get<std::string>());
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("embeddings")) {
      for (const auto& e : j.at("embeddings")) {
        EmbeddingSpec spec;
        spec.path = e.at("path").get<std::string>();
        spec.model_tag = e.value("model", "");
        spec.seed_tag = e.value("seed", "");
        if (spec.model_tag.empty() || spec.seed_tag.empty()) {
          if (auto manifest = load_manifest(spec.path)) {
            if (spec.model_tag.empty()) spec.model_tag = manifest->model_name;
            if (spec.seed_tag.empty()) spec.seed_tag = manifest->seed_tag;
          }
        }
        if (spec.model_tag.empty()) spec.model_tag = stem_of(spec.path);
        if (spec.seed_tag.empty()) spec.seed_tag = "seed_0";
        cfg.embeddings.push_back(std::move(spec));
      }
    }
    if (j.contains("qubit_list"))
      cfg.qubit_list = j.at("qubit_list").get<std::vector<std::size_t>>();
    if (j.contains("c_grid")) cfg.c_grid = j.at("c_grid").get<std::vector<double>>();
    if (j.contains("gamma_grid"))
      cfg.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
    cfg.normalization = norm_from_json(j, "normalization", NormalizationMode::trace);
    cfg.dof = j.value("dof", 1);
    cfg.reps = j.value("reps", std::size_t{1});
    if (j.contains("reps_variants"))
      cfg.reps_variants = j.at("reps_variants").get<std::vector<std::size_t>>();
    if (j.contains("dof_variants"))
      cfg.dof_variants = j.at("dof_variants").get<std::vector<int>>();
    cfg.split_seed = j.value("split_seed", std::uint64_t{0});
    cfg.svc_c = j.value("svc_c", 1.0);
    cfg.svc_tol = j.value("svc_tol", 1e-3);
    if (j.contains("bootstrap")) {
      cfg.bootstrap.resamples = j["bootstrap"].value("resamples", std::size_t{10000});
      cfg.bootstrap.seed = j["bootstrap"].value("seed", std::uint64_t{42});
    }
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.memory_cap_bytes = j.value("memory_cap_bytes", std::uint64_t{4} << 30);
    cfg.threads = j.value("threads", 1u);
    if (j.contains("rank_targets"))
      for (const auto& [key, val] : j.at("rank_targets").items())
        cfg.rank_targets[std::stoull(key)] = val.get<double>();
    cfg.rank_match_tol = j.value("rank_match_tol", 0.01);
    cfg.collapse_threshold = j.value("collapse_threshold", 0.05);
    cfg.variance_subsample = j.value("variance_subsample", std::size_t{200});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (cfg.qubit_list.empty()) throw ConfigError("config: qubit_list must be nonempty");
  for (std::size_t q : cfg.qubit_list)
    if (q < 2) throw ConfigError("config: every qubit count must be >= 2");
  if (cfg.dof != 1 && cfg.dof != 3) throw ConfigError("config: dof must be 1 or 3");
  for (int d : cfg.dof_variants)
    if (d != 1 && d != 3) throw ConfigError("config: dof_variants entries must be 1 or 3");
  if (cfg.reps < 1) throw ConfigError("config: reps must be >= 1");
  if (!(cfg.svc_c > 0.0)) throw ConfigError("config: svc_c must be positive");
  for (double c : cfg.c_grid)
    if (!(c > 0.0)) throw ConfigError("config: c_grid entries must be positive");
  for (double g : cfg.gamma_grid)
    if (!(g > 0.0)) throw ConfigError("config: gamma_grid entries must be positive");
  if (cfg.bootstrap.resamples < 1)
    throw ConfigError("config: bootstrap resamples must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

namespace {

struct Cell {
  SplitIndices split;
  Matrix x_train, x_val, x_test;
  std::vector<int> y_train, y_val, y_test;
};

std::uint64_t pair_hash(std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t v : {a, b}) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

const char* verdict_of(double qsvm_mean, double classical_mean) {
  if (qsvm_mean > classical_mean) return "F1 WIN";
  if (qsvm_mean < classical_mean) return "F1 LOSS";
  return "TIE";
}

std::string format_double(double v, const char* fmt) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

ordered_json stats_json(const std::vector<double>& acc, const std::vector<double>& f1,
                        const std::vector<double>& auc) {
  const auto [am, as] = mean_std(acc);
  const auto [fm, fs] = mean_std(f1);
  const auto [um, us] = mean_std(auc);
  ordered_json j;
  j["acc_mean"] = am;
  j["acc_std"] = as;
  j["f1_mean"] = fm;
  j["f1_std"] = fs;
  j["auc_mean"] = um;
  j["auc_std"] = us;
  return j;
}

ordered_json bootstrap_json(const BootstrapResult& b) {
  ordered_json j;
  j["delta_observed"] = b.delta_observed;
  j["delta_mean"] = b.delta_mean;
  j["ci_lo"] = b.ci_lo;
  j["ci_hi"] = b.ci_hi;
  j["p_value"] = b.p_value;
  j["p_value_two_sided"] = b.p_value_two_sided;
  j["resamples"] = b.resamples;
  j["seed"] = b.seed;
  return j;
}

}  // namespace

struct Runner::Impl {
  ExperimentConfig cfg;
  std::map<std::string, Dataset> datasets;
  std::map<std::string, SplitIndices> splits;
  std::map<std::pair<std::string, std::size_t>, Cell> cells;
  std::map<std::uint64_t, Matrix> quantum_mem_cache;

  explicit Impl(ExperimentConfig c) : cfg(std::move(c)) {
    fs::create_directories(fs::path(cfg.output_dir) / "spectra");
    fs::create_directories(fs::path(cfg.output_dir) / "kernels");
  }

  const Dataset& dataset(const std::string& path) {
    auto it = datasets.find(path);
    if (it == datasets.end()) it = datasets.emplace(path, load_dataset_csv(path)).first;
    return it->second;
  }

  const Cell& cell(const EmbeddingSpec& e, std::size_t q) {
    const auto key = std::make_pair(e.path, q);
    auto it = cells.find(key);
    if (it != cells.end()) return it->second;

    const Dataset& ds = dataset(e.path);
    auto sit = splits.find(e.path);
    if (sit == splits.end())
      sit = splits.emplace(e.path, split_dataset(ds, cfg.split_seed)).first;
    const SplitIndices& split = sit->second;

    Cell c;
    c.split = split;
    const auto pipe = FittedPipeline::fit(ds.features, split.train, q);
    c.x_train = pipe.transform(take_rows(ds.features, split.train));
    c.x_val = pipe.transform(take_rows(ds.features, split.val));
    c.x_test = pipe.transform(take_rows(ds.features, split.test));
    c.y_train = take_labels(ds.labels, split.train);
    c.y_val = take_labels(ds.labels, split.val);
    c.y_test = take_labels(ds.labels, split.test);

    for (const auto& [name, block] : {std::make_pair("val", &c.x_val),
                                      std::make_pair("test", &c.x_test)}) {
      const double overflow = minmax_overflow(*block);
      if (overflow > 0.0)
        std::cerr << "[qksvm] " << e.model_tag << "/" << e.seed_tag << " q=" << q << " "
                  << name << " rows exceed [-1,1] by " << format_double(overflow, "%.3g")
                  << "\n";
    }
    return cells.emplace(key, std::move(c)).first->second;
  }

  // Raw (unnormalized) fidelity kernel with in-memory and on-disk caching.
  Matrix quantum_raw(const Matrix& left, const Matrix& right, const CircuitConfig& cc) {
    const std::uint64_t key =
        pair_hash(feature_hash(left, &cc, KernelKind::quantum_fidelity),
                  feature_hash(right, &cc, KernelKind::quantum_fidelity));
    auto it = quantum_mem_cache.find(key);
    if (it != quantum_mem_cache.end()) return it->second;

    char name[64];
    std::snprintf(name, sizeof(name), "qf_%016llx.qkmx",
                  static_cast<unsigned long long>(key));
    const fs::path path = fs::path(cfg.output_dir) / "kernels" / name;
    if (fs::exists(path)) {
      Matrix values = load_kernel(path.string()).values;
      quantum_mem_cache.emplace(key, values);
      return values;
    }

    KernelOptions opts;
    opts.threads = cfg.threads;
    opts.memory_cap_bytes = cfg.memory_cap_bytes;
    KernelMatrix k = quantum_kernel(left, right, cc, opts);
    KernelMeta meta;
    meta.circuit = cc;
    meta.feature_hash = key;
    save_kernel(k, path.string(), meta);
    quantum_mem_cache.emplace(key, k.values);
    return k.values;
  }

  std::string emit_spectrum(const SpectrumReport& spec, const std::string& base) {
    const std::string rel = "spectra/" + base + ".json";
    std::ofstream out(fs::path(cfg.output_dir) / rel);
    if (!out) throw DataError("cannot write spectrum report: " + rel);
    out << spectrum_to_json(spec, true) << "\n";
    return rel;
  }

  void emit_variance(const KernelMatrix& train, std::span<const int> labels,
                     const std::string& base) {
    if (labels.size() < 2) return;
    Rng rng(cfg.split_seed);
    const auto rep =
        variance_stats(train, labels, std::min(cfg.variance_subsample, labels.size()), rng);
    std::ofstream out(fs::path(cfg.output_dir) / ("spectra/" + base + "_variance.json"));
    if (out) out << variance_to_json(rep) << "\n";
  }

  void write_summary(const ordered_json& summary) {
    std::ofstream out(fs::path(cfg.output_dir) / "summary.json");
    if (!out) throw DataError("cannot write summary.json");
    out << summary.dump(2) << "\n";
  }

  CircuitConfig circuit(std::size_t q) const {
    return CircuitConfig{q, cfg.reps, cfg.dof};
  }

  // Trains and evaluates one method on precomputed train/test kernels.
  RunRecord evaluate_method(const EmbeddingSpec& e, std::size_t q, const std::string& method,
                            double c, double gamma, const KernelMatrix& k_train,
                            const KernelMatrix& k_test, const Cell& cell,
                            const std::string& spectrum_base, std::size_t reps, int dof,
                            std::vector<int>* predictions_out = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    SvcTrainOptions topts;
    topts.tol = cfg.svc_tol;
    const SvcModel model = svc_train(k_train, cell.y_train, c, topts);
    const auto scores = decision_scores(model, k_test);
    const auto preds = predict(model, k_test);
    RunRecord rec;
    rec.model_tag = e.model_tag;
    rec.seed_tag = e.seed_tag;
    rec.q = q;
    rec.method = method;
    rec.c = c;
    rec.gamma = gamma;
    rec.normalization = k_train.normalization;
    rec.reps = reps;
    rec.dof = dof;
    rec.metrics = evaluate(cell.y_test, preds, scores);
    const auto spec = spectrum(k_train);
    rec.eff_rank = spec.eff_rank;
    rec.spectrum_ref = emit_spectrum(spec, spectrum_base);
    emit_variance(k_train, cell.y_train, spectrum_base);
    rec.collapsed = rec.metrics.f1_minority < cfg.collapse_threshold;
    rec.wallclock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (predictions_out) *predictions_out = preds;
    std::cerr << "[qksvm] " << e.model_tag << "/" << e.seed_tag << " q=" << q << " "
              << method << ": f1=" << format_double(rec.metrics.f1_minority, "%.3f")
              << " acc=" << format_double(rec.metrics.accuracy, "%.3f") << " ("
              << format_double(rec.wallclock_sec, "%.2f") << "s)\n";
    return rec;
  }

  // Normalized quantum train/test kernel pair for a cell.
  std::pair<KernelMatrix, KernelMatrix> quantum_pair(const Cell& cell,
                                                     const CircuitConfig& cc,
                                                     NormalizationMode mode) {
    KernelMatrix train_raw;
    train_raw.kind = KernelKind::quantum_fidelity;
    train_raw.values = quantum_raw(cell.x_train, cell.x_train, cc);
    TrainKernelStats stats;
    KernelMatrix train = normalize_train(train_raw, mode, &stats);

    KernelMatrix test_raw;
    test_raw.kind = KernelKind::quantum_fidelity;
    test_raw.values = quantum_raw(cell.x_test, cell.x_train, cc);
    KernelMatrix test = normalize_test(test_raw, stats);
    return {std::move(train), std::move(test)};
  }
};

Runner::Runner(ExperimentConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
  if (impl_->cfg.embeddings.empty())
    throw ConfigError("config: embeddings must be nonempty");
}

Runner::~Runner() = default;

const ExperimentConfig& Runner::config() const { return impl_->cfg; }

namespace {

std::string spectrum_base_name(const EmbeddingSpec& e, std::size_t q,
                               const std::string& method, std::size_t reps, int dof) {
  std::string base = e.model_tag + "_" + e.seed_tag + "_q" + std::to_string(q) + "_" + method;
  if (method == "qsvm") base += "_r" + std::to_string(reps) + "_d" + std::to_string(dof);
  return base;
}

// Pooled per-(model, q) prediction vectors for the paired bootstrap.
struct PairedPredictions {
  std::vector<int> y_true;
  std::vector<int> pred_a;
  std::vector<int> pred_b;
};

}  // namespace

std::vector<RunRecord> Runner::run_tier1() {
  auto& im = *impl_;
  const auto& cfg = im.cfg;
  std::vector<RunRecord> records;
  std::map<std::pair<std::string, std::size_t>, PairedPredictions> paired;
  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> by_group;

  for (const auto& e : cfg.embeddings) {
    for (std::size_t q : cfg.qubit_list) {
      const Cell& cell = im.cell(e, q);
      const CircuitConfig cc = im.circuit(q);

      auto [kq_train, kq_test] = im.quantum_pair(cell, cc, cfg.normalization);
      std::vector<int> preds_q;
      records.push_back(im.evaluate_method(
          e, q, "qsvm", cfg.svc_c, 0.0, kq_train, kq_test, cell,
          spectrum_base_name(e, q, "qsvm", cc.reps, cc.dof), cc.reps, cc.dof, &preds_q));

      const KernelMatrix kl_train = linear_kernel(cell.x_train, cell.x_train);
      const KernelMatrix kl_test = linear_kernel(cell.x_test, cell.x_train);
      std::vector<int> preds_l;
      records.push_back(im.evaluate_method(
          e, q, "linear", cfg.svc_c, 0.0, kl_train, kl_test, cell,
          spectrum_base_name(e, q, "linear", cc.reps, cc.dof), cc.reps, cc.dof, &preds_l));

      auto& pool = paired[{e.model_tag, q}];
      pool.y_true.insert(pool.y_true.end(), cell.y_test.begin(), cell.y_test.end());
      pool.pred_a.insert(pool.pred_a.end(), preds_q.begin(), preds_q.end());
      pool.pred_b.insert(pool.pred_b.end(), preds_l.begin(), preds_l.end());
    }
  }
  for (const auto& rec : records)
    by_group[{rec.model_tag, rec.q}].push_back(&rec);

  ordered_json summary;
  summary["mode"] = "tier1";
  summary["groups"] = ordered_json::array();
  for (const auto& [key, group] : by_group) {
    std::vector<double> qf1, qacc, qauc, lf1, lacc, lauc;
    for (const RunRecord* r : group) {
      if (r->method == "qsvm") {
        qf1.push_back(r->metrics.f1_minority);
        qacc.push_back(r->metrics.accuracy);
        qauc.push_back(r->metrics.auc);
      } else {
        lf1.push_back(r->metrics.f1_minority);
        lacc.push_back(r->metrics.accuracy);
        lauc.push_back(r->metrics.auc);
      }
    }
    const auto& pool = paired.at(key);
    const auto boot =
        paired_bootstrap(pool.y_true, pool.pred_a, pool.pred_b, cfg.bootstrap.resamples,
                         cfg.bootstrap.seed, cfg.threads);
    ordered_json g;
    g["model"] = key.first;
    g["q"] = key.second;
    g["n_seeds"] = qf1.size();
    g["qsvm"] = stats_json(qacc, qf1, qauc);
    g["linear"] = stats_json(lacc, lf1, lauc);
    g["delta_f1_mean"] = mean_std(qf1).first - mean_std(lf1).first;
    g["verdict"] = verdict_of(mean_std(qf1).first, mean_std(lf1).first);
    g["bootstrap"] = bootstrap_json(boot);
    summary["groups"].push_back(std::move(g));
  }
  write_results_csv(records, (fs::path(cfg.output_dir) / "results.csv").string());
  im.write_summary(summary);
  return records;
}

std::vector<RunRecord> Runner::run_tier2() {
  auto& im = *impl_;
  const auto& cfg = im.cfg;
  if (cfg.c_grid.empty()) throw ConfigError("tier2: c_grid must be nonempty");
  std::vector<RunRecord> records;
  std::map<std::pair<std::string, std::size_t>, PairedPredictions> paired;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> chosen_c;

  for (const auto& e : cfg.embeddings) {
    for (std::size_t q : cfg.qubit_list) {
      const Cell& cell = im.cell(e, q);
      const CircuitConfig cc = im.circuit(q);

      auto [kq_train, kq_test] = im.quantum_pair(cell, cc, cfg.normalization);
      std::vector<int> preds_q;
      records.push_back(im.evaluate_method(
          e, q, "qsvm", cfg.svc_c, 0.0, kq_train, kq_test, cell,
          spectrum_base_name(e, q, "qsvm", cc.reps, cc.dof), cc.reps, cc.dof, &preds_q));

      const double gamma = scale_gamma(cell.x_train);
      const KernelMatrix kr_train = rbf_kernel(cell.x_train, cell.x_train, gamma);
      const KernelMatrix kr_val = rbf_kernel(cell.x_val, cell.x_train, gamma);
      const KernelMatrix kr_test = rbf_kernel(cell.x_test, cell.x_train, gamma);

      // Validation-F1 argmax with smallest-C tie-break.
      double best_c = 0.0, best_f1 = -1.0;
      SvcTrainOptions topts;
      topts.tol = cfg.svc_tol;
      for (double c : cfg.c_grid) {
        const SvcModel m = svc_train(kr_train, cell.y_train, c, topts);
        const double f1 = f1_minority_score(cell.y_val, predict(m, kr_val));
        if (f1 > best_f1 || (f1 == best_f1 && c < best_c)) {
          best_f1 = f1;
          best_c = c;
        }
      }
      std::vector<int> preds_r;
      records.push_back(im.evaluate_method(
          e, q, "rbf", best_c, gamma, kr_train, kr_test, cell,
          spectrum_base_name(e, q, "rbf", cc.reps, cc.dof), cc.reps, cc.dof, &preds_r));

      auto& pool = paired[{e.model_tag, q}];
      pool.y_true.insert(pool.y_true.end(), cell.y_test.begin(), cell.y_test.end());
      pool.pred_a.insert(pool.pred_a.end(), preds_q.begin(), preds_q.end());
      pool.pred_b.insert(pool.pred_b.end(), preds_r.begin(), preds_r.end());
      chosen_c[{e.model_tag, q}].push_back(best_c);
    }
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> by_group;
  for (const auto& rec : records)
    by_group[{rec.model_tag, rec.q}].push_back(&rec);

  ordered_json summary;
  summary["mode"] = "tier2";
  summary["groups"] = ordered_json::array();
  for (const auto& [key, group] : by_group) {
    std::vector<double> qf1, qacc, qauc, rf1, racc, rauc;
    for (const RunRecord* r : group) {
      if (r->method == "qsvm") {
        qf1.push_back(r->metrics.f1_minority);
        qacc.push_back(r->metrics.accuracy);
        qauc.push_back(r->metrics.auc);
      } else {
        rf1.push_back(r->metrics.f1_minority);
        racc.push_back(r->metrics.accuracy);
        rauc.push_back(r->metrics.auc);
      }
    }
    const auto& pool = paired.at(key);
    const auto boot =
        paired_bootstrap(pool.y_true, pool.pred_a, pool.pred_b, cfg.bootstrap.resamples,
                         cfg.bootstrap.seed, cfg.threads);
    ordered_json g;
    g["model"] = key.first;
    g["q"] = key.second;
    g["n_seeds"] = qf1.size();
    g["qsvm"] = stats_json(qacc, qf1, qauc);
    g["rbf_tuned"] = stats_json(racc, rf1, rauc);
    g["chosen_c"] = chosen_c.at(key);
    g["delta_f1_mean"] = mean_std(qf1).first - mean_std(rf1).first;
    g["verdict"] = verdict_of(mean_std(qf1).first, mean_std(rf1).first);
    g["bootstrap"] = bootstrap_json(boot);
    summary["groups"].push_back(std::move(g));
  }
  write_results_csv(records, (fs::path(cfg.output_dir) / "results.csv").string());
  im.write_summary(summary);
  return records;
}

std::vector<RunRecord> Runner::run_sweep() {
  auto& im = *impl_;
  const auto& cfg = im.cfg;

  std::vector<std::pair<std::size_t, int>> variants{{cfg.reps, cfg.dof}};
  for (std::size_t r : cfg.reps_variants)
    if (std::find(variants.begin(), variants.end(), std::make_pair(r, cfg.dof)) ==
        variants.end())
      variants.emplace_back(r, cfg.dof);
  for (int d : cfg.dof_variants)
    if (std::find(variants.begin(), variants.end(), std::make_pair(cfg.reps, d)) ==
        variants.end())
      variants.emplace_back(cfg.reps, d);

  std::vector<RunRecord> records;
  for (const auto& e : cfg.embeddings) {
    for (std::size_t q : cfg.qubit_list) {
      const Cell& cell = im.cell(e, q);
      for (const auto& [reps, dof] : variants) {
        const CircuitConfig cc{q, reps, dof};
        auto [k_train, k_test] = im.quantum_pair(cell, cc, cfg.normalization);
        records.push_back(im.evaluate_method(
            e, q, "qsvm", cfg.svc_c, 0.0, k_train, k_test, cell,
            spectrum_base_name(e, q, "qsvm", reps, dof), reps, dof));
      }
    }
  }

  std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.model_tag, a.q, a.seed_tag, a.reps, a.dof) <
           std::tie(b.model_tag, b.q, b.seed_tag, b.reps, b.dof);
  });

  std::map<std::tuple<std::string, std::size_t, std::size_t, int>,
           std::vector<const RunRecord*>>
      by_group;
  for (const auto& rec : records)
    by_group[{rec.model_tag, rec.q, rec.reps, rec.dof}].push_back(&rec);

  ordered_json summary;
  summary["mode"] = "sweep";
  summary["groups"] = ordered_json::array();
  for (const auto& [key, group] : by_group) {
    std::vector<double> f1, acc, auc;
    for (const RunRecord* r : group) {
      f1.push_back(r->metrics.f1_minority);
      acc.push_back(r->metrics.accuracy);
      auc.push_back(r->metrics.auc);
    }
    ordered_json g;
    g["model"] = std::get<0>(key);
    g["q"] = std::get<1>(key);
    g["reps"] = std::get<2>(key);
    g["dof"] = std::get<3>(key);
    g["n_seeds"] = f1.size();
    g["qsvm"] = stats_json(acc, f1, auc);
    summary["groups"].push_back(std::move(g));
  }
  write_results_csv(records, (fs::path(cfg.output_dir) / "results.csv").string());
  im.write_summary(summary);
  return records;
}

std::vector<RunRecord> Runner::run_rank_matched() {
  auto& im = *impl_;
  const auto& cfg = im.cfg;
  std::vector<RunRecord> records;

  for (const auto& e : cfg.embeddings) {
    for (std::size_t q : cfg.qubit_list) {
      const Cell& cell = im.cell(e, q);
      const CircuitConfig cc = im.circuit(q);

      auto [kq_train, kq_test] = im.quantum_pair(cell, cc, cfg.normalization);
      std::vector<int> preds_q;
      RunRecord qsvm_rec = im.evaluate_method(
          e, q, "qsvm", cfg.svc_c, 0.0, kq_train, kq_test, cell,
          spectrum_base_name(e, q, "qsvm", cc.reps, cc.dof), cc.reps, cc.dof, &preds_q);
      const double target = cfg.rank_targets.count(q) ? cfg.rank_targets.at(q)
                                                      : qsvm_rec.eff_rank;
      records.push_back(qsvm_rec);

      RunRecord rec;
      rec.model_tag = e.model_tag;
      rec.seed_tag = e.seed_tag;
      rec.q = q;
      rec.method = "rbf_rank_matched";
      rec.c = cfg.svc_c;
      rec.normalization = NormalizationMode::none;
      rec.reps = cc.reps;
      rec.dof = cc.dof;
      try {
        const double gamma_star = rank_match_gamma(cell.x_train, target, cfg.rank_match_tol);
        const KernelMatrix kr_train = rbf_kernel(cell.x_train, cell.x_train, gamma_star);
        const KernelMatrix kr_test = rbf_kernel(cell.x_test, cell.x_train, gamma_star);
        rec = im.evaluate_method(e, q, "rbf_rank_matched", cfg.svc_c, gamma_star, kr_train,
                                 kr_test, cell,
                                 spectrum_base_name(e, q, "rbf_rank_matched", cc.reps, cc.dof),
                                 cc.reps, cc.dof);
      } catch (const NumericalError& err) {
        rec.note = "unreachable_rank_target";
        rec.collapsed = true;
        std::cerr << "[qksvm] " << e.model_tag << "/" << e.seed_tag << " q=" << q
                  << " rank-match: " << err.what() << "\n";
      }
      records.push_back(std::move(rec));
    }
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> by_group;
  for (const auto& rec : records)
    by_group[{rec.model_tag, rec.q}].push_back(&rec);

  ordered_json summary;
  summary["mode"] = "rankmatch";
  summary["groups"] = ordered_json::array();
  for (const auto& [key, group] : by_group) {
    std::vector<double> qf1, rf1, gammas, targets;
    std::size_t q_collapsed = 0, r_collapsed = 0, q_n = 0, r_n = 0;
    for (const RunRecord* r : group) {
      if (r->method == "qsvm") {
        qf1.push_back(r->metrics.f1_minority);
        targets.push_back(cfg.rank_targets.count(r->q) ? cfg.rank_targets.at(r->q)
                                                       : r->eff_rank);
        ++q_n;
        if (r->collapsed) ++q_collapsed;
      } else {
        rf1.push_back(r->metrics.f1_minority);
        if (r->note.empty()) gammas.push_back(r->gamma);
        ++r_n;
        if (r->collapsed) ++r_collapsed;
      }
    }
    ordered_json g;
    g["model"] = key.first;
    g["q"] = key.second;
    g["n_seeds"] = q_n;
    g["target_eff_rank"] = targets;
    g["gamma_star"] = gammas;
    g["qsvm_f1_mean"] = mean_std(qf1).first;
    g["rbf_rank_matched_f1_mean"] = mean_std(rf1).first;
    g["qsvm_collapse_fraction"] =
        q_n ? static_cast<double>(q_collapsed) / static_cast<double>(q_n) : 0.0;
    g["rbf_rank_matched_collapse_fraction"] =
        r_n ? static_cast<double>(r_collapsed) / static_cast<double>(r_n) : 0.0;
    g["verdict"] = verdict_of(mean_std(qf1).first, mean_std(rf1).first);
    summary["groups"].push_back(std::move(g));
  }
  write_results_csv(records, (fs::path(cfg.output_dir) / "results.csv").string());
  im.write_summary(summary);
  return records;
}

std::vector<RunRecord> Runner::run_projected() {
  auto& im = *impl_;
  const auto& cfg = im.cfg;
  if (cfg.gamma_grid.empty()) throw ConfigError("projected: gamma_grid must be nonempty");
  if (cfg.c_grid.empty()) throw ConfigError("projected: c_grid must be nonempty");

  std::vector<RunRecord> records;
  std::map<std::pair<std::string, std::size_t>, ordered_json> chosen;

  for (const auto& e : cfg.embeddings) {
    for (std::size_t q : cfg.qubit_list) {
      const Cell& cell = im.cell(e, q);
      const CircuitConfig cc = im.circuit(q);

      const Matrix z_train = pauli_z_features(cell.x_train, cc, cfg.threads);
      const Matrix z_val = pauli_z_features(cell.x_val, cc, cfg.threads);
      const Matrix z_test = pauli_z_features(cell.x_test, cc, cfg.threads);
      for (const Matrix* z : {&z_train, &z_val, &z_test})
        for (double v : z->data())
          if (v < -1.0 || v > 1.0)
            throw NumericalError("projected: expectation vector outside [-1,1]");

      // (gamma, C) by validation accuracy; ties prefer the smaller gamma,
      // then the smaller C.
      double best_gamma = 0.0, best_c = 0.0, best_acc = -1.0;
      SvcTrainOptions topts;
      topts.tol = cfg.svc_tol;
      for (double gamma : cfg.gamma_grid) {
        const KernelMatrix kp_train = projected_kernel(z_train, z_train, gamma);
        const KernelMatrix kp_val = projected_kernel(z_val, z_train, gamma);
        for (double c : cfg.c_grid) {
          const SvcModel m = svc_train(kp_train, cell.y_train, c, topts);
          const auto preds = predict(m, kp_val);
          std::size_t correct = 0;
          for (std::size_t i = 0; i < preds.size(); ++i)
            if (preds[i] == cell.y_val[i]) ++correct;
          const double acc = cell.y_val.empty()
                                 ? 0.0
                                 : static_cast<double>(correct) /
                                       static_cast<double>(preds.size());
          const bool better =
              acc > best_acc ||
              (acc == best_acc &&
               (gamma < best_gamma || (gamma == best_gamma && c < best_c)));
          if (better) {
            best_acc = acc;
            best_gamma = gamma;
            best_c = c;
          }
        }
      }

      const KernelMatrix kp_train = projected_kernel(z_train, z_train, best_gamma);
      const KernelMatrix kp_test = projected_kernel(z_test, z_train, best_gamma);
      records.push_back(im.evaluate_method(
          e, q, "projected", best_c, best_gamma, kp_train, kp_test, cell,
          spectrum_base_name(e, q, "projected", cc.reps, cc.dof), cc.reps, cc.dof));

      ordered_json pick;
      pick["seed"] = e.seed_tag;
      pick["gamma"] = best_gamma;
      pick["c"] = best_c;
      pick["val_accuracy"] = best_acc;
      chosen[{e.model_tag, q}].push_back(std::move(pick));
    }
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> by_group;
  for (const auto& rec : records)
    by_group[{rec.model_tag, rec.q}].push_back(&rec);

  ordered_json summary;
  summary["mode"] = "projected";
  summary["groups"] = ordered_json::array();
  for (const auto& [key, group] : by_group) {
    std::vector<double> f1, acc, auc;
    for (const RunRecord* r : group) {
      f1.push_back(r->metrics.f1_minority);
      acc.push_back(r->metrics.accuracy);
      auc.push_back(r->metrics.auc);
    }
    ordered_json g;
    g["model"] = key.first;
    g["q"] = key.second;
    g["n_seeds"] = f1.size();
    g["projected"] = stats_json(acc, f1, auc);
    g["chosen"] = chosen.at(key);
    summary["groups"].push_back(std::move(g));
  }
  write_results_csv(records, (fs::path(cfg.output_dir) / "results.csv").string());
  im.write_summary(summary);
  return records;
}

void write_results_csv(const std::vector<RunRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write results csv: " + path);
  out << "model,seed,q,method,c,gamma,normalization,reps,dof,"
         "accuracy,f1,auc,tp,fp,fn,tn,eff_rank,collapsed,spectrum_ref,note\n";
  for (const auto& r : records) {
    out << r.model_tag << "," << r.seed_tag << "," << r.q << "," << r.method << ","
        << format_double(r.c, "%.10g") << "," << format_double(r.gamma, "%.10g") << ","
        << to_string(r.normalization) << "," << r.reps << "," << r.dof << ","
        << format_double(r.metrics.accuracy, "%.6f") << ","
        << format_double(r.metrics.f1_minority, "%.6f") << ","
        << format_double(r.metrics.auc, "%.6f") << "," << r.metrics.tp << ","
        << r.metrics.fp << "," << r.metrics.fn << "," << r.metrics.tn << ","
        << format_double(r.eff_rank, "%.6f") << "," << (r.collapsed ? 1 : 0) << ","
        << r.spectrum_ref << "," << r.note << "\n";
  }
}

}  // namespace qksvm
