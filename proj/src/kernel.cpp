#include "qksvm/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "qksvm/errors.hpp"
#include "qksvm/threading.hpp"

static_assert(std::endian::native == std::endian::little,
              "qkmx container assumes a little-endian host");

namespace qksvm {

const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::quantum_fidelity: return "quantum_fidelity";
    case KernelKind::projected: return "projected";
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
  }
  return "?";
}

const char* to_string(NormalizationMode m) {
  switch (m) {
    case NormalizationMode::none: return "none";
    case NormalizationMode::trace: return "trace";
    case NormalizationMode::frobenius: return "frobenius";
    case NormalizationMode::cosine: return "cosine";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "quantum_fidelity" || s == "quantum") return KernelKind::quantum_fidelity;
  if (s == "projected") return KernelKind::projected;
  if (s == "linear") return KernelKind::linear;
  if (s == "rbf") return KernelKind::rbf;
  throw ConfigError("unknown kernel kind: " + s);
}

NormalizationMode normalization_from_string(const std::string& s) {
  if (s == "none") return NormalizationMode::none;
  if (s == "trace") return NormalizationMode::trace;
  if (s == "frobenius") return NormalizationMode::frobenius;
  if (s == "cosine") return NormalizationMode::cosine;
  throw ConfigError("unknown normalization mode: " + s);
}

namespace {

std::vector<StateVector> prepare_states(const Matrix& x, std::size_t row_begin,
                                        std::size_t row_end, const CircuitConfig& cfg,
                                        unsigned threads) {
  std::vector<StateVector> states;
  states.reserve(row_end - row_begin);
  for (std::size_t r = row_begin; r < row_end; ++r) states.emplace_back(cfg.num_qubits);
  parallel_for(0, row_end - row_begin, threads, [&](std::size_t i) {
    states[i] = bsp_state(x.row(row_begin + i), cfg);
  });
  return states;
}

void fill_block(Matrix& out, const std::vector<StateVector>& left,
                std::size_t row_offset, const std::vector<StateVector>& right,
                std::size_t col_offset, unsigned threads) {
  parallel_for(0, left.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < right.size(); ++j)
      out(row_offset + i, col_offset + j) = fidelity(left[i], right[j]);
  });
}

// Upper-triangle stripe of a symmetric kernel, mirrored exactly.
void fill_symmetric_block(Matrix& out, const std::vector<StateVector>& states,
                          unsigned threads) {
  const std::size_t n = states.size();
  parallel_for(0, n, threads, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      const double f = fidelity(states[i], states[j]);
      out(i, j) = f;
      out(j, i) = f;
    }
  });
}

}  // namespace

KernelMatrix quantum_kernel(const Matrix& left, const Matrix& right,
                            const CircuitConfig& cfg, const KernelOptions& opts) {
  cfg.validate();
  if (left.cols() != cfg.num_qubits || right.cols() != cfg.num_qubits)
    throw std::invalid_argument("quantum_kernel: feature columns must equal num_qubits");

  const std::size_t nl = left.rows();
  const std::size_t nr = right.rows();
  const bool symmetric = (nl == nr) && (left == right);
  const std::uint64_t state_bytes =
      (std::uint64_t{1} << cfg.num_qubits) * sizeof(std::complex<double>);
  const unsigned threads = std::max(1u, opts.threads);

  KernelMatrix k;
  k.kind = KernelKind::quantum_fidelity;
  k.values = Matrix(nl, nr);

  if (symmetric) {
    if (nl * state_bytes <= opts.memory_cap_bytes) {
      const auto states = prepare_states(left, 0, nl, cfg, threads);
      fill_symmetric_block(k.values, states, threads);
    } else {
      // Stripe the rows; each stripe holds at most half the cap so two
      // stripes (row-side and column-side) fit at once.
      const std::size_t stripe =
          std::max<std::uint64_t>(1, opts.memory_cap_bytes / (2 * state_bytes));
      for (std::size_t i0 = 0; i0 < nl; i0 += stripe) {
        const std::size_t i1 = std::min(nl, i0 + stripe);
        const auto rows = prepare_states(left, i0, i1, cfg, threads);
        parallel_for(0, rows.size(), threads, [&](std::size_t a) {
          for (std::size_t b = a; b < rows.size(); ++b) {
            const double f = fidelity(rows[a], rows[b]);
            k.values(i0 + a, i0 + b) = f;
            k.values(i0 + b, i0 + a) = f;
          }
        });
        for (std::size_t j0 = i1; j0 < nl; j0 += stripe) {
          const std::size_t j1 = std::min(nl, j0 + stripe);
          const auto cols = prepare_states(left, j0, j1, cfg, threads);
          parallel_for(0, rows.size(), threads, [&](std::size_t a) {
            for (std::size_t b = 0; b < cols.size(); ++b) {
              const double f = fidelity(rows[a], cols[b]);
              k.values(i0 + a, j0 + b) = f;
              k.values(j0 + b, i0 + a) = f;
            }
          });
        }
      }
    }
    return k;
  }

  if ((nl + nr) * state_bytes <= opts.memory_cap_bytes) {
    const auto ls = prepare_states(left, 0, nl, cfg, threads);
    const auto rs = prepare_states(right, 0, nr, cfg, threads);
    fill_block(k.values, ls, 0, rs, 0, threads);
  } else {
    const std::size_t stripe =
        std::max<std::uint64_t>(1, opts.memory_cap_bytes / (2 * state_bytes));
    for (std::size_t i0 = 0; i0 < nl; i0 += stripe) {
      const std::size_t i1 = std::min(nl, i0 + stripe);
      const auto ls = prepare_states(left, i0, i1, cfg, threads);
      for (std::size_t j0 = 0; j0 < nr; j0 += stripe) {
        const std::size_t j1 = std::min(nr, j0 + stripe);
        const auto rs = prepare_states(right, j0, j1, cfg, threads);
        fill_block(k.values, ls, i0, rs, j0, threads);
      }
    }
  }
  return k;
}

Matrix pauli_z_features(const Matrix& x, const CircuitConfig& cfg, unsigned threads) {
  cfg.validate();
  if (x.cols() != cfg.num_qubits)
    throw std::invalid_argument("pauli_z_features: feature columns must equal num_qubits");
  Matrix z(x.rows(), cfg.num_qubits);
  parallel_for(0, x.rows(), std::max(1u, threads), [&](std::size_t i) {
    const auto zi = pauli_z_expectations(bsp_state(x.row(i), cfg));
    for (std::size_t k = 0; k < zi.size(); ++k) z(i, k) = zi[k];
  });
  return z;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

KernelMatrix gaussian_kernel(const Matrix& left, const Matrix& right, double gamma,
                             KernelKind kind) {
  if (left.cols() != right.cols())
    throw std::invalid_argument("rbf kernel: column counts differ");
  if (!(gamma > 0.0)) throw std::invalid_argument("rbf kernel: gamma must be positive");
  KernelMatrix k;
  k.kind = kind;
  k.values = Matrix(left.rows(), right.rows());
  const bool symmetric = (left.rows() == right.rows()) && (left == right);
  for (std::size_t i = 0; i < left.rows(); ++i) {
    const std::size_t j0 = symmetric ? i : 0;
    for (std::size_t j = j0; j < right.rows(); ++j) {
      const double v = std::exp(-gamma * squared_distance(left.row(i), right.row(j)));
      k.values(i, j) = v;
      if (symmetric) k.values(j, i) = v;
    }
  }
  return k;
}

}  // namespace

KernelMatrix projected_kernel(const Matrix& left_z, const Matrix& right_z, double gamma) {
  return gaussian_kernel(left_z, right_z, gamma, KernelKind::projected);
}

KernelMatrix rbf_kernel(const Matrix& left, const Matrix& right, double gamma) {
  return gaussian_kernel(left, right, gamma, KernelKind::rbf);
}

KernelMatrix linear_kernel(const Matrix& left, const Matrix& right) {
  if (left.cols() != right.cols())
    throw std::invalid_argument("linear_kernel: column counts differ");
  KernelMatrix k;
  k.kind = KernelKind::linear;
  k.values = Matrix(left.rows(), right.rows());
  const bool symmetric = (left.rows() == right.rows()) && (left == right);
  for (std::size_t i = 0; i < left.rows(); ++i) {
    const std::size_t j0 = symmetric ? i : 0;
    for (std::size_t j = j0; j < right.rows(); ++j) {
      double dot = 0.0;
      const auto a = left.row(i);
      const auto b = right.row(j);
      for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
      k.values(i, j) = dot;
      if (symmetric) k.values(j, i) = dot;
    }
  }
  return k;
}

double scale_gamma(const Matrix& x) {
  const std::size_t n = x.size();
  if (n < 2 || x.cols() == 0)
    throw std::invalid_argument("scale_gamma: need at least 2 entries");
  double mean = 0.0, max_abs = 0.0;
  for (double v : x.data()) {
    mean += v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  // variance at rounding-noise level counts as zero
  const double floor = 1e-24 * std::max(1.0, max_abs * max_abs);
  if (var <= floor) throw DataError("scale_gamma: zero variance (degenerate input)");
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

KernelMatrix normalize_train(const KernelMatrix& k, NormalizationMode mode,
                             TrainKernelStats* stats) {
  const std::size_t n = k.values.rows();
  if (n == 0 || k.values.cols() != n)
    throw std::invalid_argument("normalize_train: train kernel must be square");

  TrainKernelStats st;
  st.mode = mode;
  st.trace = trace(k.values);
  double fro = 0.0;
  for (double v : k.values.data()) fro += v * v;
  st.frobenius = std::sqrt(fro);
  st.diagonal.resize(n);
  for (std::size_t i = 0; i < n; ++i) st.diagonal[i] = k.values(i, i);

  KernelMatrix out = k;
  out.normalization = mode;
  switch (mode) {
    case NormalizationMode::none:
      out.normalization = NormalizationMode::none;
      break;
    case NormalizationMode::trace: {
      if (st.trace == 0.0) throw NumericalError("trace normalization: zero trace");
      for (double& v : out.values.data()) v /= st.trace;
      out.train_trace = st.trace;
      break;
    }
    case NormalizationMode::frobenius: {
      if (st.frobenius == 0.0)
        throw NumericalError("frobenius normalization: zero norm");
      for (double& v : out.values.data()) v /= st.frobenius;
      break;
    }
    case NormalizationMode::cosine: {
      for (std::size_t i = 0; i < n; ++i)
        if (st.diagonal[i] <= 0.0)
          throw NumericalError("cosine normalization: non-positive diagonal entry");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out.values(i, j) /= std::sqrt(st.diagonal[i] * st.diagonal[j]);
      break;
    }
  }
  if (stats) *stats = st;
  return out;
}

KernelMatrix normalize_test(const KernelMatrix& k_cross, const TrainKernelStats& stats,
                            std::span<const double> test_self) {
  if (k_cross.values.cols() != stats.diagonal.size())
    throw std::invalid_argument("normalize_test: column count must match training size");
  KernelMatrix out = k_cross;
  out.normalization = stats.mode;
  switch (stats.mode) {
    case NormalizationMode::none:
      break;
    case NormalizationMode::trace: {
      if (stats.trace == 0.0) throw NumericalError("trace normalization: zero trace");
      for (double& v : out.values.data()) v /= stats.trace;
      out.train_trace = stats.trace;
      break;
    }
    case NormalizationMode::frobenius: {
      if (stats.frobenius == 0.0)
        throw NumericalError("frobenius normalization: zero norm");
      for (double& v : out.values.data()) v /= stats.frobenius;
      break;
    }
    case NormalizationMode::cosine: {
      const std::size_t rows = out.values.rows();
      std::vector<double> self;
      if (test_self.empty()) {
        const bool unit_diag = k_cross.kind == KernelKind::quantum_fidelity ||
                               k_cross.kind == KernelKind::rbf ||
                               k_cross.kind == KernelKind::projected;
        if (!unit_diag)
          throw std::invalid_argument(
              "normalize_test: cosine mode needs test self-kernel values for this kind");
        self.assign(rows, 1.0);
        test_self = self;
      }
      if (test_self.size() != rows)
        throw std::invalid_argument("normalize_test: test_self length must match rows");
      for (double d : stats.diagonal)
        if (d <= 0.0)
          throw NumericalError("cosine normalization: non-positive diagonal entry");
      for (double d : test_self)
        if (d <= 0.0)
          throw NumericalError("cosine normalization: non-positive test self-kernel");
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < stats.diagonal.size(); ++j)
          out.values(i, j) /= std::sqrt(test_self[i] * stats.diagonal[j]);
      break;
    }
  }
  return out;
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* ptr, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(ptr);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::uint64_t feature_hash(const Matrix& x, const CircuitConfig* cfg, KernelKind kind,
                           double gamma) {
  std::uint64_t h = 1469598103934665603ull;
  const std::uint64_t dims[2] = {x.rows(), x.cols()};
  fnv_bytes(h, dims, sizeof(dims));
  fnv_bytes(h, x.data().data(), x.data().size() * sizeof(double));
  const int kind_tag = static_cast<int>(kind);
  fnv_bytes(h, &kind_tag, sizeof(kind_tag));
  if (cfg) {
    const std::uint64_t c[3] = {cfg->num_qubits, cfg->reps,
                                static_cast<std::uint64_t>(cfg->dof)};
    fnv_bytes(h, c, sizeof(c));
  }
  if (gamma != 0.0) fnv_bytes(h, &gamma, sizeof(gamma));
  return h;
}

void save_kernel(const KernelMatrix& k, const std::string& path, const KernelMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open kernel file for writing: " + path);

  const char magic[4] = {'Q', 'K', 'M', 'X'};
  const std::uint16_t version = 1;
  const std::uint16_t reserved = 0;
  const std::uint32_t rows = static_cast<std::uint32_t>(k.values.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(k.values.cols());
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&reserved), sizeof(reserved));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(k.values.data().data()),
            static_cast<std::streamsize>(k.values.size() * sizeof(double)));
  if (!out) throw DataError("short write to kernel file: " + path);
  out.close();

  nlohmann::ordered_json side;
  side["kind"] = to_string(k.kind);
  side["normalization"] = to_string(k.normalization);
  side["train_trace"] = k.train_trace;
  if (meta.circuit) {
    side["circuit"] = {{"num_qubits", meta.circuit->num_qubits},
                       {"reps", meta.circuit->reps},
                       {"dof", meta.circuit->dof}};
  } else {
    side["circuit"] = nullptr;
  }
  if (meta.gamma)
    side["gamma"] = *meta.gamma;
  else
    side["gamma"] = nullptr;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(meta.feature_hash));
  side["feature_hash"] = hex;

  std::ofstream sout(path + ".json");
  if (!sout) throw DataError("cannot open kernel sidecar for writing: " + path + ".json");
  sout << side.dump(2) << "\n";
}

KernelMatrix load_kernel(const std::string& path, KernelMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open kernel file: " + path);
  char magic[4];
  std::uint16_t version = 0, reserved = 0;
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&reserved), sizeof(reserved));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || std::memcmp(magic, "QKMX", 4) != 0)
    throw DataError("not a qkmx kernel file: " + path);
  if (version != 1)
    throw DataError("unsupported qkmx version in " + path);

  KernelMatrix k;
  k.values = Matrix(rows, cols);
  in.read(reinterpret_cast<char*>(k.values.data().data()),
          static_cast<std::streamsize>(k.values.size() * sizeof(double)));
  if (!in) throw DataError("truncated kernel file: " + path);

  std::ifstream sin(path + ".json");
  if (sin) {
    nlohmann::json side = nlohmann::json::parse(sin, nullptr, true, true);
    k.kind = kernel_kind_from_string(side.value("kind", "linear"));
    k.normalization = normalization_from_string(side.value("normalization", "none"));
    k.train_trace = side.value("train_trace", 0.0);
    if (meta) {
      *meta = KernelMeta{};
      if (side.contains("circuit") && !side["circuit"].is_null()) {
        CircuitConfig cfg;
        cfg.num_qubits = side["circuit"].value("num_qubits", std::size_t{2});
        cfg.reps = side["circuit"].value("reps", std::size_t{1});
        cfg.dof = side["circuit"].value("dof", 1);
        meta->circuit = cfg;
      }
      if (side.contains("gamma") && !side["gamma"].is_null())
        meta->gamma = side["gamma"].get<double>();
      if (side.contains("feature_hash"))
        meta->feature_hash =
            std::strtoull(side["feature_hash"].get<std::string>().c_str(), nullptr, 16);
    }
  } else if (meta) {
    *meta = KernelMeta{};
  }
  return k;
}

}  // namespace qksvm
