#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qksvm/matrix.hpp"
#include "qksvm/statevector.hpp"

namespace qksvm {

enum class KernelKind { quantum_fidelity, projected, linear, rbf };
enum class NormalizationMode { none, trace, frobenius, cosine };

const char* to_string(KernelKind k);
const char* to_string(NormalizationMode m);
KernelKind kernel_kind_from_string(const std::string& s);
NormalizationMode normalization_from_string(const std::string& s);

// Gram matrix (square train or rectangular test x train) tagged with how it
// was built and how it was normalized.
struct KernelMatrix {
  Matrix values;
  KernelKind kind = KernelKind::linear;
  NormalizationMode normalization = NormalizationMode::none;
  double train_trace = 0.0;  // recorded when normalization == trace
};

// Pre-normalization statistics of a square training kernel; everything a test
// block needs to be normalized consistently with its training kernel.
struct TrainKernelStats {
  NormalizationMode mode = NormalizationMode::none;
  double trace = 0.0;
  double frobenius = 0.0;
  std::vector<double> diagonal;
};

struct KernelOptions {
  unsigned threads = 1;
  // Budget for cached statevectors; above it, kernel assembly falls back to
  // row-blocked stripes that recompute right-block states.
  std::uint64_t memory_cap_bytes = std::uint64_t{4} << 30;
};

// Fidelity kernel: entry (i,j) = |<psi(left_i)|psi(right_j)>|^2. Symmetric
// with unit diagonal when left and right hold identical rows.
KernelMatrix quantum_kernel(const Matrix& left, const Matrix& right,
                            const CircuitConfig& cfg, const KernelOptions& opts = {});

// Per-sample Pauli-Z expectation vectors of the encoded states, n x q.
Matrix pauli_z_features(const Matrix& x, const CircuitConfig& cfg, unsigned threads = 1);

// RBF over expectation vectors: exp(-gamma * ||z_i - z_j||^2).
KernelMatrix projected_kernel(const Matrix& left_z, const Matrix& right_z, double gamma);

KernelMatrix linear_kernel(const Matrix& left, const Matrix& right);

KernelMatrix rbf_kernel(const Matrix& left, const Matrix& right, double gamma);

// 1 / (n_features * population variance over all entries of x).
double scale_gamma(const Matrix& x);

// Normalizes a square training kernel. trace and frobenius divide by a
// positive scalar; cosine divides entry (i,j) by sqrt(K_ii * K_jj); none is
// the identity. Pre-normalization stats are written to *stats when given.
KernelMatrix normalize_train(const KernelMatrix& k, NormalizationMode mode,
                             TrainKernelStats* stats = nullptr);

// Normalizes a test x train block against its training kernel: trace and
// frobenius reuse the training scalar; cosine uses the training diagonal on
// the train side and test_self (the test samples' self-kernel values) on the
// test side. test_self may be omitted for kinds with unit self-kernel
// (quantum_fidelity, rbf, projected).
KernelMatrix normalize_test(const KernelMatrix& k_cross, const TrainKernelStats& stats,
                            std::span<const double> test_self = {});

// FNV-1a over the row bytes of x plus any circuit/gamma discriminators;
// keys the kernel cache.
std::uint64_t feature_hash(const Matrix& x, const CircuitConfig* cfg = nullptr,
                           KernelKind kind = KernelKind::linear, double gamma = 0.0);

// Optional provenance stored in the sidecar next to a kernel file.
struct KernelMeta {
  std::optional<CircuitConfig> circuit;
  std::optional<double> gamma;
  std::uint64_t feature_hash = 0;
};

// Binary .qkmx container: 16-byte header (magic "QKMX", version u16,
// reserved u16, rows u32, cols u32, little-endian) followed by row-major
// 64-bit little-endian floats. A JSON sidecar is written to path + ".json".
void save_kernel(const KernelMatrix& k, const std::string& path,
                 const KernelMeta& meta = {});
KernelMatrix load_kernel(const std::string& path, KernelMeta* meta = nullptr);

}  // namespace qksvm
