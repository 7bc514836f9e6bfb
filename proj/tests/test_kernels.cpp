#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "qksvm/errors.hpp"
#include "qksvm/kernel.hpp"
#include "qksvm/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace qksvm;

namespace {

Matrix random_features(std::size_t n, std::size_t q, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, q);
  for (double& v : m.data()) v = 2.0 * rng.next_double() - 1.0;
  return m;
}

}  // namespace

TEST_CASE("quantum kernel on identical samples is all ones") {
  Matrix x(2, 2);
  x(0, 0) = 0.3;
  x(0, 1) = -0.4;
  x(1, 0) = 0.3;
  x(1, 1) = -0.4;
  const auto k = quantum_kernel(x, x, CircuitConfig{2, 1, 1});
  for (double v : k.values.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quantum train kernel has unit diagonal and [0,1] entries") {
  const Matrix x = random_features(6, 3, 5);
  const auto k = quantum_kernel(x, x, CircuitConfig{3, 1, 1});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::abs(k.values(i, i) - 1.0) < 1e-12);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(k.values(i, j) >= 0.0);
      CHECK(k.values(i, j) <= 1.0 + 1e-12);
      CHECK(k.values(i, j) == k.values(j, i));  // mirrored exactly
    }
  }
  CHECK(k.kind == KernelKind::quantum_fidelity);
}

TEST_CASE("quantum kernel matches the pairwise dense-unitary oracle") {
  const Matrix x = random_features(4, 2, 6);
  const auto k = quantum_kernel(x, x, CircuitConfig{2, 1, 1});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const auto a = testsupport::bsp_state_oracle(x.row(i), 2);
      const auto b = testsupport::bsp_state_oracle(x.row(j), 2);
      testsupport::cxd dot{};
      for (std::size_t t = 0; t < a.size(); ++t) dot += std::conj(a[t]) * b[t];
      CHECK(std::abs(k.values(i, j) - std::norm(dot)) < 1e-12);
    }
}

TEST_CASE("quantum kernel is identical for any thread count and memory cap") {
  const Matrix left = random_features(9, 3, 7);
  const Matrix right = random_features(5, 3, 8);
  const auto base = quantum_kernel(left, right, CircuitConfig{3, 2, 1});

  KernelOptions threaded;
  threaded.threads = 4;
  CHECK(quantum_kernel(left, right, CircuitConfig{3, 2, 1}, threaded).values == base.values);

  KernelOptions blocked;
  blocked.memory_cap_bytes = 3 * (std::size_t{1} << 3) * sizeof(std::complex<double>);
  CHECK(quantum_kernel(left, right, CircuitConfig{3, 2, 1}, blocked).values == base.values);

  const auto sym = quantum_kernel(left, left, CircuitConfig{3, 2, 1});
  KernelOptions blocked_threaded = blocked;
  blocked_threaded.threads = 3;
  CHECK(quantum_kernel(left, left, CircuitConfig{3, 2, 1}, blocked_threaded).values ==
        sym.values);
}

TEST_CASE("projected kernel formula") {
  Matrix z(2, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    z(0, c) = 0.5;
    z(1, c) = -0.5;  // squared distance 4 * 1 = 4
  }
  const auto k = projected_kernel(z, z, 0.25);
  CHECK(k.values(0, 0) == doctest::Approx(1.0));
  CHECK(k.values(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  const Matrix a = random_features(5, 3, 9);
  const Matrix b = random_features(4, 3, 10);
  const auto kp = projected_kernel(a, b, 1.7);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = a(i, c) - b(j, c);
        d2 += d * d;
      }
      CHECK(std::abs(kp.values(i, j) - std::exp(-1.7 * d2)) < 1e-14);
    }
  CHECK_THROWS_AS(projected_kernel(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("linear kernel") {
  Matrix ortho(2, 2);
  ortho(0, 0) = 1.0;
  ortho(1, 1) = 1.0;
  const auto k = linear_kernel(ortho, ortho);
  CHECK(k.values(0, 0) == 1.0);
  CHECK(k.values(1, 1) == 1.0);
  CHECK(k.values(0, 1) == 0.0);

  const Matrix x = testsupport::random_matrix(6, 4, 12);
  const auto kl = linear_kernel(x, x);
  const Matrix want = testsupport::matmul_oracle(x, transpose(x));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(kl.values(i, j) == doctest::Approx(want(i, j)).epsilon(1e-14));

  Matrix bad(2, 3);
  CHECK_THROWS_AS(linear_kernel(x, bad), std::invalid_argument);
}

TEST_CASE("rbf kernel") {
  const Matrix x = random_features(5, 3, 13);
  const auto k = rbf_kernel(x, x, 1.0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(k.values(i, i) == doctest::Approx(1.0));

  Matrix pair(2, 1);
  pair(0, 0) = 0.0;
  pair(1, 0) = std::sqrt(std::log(2.0));
  const auto kh = rbf_kernel(pair, pair, 1.0);
  CHECK(kh.values(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const Matrix y = random_features(4, 3, 14);
  const auto kc = rbf_kernel(x, y, 2.3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = x(i, c) - y(j, c);
        d2 += d * d;
      }
      CHECK(std::abs(kc.values(i, j) - std::exp(-2.3 * d2)) < 1e-14);
    }
}

TEST_CASE("scale_gamma") {
  Matrix pm(4, 1);
  pm(0, 0) = -1.0;
  pm(1, 0) = 1.0;
  pm(2, 0) = -1.0;
  pm(3, 0) = 1.0;
  CHECK(scale_gamma(pm) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix constant(3, 2, 0.7);
  CHECK_THROWS_AS(scale_gamma(constant), DataError);

  const Matrix x = testsupport::random_matrix(50, 4, 15);
  const auto [mean, var] = testsupport::two_pass_stats(x.data());
  CHECK(scale_gamma(x) == doctest::Approx(1.0 / (4.0 * var)).epsilon(1e-12));
}

TEST_CASE("trace normalization sets train trace to 1 and scales the test block") {
  const Matrix x = random_features(8, 3, 16);
  const Matrix t = random_features(3, 3, 17);
  const auto cfg = CircuitConfig{3, 1, 1};
  const auto k_train = quantum_kernel(x, x, cfg);
  const auto k_test = quantum_kernel(t, x, cfg);

  TrainKernelStats stats;
  const auto norm_train = normalize_train(k_train, NormalizationMode::trace, &stats);
  CHECK(std::abs(trace(norm_train.values) - 1.0) < 1e-12);
  CHECK(norm_train.train_trace == doctest::Approx(8.0).epsilon(1e-12));

  const auto norm_test = normalize_test(k_test, stats);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(norm_test.values(i, j) ==
            doctest::Approx(k_test.values(i, j) / stats.trace).epsilon(1e-14));
}

TEST_CASE("frobenius normalization of the 2x2 identity") {
  KernelMatrix k;
  k.kind = KernelKind::linear;
  k.values = Matrix::identity(2);
  const auto norm = normalize_train(k, NormalizationMode::frobenius);
  CHECK(norm.values(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(norm.values(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(norm.values(0, 1) == 0.0);
}

TEST_CASE("cosine normalization is the identity on unit-diagonal kernels") {
  const Matrix x = random_features(6, 2, 18);
  const auto k = quantum_kernel(x, x, CircuitConfig{2, 1, 1});
  const auto norm = normalize_train(k, NormalizationMode::cosine);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(std::abs(norm.values(i, j) - k.values(i, j)) < 1e-12);
}

TEST_CASE("cosine normalization of a linear test block uses both diagonals") {
  const Matrix x = testsupport::random_matrix(5, 3, 19);
  const Matrix t = testsupport::random_matrix(2, 3, 20);
  const auto k_train = linear_kernel(x, x);
  const auto k_test = linear_kernel(t, x);
  TrainKernelStats stats;
  const auto norm_train = normalize_train(k_train, NormalizationMode::cosine, &stats);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(norm_train.values(i, i) == doctest::Approx(1.0).epsilon(1e-12));

  // test side requires explicit self-kernels for linear kernels
  CHECK_THROWS_AS(normalize_test(k_test, stats), std::invalid_argument);
  std::vector<double> self(2);
  const auto k_self = linear_kernel(t, t);
  self[0] = k_self.values(0, 0);
  self[1] = k_self.values(1, 1);
  const auto norm_test = normalize_test(k_test, stats, self);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(norm_test.values(i, j) ==
            doctest::Approx(k_test.values(i, j) /
                            std::sqrt(self[i] * stats.diagonal[j])).epsilon(1e-12));
}

TEST_CASE("normalization error paths") {
  KernelMatrix zero;
  zero.values = Matrix(3, 3, 0.0);
  CHECK_THROWS_AS(normalize_train(zero, NormalizationMode::trace), NumericalError);
  CHECK_THROWS_AS(normalize_train(zero, NormalizationMode::frobenius), NumericalError);
  CHECK_THROWS_AS(normalize_train(zero, NormalizationMode::cosine), NumericalError);
  KernelMatrix rect;
  rect.values = Matrix(2, 3, 1.0);
  CHECK_THROWS_AS(normalize_train(rect, NormalizationMode::trace), std::invalid_argument);
}

TEST_CASE("qkmx round trip preserves values and metadata") {
  const auto dir = std::filesystem::temp_directory_path() / "qksvm_kernel_io";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "k.qkmx").string();

  const Matrix x = random_features(5, 2, 21);
  auto k = quantum_kernel(x, x, CircuitConfig{2, 2, 1});
  TrainKernelStats stats;
  k = normalize_train(k, NormalizationMode::trace, &stats);
  KernelMeta meta;
  meta.circuit = CircuitConfig{2, 2, 1};
  meta.feature_hash = feature_hash(x, &*meta.circuit, KernelKind::quantum_fidelity);
  save_kernel(k, path, meta);

  // 16-byte header: magic, version, reserved, rows, cols
  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f);
  unsigned char header[16];
  REQUIRE(std::fread(header, 1, 16, f) == 16);
  std::fclose(f);
  CHECK(header[0] == 'Q');
  CHECK(header[1] == 'K');
  CHECK(header[2] == 'M');
  CHECK(header[3] == 'X');
  CHECK(header[4] == 1);  // version u16 LE
  CHECK(header[5] == 0);
  CHECK(header[8] == 5);  // rows u32 LE
  CHECK(header[12] == 5);  // cols u32 LE

  KernelMeta back_meta;
  const auto back = load_kernel(path, &back_meta);
  CHECK(back.values == k.values);
  CHECK(back.kind == KernelKind::quantum_fidelity);
  CHECK(back.normalization == NormalizationMode::trace);
  CHECK(back.train_trace == doctest::Approx(k.train_trace));
  REQUIRE(back_meta.circuit.has_value());
  CHECK(back_meta.circuit->num_qubits == 2);
  CHECK(back_meta.circuit->reps == 2);
  CHECK(back_meta.feature_hash == meta.feature_hash);

  CHECK_THROWS_AS(load_kernel((dir / "missing.qkmx").string()), DataError);
}
