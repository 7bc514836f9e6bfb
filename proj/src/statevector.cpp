#include "qksvm/statevector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qksvm {

void CircuitConfig::validate() const {
  if (num_qubits < 2)
    throw std::invalid_argument("circuit: ring entanglement needs at least 2 qubits");
  if (num_qubits > 24)
    throw std::invalid_argument("circuit: more than 24 qubits exceeds the memory guard");
  if (reps < 1) throw std::invalid_argument("circuit: reps must be >= 1");
  if (dof != 1 && dof != 3) throw std::invalid_argument("circuit: dof must be 1 or 3");
}

StateVector::StateVector(std::size_t num_qubits)
    : num_qubits_(num_qubits), amps_(std::size_t{1} << num_qubits) {
  amps_[0] = 1.0;
}

void StateVector::apply_ry(std::size_t qubit, double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const std::size_t step = std::size_t{1} << qubit;
  const std::size_t dim = amps_.size();
  for (std::size_t base = 0; base < dim; base += 2 * step) {
    for (std::size_t i = base; i < base + step; ++i) {
      const std::complex<double> a0 = amps_[i];
      const std::complex<double> a1 = amps_[i + step];
      amps_[i] = c * a0 - s * a1;
      amps_[i + step] = s * a0 + c * a1;
    }
  }
}

void StateVector::apply_rz(std::size_t qubit, double theta) {
  const std::complex<double> e0 = std::polar(1.0, -0.5 * theta);
  const std::complex<double> e1 = std::polar(1.0, +0.5 * theta);
  const std::size_t step = std::size_t{1} << qubit;
  const std::size_t dim = amps_.size();
  for (std::size_t base = 0; base < dim; base += 2 * step) {
    for (std::size_t i = base; i < base + step; ++i) {
      amps_[i] *= e0;
      amps_[i + step] *= e1;
    }
  }
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
  if (control == target)
    throw std::invalid_argument("cnot: control and target must differ");
  const std::size_t cbit = std::size_t{1} << control;
  const std::size_t tbit = std::size_t{1} << target;
  const std::size_t dim = amps_.size();
  for (std::size_t i = 0; i < dim; ++i)
    if ((i & cbit) && !(i & tbit)) std::swap(amps_[i], amps_[i | tbit]);
}

double StateVector::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

StateVector bsp_state(std::span<const double> features, const CircuitConfig& cfg) {
  cfg.validate();
  const std::size_t q = cfg.num_qubits;
  if (features.size() != q)
    throw std::invalid_argument("bsp_state: expected " + std::to_string(q) +
                                " features, got " + std::to_string(features.size()));
  for (double f : features)
    if (!std::isfinite(f)) throw std::invalid_argument("bsp_state: non-finite feature");

  StateVector s(q);
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    for (std::size_t d = 0; d < q; ++d) {
      if (cfg.dof == 3) {
        s.apply_rz(d, features[d]);
        s.apply_ry(d, features[d]);
        s.apply_rz(d, features[d]);
      } else {
        s.apply_ry(d, features[d]);
      }
      s.apply_cnot(d, (d + 1) % q);
    }
  }
  return s;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument("fidelity: qubit counts differ");
  const auto& av = a.amplitudes();
  const auto& bv = b.amplitudes();
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    // conj(a_i) * b_i accumulated in parts
    re += av[i].real() * bv[i].real() + av[i].imag() * bv[i].imag();
    im += av[i].real() * bv[i].imag() - av[i].imag() * bv[i].real();
  }
  return re * re + im * im;
}

std::vector<double> pauli_z_expectations(const StateVector& s) {
  const std::size_t q = s.num_qubits();
  std::vector<double> z(q, 0.0);
  const auto& amps = s.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (p == 0.0) continue;
    for (std::size_t k = 0; k < q; ++k)
      z[k] += (i >> k) & 1u ? -p : p;
  }
  // The exact values lie in [-1,1]; strip rounding overshoot from the
  // probability sum.
  for (double& v : z) v = std::clamp(v, -1.0, 1.0);
  return z;
}

}  // namespace qksvm
