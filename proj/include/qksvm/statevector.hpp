#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qksvm {

// Data-encoding circuit shape: q qubits in a CNOT ring, one encoding block
// per rep. dof=1 places a single Ry per qubit; dof=3 an Rz-Ry-Rz triplet fed
// by the same feature value.
struct CircuitConfig {
  std::size_t num_qubits = 2;
  std::size_t reps = 1;
  int dof = 1;

  void validate() const;  // throws std::invalid_argument

  bool operator==(const CircuitConfig&) const = default;
};

// Unit-norm complex amplitude vector over 2^q basis states. Qubit k is bit k
// of the basis index (qubit 0 = least significant bit).
class StateVector {
 public:
  explicit StateVector(std::size_t num_qubits);

  std::size_t num_qubits() const { return num_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  const std::vector<std::complex<double>>& amplitudes() const { return amps_; }
  std::vector<std::complex<double>>& amplitudes() { return amps_; }

  // Ry(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
  void apply_ry(std::size_t qubit, double theta);
  // Rz(theta) = diag(exp(-i t/2), exp(+i t/2))
  void apply_rz(std::size_t qubit, double theta);
  void apply_cnot(std::size_t control, std::size_t target);

  double norm_squared() const;

 private:
  std::size_t num_qubits_;
  std::vector<std::complex<double>> amps_;
};

// Prepares the encoded state from |0...0>: per rep, for qubit d = 0..q-1 in
// ascending order, rotate qubit d by features[d] and entangle d -> (d+1) mod q.
StateVector bsp_state(std::span<const double> features, const CircuitConfig& cfg);

// |<a|b>|^2. Equals the probability of measuring |0...0> after the
// compute-uncompute circuit; exactly symmetric in its arguments.
double fidelity(const StateVector& a, const StateVector& b);

// Per-qubit <Z>; component k in [-1, 1], +1 for |0>.
std::vector<double> pauli_z_expectations(const StateVector& s);

}  // namespace qksvm
