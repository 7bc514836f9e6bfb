#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qksvm {

// Dense real matrix, row-major, 64-bit floats throughout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product; deterministic regardless of how callers thread around it.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

double trace(const Matrix& m);

// Largest |a_ij - a_ji| over all pairs, 0 for empty matrices.
double max_asymmetry(const Matrix& m);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Converges when the
// off-diagonal Frobenius norm drops below 1e-12 * ||m||_F, capped at 100
// sweeps. Input must be symmetric within 1e-9 relative tolerance.
EigenDecomposition sym_eigen(const Matrix& m);

}  // namespace qksvm
