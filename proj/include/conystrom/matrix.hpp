#pragma once

// Dense row-major double-precision matrix and the error types shared by all
// kernels. Deliberately minimal: construction, element and row access, and
// shape queries. Everything numerical lives in kernels.hpp.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace conystrom {

// Operand shapes disagree.
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A kernel produced a non-finite value; for this library that means an
// exponential overflowed and the inputs need pre-scaling.
struct overflow_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A row scale of zero, i.e. an underflowed row-sum vector.
struct zero_scale_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The pseudo-inverse iteration did not reach its residual bound.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Matrix {
 public:
  Matrix() = default;

  // Zero-filled rows x cols.
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  // Takes ownership of row-major data; rejects length mismatch and
  // non-finite values.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw dimension_error("matrix data length does not equal rows*cols");
    for (double v : data_)
      if (!std::isfinite(v))
        throw overflow_error("matrix constructed with a non-finite value");
  }

  static Matrix identity(std::size_t n) {
    Matrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) e(i, i) = 1.0;
    return e;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace conystrom
