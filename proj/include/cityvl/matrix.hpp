#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cityvl {

// Dense row-major matrix of doubles. All encoder tensors ride on this; shape
// violations throw ShapeMismatch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  std::string shape_str() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b. The default runs OpenMP-parallel over output rows; each row is
// computed by the same scalar loop as the serial reference, so the two are
// bit-identical.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

// out = in * weight + bias broadcast over rows (bias length = weight cols).
Matrix affine_rows(const Matrix& in, const Matrix& weight,
                   const std::vector<double>& bias);
Matrix affine_rows_serial(const Matrix& in, const Matrix& weight,
                          const std::vector<double>& bias);

Matrix transpose(const Matrix& m);
Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace cityvl
