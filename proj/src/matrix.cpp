#include "cityvl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "cityvl/errors.hpp"

namespace cityvl {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

void mul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t r) {
  const std::size_t k = a.cols(), n = b.cols();
  const double* arow = a.row_ptr(r);
  double* orow = out.row_ptr(r);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < k; ++t) acc += arow[t] * b.at(t, j);
    orow[j] = acc;
  }
}

void check_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("matmul " + a.shape_str() + " * " + b.shape_str());
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  check_mul(a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) mul_row(a, b, out, r);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_mul(a, b);
  Matrix out(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    mul_row(a, b, out, static_cast<std::size_t>(r));
  return out;
}

namespace {

void affine_row(const Matrix& in, const Matrix& weight,
                const std::vector<double>& bias, Matrix& out, std::size_t r) {
  const std::size_t k = in.cols(), n = weight.cols();
  const double* irow = in.row_ptr(r);
  double* orow = out.row_ptr(r);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = bias[j];
    for (std::size_t t = 0; t < k; ++t) acc += irow[t] * weight.at(t, j);
    orow[j] = acc;
  }
}

void check_affine(const Matrix& in, const Matrix& weight,
                  const std::vector<double>& bias) {
  if (in.cols() != weight.rows() || bias.size() != weight.cols())
    throw ShapeMismatch("affine " + in.shape_str() + " * " +
                        weight.shape_str() + " + bias[" +
                        std::to_string(bias.size()) + "]");
}

}  // namespace

Matrix affine_rows_serial(const Matrix& in, const Matrix& weight,
                          const std::vector<double>& bias) {
  check_affine(in, weight, bias);
  Matrix out(in.rows(), weight.cols());
  for (std::size_t r = 0; r < in.rows(); ++r)
    affine_row(in, weight, bias, out, r);
  return out;
}

Matrix affine_rows(const Matrix& in, const Matrix& weight,
                   const std::vector<double>& bias) {
  check_affine(in, weight, bias);
  Matrix out(in.rows(), weight.cols());
  const auto rows = static_cast<std::int64_t>(in.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    affine_row(in, weight, bias, out, static_cast<std::size_t>(r));
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.at(c, r) = m.at(r, c);
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols())
    throw ShapeMismatch("vstack " + top.shape_str() + " on " +
                        bottom.shape_str());
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.data().begin(), top.data().end(), out.data().begin());
  std::copy(bottom.data().begin(), bottom.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(top.data().size()));
  return out;
}

}  // namespace cityvl
