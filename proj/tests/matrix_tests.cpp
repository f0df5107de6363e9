#include <doctest.h>

#include <random>

#include "cityvl/errors.hpp"
#include "cityvl/matrix.hpp"

using namespace cityvl;

namespace {

Matrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("matmul agrees with a hand-expanded 2x2 product") {
  Matrix a(2, 2), b(2, 2);
  a.at(0, 0) = 1; a.at(0, 1) = 2; a.at(1, 0) = 3; a.at(1, 1) = 4;
  b.at(0, 0) = 5; b.at(0, 1) = 6; b.at(1, 0) = 7; b.at(1, 1) = 8;
  const Matrix c = matmul(a, b);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);
  CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), ShapeMismatch);
}

TEST_CASE("parallel kernels are bit-identical to the serial references") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t m = 1 + rng() % 60;
    const std::size_t k = 1 + rng() % 40;
    const std::size_t n = 1 + rng() % 50;
    const Matrix a = random_matrix(rng, m, k);
    const Matrix b = random_matrix(rng, k, n);
    CHECK(matmul(a, b) == matmul_serial(a, b));

    std::vector<double> bias(n);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : bias) v = dist(rng);
    CHECK(affine_rows(a, random_matrix(rng, k, n), bias).rows() == m);
    const Matrix w = random_matrix(rng, k, n);
    CHECK(affine_rows(a, w, bias) == affine_rows_serial(a, w, bias));
  }
}

TEST_CASE("identity affine map reproduces its input") {
  std::mt19937 rng(5);
  const Matrix in = random_matrix(rng, 7, 16);
  const Matrix id = Matrix::identity(16);
  std::vector<double> zero(16, 0.0);
  CHECK(affine_rows(in, id, zero) == in);
}

TEST_CASE("vstack concatenates rows in order") {
  Matrix top(2, 3, 1.0), bottom(1, 3, 2.0);
  const Matrix out = vstack(top, bottom);
  REQUIRE(out.rows() == 3);
  CHECK(out.at(0, 0) == 1.0);
  CHECK(out.at(2, 2) == 2.0);
  CHECK(vstack(Matrix(), bottom) == bottom);
  CHECK_THROWS_AS(vstack(Matrix(1, 2), Matrix(1, 3)), ShapeMismatch);
}

TEST_CASE("transpose round-trips") {
  std::mt19937 rng(6);
  const Matrix m = random_matrix(rng, 5, 9);
  CHECK(transpose(transpose(m)) == m);
  CHECK(transpose(m).rows() == 9);
}
