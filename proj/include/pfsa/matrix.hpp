#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pfsa {

// Dense row-major matrix. Machines in this library are tiny (a handful of
// states), so there is no need for anything fancier than direct elimination.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  double row_sum(std::size_t r) const {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c);
    return s;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// Row vector times matrix: returns p^T * M.
inline std::vector<double> left_multiply(const std::vector<double>& p, const Matrix& m) {
  assert(p.size() == m.rows());
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double pi = p[i];
    if (pi == 0.0) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += pi * m(i, j);
  }
  return out;
}

// Solves A X = B in place by Gaussian elimination with partial pivoting.
// B may carry multiple right-hand sides as columns.
inline Matrix solve_linear(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("solve_linear: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("solve_linear: singular system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
      for (std::size_t c = 0; c < b.cols(); ++c) std::swap(b(pivot, c), b(col, c));
    }
    double inv = 1.0 / a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a(r, col) * inv;
      if (f == 0.0) continue;
      a(r, col) = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
    }
  }
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t ri = n; ri-- > 0;) {
      double s = b(ri, c);
      for (std::size_t j = ri + 1; j < n; ++j) s -= a(ri, j) * x(j, c);
      x(ri, c) = s / a(ri, ri);
    }
  }
  return x;
}

inline std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b) {
  Matrix rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  Matrix x = solve_linear(a, rhs);
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = x(i, 0);
  return out;
}

}  // namespace pfsa
