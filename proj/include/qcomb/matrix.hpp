#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "qcomb/error.hpp"

namespace qcomb {

using cplx = std::complex<double>;

/// Dense complex matrix stored in row-major order.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("ComplexMatrix: entry count does not match shape");
  }
  /// Row-wise initializer, mostly for tests: {{1, 0}, {0, 1}}.
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ComplexMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static ComplexMatrix zero(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static ComplexMatrix diagonal(std::span<const cplx> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static ComplexMatrix diagonal(std::span<const double> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  /// Column vector.
  static ComplexMatrix column(std::span<const cplx> v) {
    return {v.size(), 1, std::vector<cplx>(v.begin(), v.end())};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool is_square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::span<cplx> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const cplx> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  ComplexMatrix adjoint() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }
  ComplexMatrix transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }
  ComplexMatrix conj() const {
    ComplexMatrix r = *this;
    for (auto& z : r.data_) z = std::conj(z);
    return r;
  }

  cplx trace() const {
    if (!is_square()) throw ShapeError("trace of a non-square matrix");
    cplx t = 0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }
  double frobenius_norm() const {
    double s = 0;
    for (const auto& z : data_) s += std::norm(z);
    return std::sqrt(s);
  }
  double max_abs() const {
    double m = 0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }
  bool all_finite() const {
    for (const auto& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }
  /// (A + A†)/2.
  ComplexMatrix hermitian_part() const {
    if (!is_square()) throw ShapeError("hermitian_part of a non-square matrix");
    ComplexMatrix r(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(i, j) = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
    return r;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  ComplexMatrix& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }
  /// this += s * o, without a temporary.
  ComplexMatrix& add_scaled(const ComplexMatrix& o, cplx s) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, double s) { return a *= s; }
  friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) throw ShapeError("matrix product: inner dimensions differ");
    ComplexMatrix r(a.rows_, b.cols_);
    // i-k-j order; exact zeros are skipped, which pays off for the sparse
    // Choi operators of the counterexample.
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cplx* ri = r.data_.data() + i * r.cols_;
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx(0.0)) continue;
        const cplx* bk = b.data_.data() + k * b.cols_;
        for (std::size_t j = 0; j < b.cols_; ++j) ri[j] += aik * bk[j];
      }
    }
    return r;
  }

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void check_same_shape(const ComplexMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("matrix shapes differ");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// Kronecker product a ⊗ b (a's index is the more significant one).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx(0.0)) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) r(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return r;
}

/// Tr[a b] without forming the product.
inline cplx trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) throw ShapeError("trace_of_product: shapes incompatible");
  cplx t = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) t += a(i, k) * b(k, i);
  return t;
}

/// |v⟩⟨w| for column vectors given as spans.
inline ComplexMatrix outer(std::span<const cplx> v, std::span<const cplx> w) {
  ComplexMatrix r(v.size(), w.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) r(i, j) = v[i] * std::conj(w[j]);
  return r;
}

/// Vectorization |M⟩⟩ = Σ M_{mn} |m⟩|n⟩: entry (m, n) lands at m·cols + n.
/// This is the only reshape convention used in the library.
inline ComplexMatrix double_ket(const ComplexMatrix& m) {
  return {m.size(), 1, std::vector<cplx>(m.data().begin(), m.data().end())};
}

/// Inverse of double_ket for a vector of length rows·cols.
inline ComplexMatrix unvec(std::span<const cplx> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw ShapeError("unvec: length does not match shape");
  return {rows, cols, std::vector<cplx>(v.begin(), v.end())};
}

inline bool is_hermitian(const ComplexMatrix& h, double rel_tol = 1e-10) {
  if (!h.is_square()) return false;
  double diff = 0;
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = i; j < h.cols(); ++j) diff += (i == j ? 1.0 : 2.0) * std::norm(h(i, j) - std::conj(h(j, i)));
  return std::sqrt(diff) <= rel_tol * std::max(h.frobenius_norm(), 1e-300) || h.frobenius_norm() == 0.0;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = 1e-10) {
  if (!u.is_square()) return false;
  return (u.adjoint() * u - ComplexMatrix::identity(u.rows())).frobenius_norm() <= tol * std::sqrt(double(u.rows()));
}

}  // namespace qcomb
