#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mplex/error.hpp"

namespace mplex {

/// Dense row-major matrix.
template <typename T>
class Matrix {
public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows, cols));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw DimensionError("ragged matrix literal");
      }
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = T(1);
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Element type conversion (double <-> float).
  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Matrix& o) const = default;

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
T frobenius_norm_sq(const Matrix<T>& m) {
  T s = 0;
  for (T v : m.data()) {
    s += v * v;
  }
  return s;
}

/// out (+)= op(a) * op(b), where op transposes when the flag is set.
template <typename T>
void gemm(const Matrix<T>& a, bool trans_a, const Matrix<T>& b, bool trans_b, Matrix<T>& out,
          bool accumulate = false) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb) {
    throw DimensionError("matmul inner dimensions differ: " + a.shape() + (trans_a ? "^T" : "") +
                         " * " + b.shape() + (trans_b ? "^T" : ""));
  }
  if (!accumulate) {
    out = Matrix<T>(m, n);
  } else if (out.rows() != m || out.cols() != n) {
    throw DimensionError("gemm accumulator has shape " + out.shape() + ", expected " +
                         Matrix<T>::shape_string(m, n));
  }
  // A transposed right operand is materialized so the inner loop stays
  // contiguous over b and out.
  Matrix<T> bt;
  if (trans_b) {
    bt = Matrix<T>(b.cols(), b.rows());
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) bt(j, i) = b(i, j);
    }
  }
  const Matrix<T>& bb = trans_b ? bt : b;
  const T* pa = a.data().data();
  const T* pb = bb.data().data();
  T* po = out.data().data();
  const std::size_t lda = a.cols();
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = trans_a ? pa[p * lda + i] : pa[i * lda + p];
      const T* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        orow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> out;
  gemm(a, false, b, false, out);
  return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(j, i) = a(i, j);
    }
  }
  return out;
}

/// (row, col, weight) entry used to build sparse matrices.
template <typename T>
struct Triplet {
  std::size_t row;
  std::size_t col;
  T weight;
};

/// Compressed-row sparse matrix. Column indices are sorted within each row
/// and unique.
template <typename T>
class CsrMatrix {
public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Duplicate (row, col) pairs are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<Triplet<T>> entries) {
    for (const auto& e : entries) {
      if (e.row >= rows || e.col >= cols) {
        throw DimensionError("sparse entry (" + std::to_string(e.row) + ", " +
                             std::to_string(e.col) + ") out of range for " +
                             Matrix<T>::shape_string(rows, cols));
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
      return std::tie(x.row, x.col) < std::tie(y.row, y.col);
    });
    CsrMatrix m(rows, cols);
    for (std::size_t i = 0; i < entries.size();) {
      std::size_t j = i;
      T w = 0;
      while (j < entries.size() && entries[j].row == entries[i].row &&
             entries[j].col == entries[i].col) {
        w += entries[j].weight;
        ++j;
      }
      m.col_idx_.push_back(entries[i].col);
      m.values_.push_back(w);
      ++m.row_ptr_[entries[i].row + 1];
      i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      m.row_ptr_[r + 1] += m.row_ptr_[r];
    }
    return m;
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<Triplet<T>> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back({i, i, T(1)});
    }
    return from_triplets(n, n, std::move(t));
  }

  static CsrMatrix from_dense(const Matrix<T>& d) {
    std::vector<Triplet<T>> t;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      for (std::size_t j = 0; j < d.cols(); ++j) {
        if (d(i, j) != T(0)) {
          t.push_back({i, j, d(i, j)});
        }
      }
    }
    return from_triplets(d.rows(), d.cols(), std::move(t));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<T>& values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t r) const noexcept {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const T> row_values(std::size_t r) const noexcept {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  /// Zero when the entry is not stored.
  T at(std::size_t r, std::size_t c) const noexcept {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) {
      return T(0);
    }
    return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
  }

  std::vector<Triplet<T>> triplets() const {
    std::vector<Triplet<T>> t;
    t.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
        t.push_back({r, col_idx_[p], values_[p]});
      }
    }
    return t;
  }

  Matrix<T> to_dense() const {
    Matrix<T> d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
        d(r, col_idx_[p]) = values_[p];
      }
    }
    return d;
  }

  bool is_nonnegative() const {
    return std::all_of(values_.begin(), values_.end(), [](T v) { return v >= T(0); });
  }

  bool row_empty(std::size_t r) const noexcept { return row_ptr_[r] == row_ptr_[r + 1]; }

  template <typename U>
  CsrMatrix<U> cast() const {
    std::vector<Triplet<U>> t;
    t.reserve(nnz());
    for (const auto& e : triplets()) {
      t.push_back({e.row, e.col, static_cast<U>(e.weight)});
    }
    return CsrMatrix<U>::from_triplets(rows_, cols_, std::move(t));
  }

  bool operator==(const CsrMatrix& o) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<T> values_;
};

/// out = s * d. Each output row sums its stored entries in column order.
template <typename T>
Matrix<T> spmm(const CsrMatrix<T>& s, const Matrix<T>& d) {
  if (s.cols() != d.rows()) {
    throw DimensionError("spmm shape mismatch: sparse " + Matrix<T>::shape_string(s.rows(), s.cols()) +
                         " * dense " + d.shape());
  }
  Matrix<T> out(s.rows(), d.cols());
  const std::size_t n = d.cols();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    T* orow = out.data().data() + r * n;
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const T w = vals[p];
      const T* drow = d.data().data() + cols[p] * n;
      for (std::size_t j = 0; j < n; ++j) {
        orow[j] += w * drow[j];
      }
    }
  }
  return out;
}

/// out += s^T * g
template <typename T>
void spmm_transposed_accumulate(const CsrMatrix<T>& s, const Matrix<T>& g, Matrix<T>& out) {
  const std::size_t n = g.cols();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const T* grow = g.data().data() + r * n;
    auto cols = s.row_cols(r);
    auto vals = s.row_values(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      T* orow = out.data().data() + cols[p] * n;
      for (std::size_t j = 0; j < n; ++j) {
        orow[j] += vals[p] * grow[j];
      }
    }
  }
}

using DenseMatrix = Matrix<double>;
using SparseMatrix = CsrMatrix<double>;

} // namespace mplex
