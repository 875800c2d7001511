#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mplex/tensor/matrix.hpp"

namespace mplex::ad {

template <typename T>
class Tape;

/// Handle to a matrix recorded on a Tape. Cheap to copy; valid while the
/// tape is alive and not reset.
template <typename T>
class Var {
public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const noexcept { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Matrix<T>& value() const { return tape_->value(*this); }
  const Matrix<T>& grad() const { return tape_->grad(*this); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 result.
  T scalar() const { return value()(0, 0); }

private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records dense-matrix operations for a single reverse sweep.
///
/// Nodes are appended in evaluation order, so the reverse of insertion order
/// is a valid topological order for the backward pass. Sparse operands are
/// held by pointer and must outlive backward().
template <typename T>
class Tape {
public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> variable(Matrix<T> value) { return push(std::move(value), true, nullptr); }
  Var<T> constant(Matrix<T> value) { return push(std::move(value), false, nullptr); }

  /// Appends an op result. `backward` reads the node's grad and accumulates
  /// into its inputs via accumulate().
  Var<T> record(Matrix<T> value, bool needs_grad, Backward backward) {
    if (!all_finite(value)) {
      throw NumericError("non-finite value produced on tape (node " +
                         std::to_string(nodes_.size()) + ")");
    }
    return push(std::move(value), needs_grad, needs_grad ? std::move(backward) : nullptr);
  }

  const Matrix<T>& value(Var<T> v) const { return nodes_.at(v.id()).value; }

  const Matrix<T>& grad(Var<T> v) const {
    const Node& n = nodes_.at(v.id());
    if (!n.needs_grad) {
      throw ValidationError("gradient requested for a constant");
    }
    if (!backward_done_) {
      throw ValidationError("gradient requested before backward()");
    }
    return n.grad;
  }

  bool needs_grad(Var<T> v) const { return nodes_.at(v.id()).needs_grad; }

  /// Gradient buffer of an input during the backward sweep.
  Matrix<T>& grad_buffer(std::size_t id) { return nodes_[id].grad; }
  const Matrix<T>& grad_of(std::size_t id) const { return nodes_[id].grad; }
  const Matrix<T>& value_of(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad_of(std::size_t id) const { return nodes_[id].needs_grad; }

  void backward(Var<T> output) {
    if (backward_done_) {
      throw ValidationError("backward() called twice without reset()");
    }
    const Node& out = nodes_.at(output.id());
    if (out.value.rows() != 1 || out.value.cols() != 1) {
      throw DimensionError("backward() requires a scalar output, got " + out.value.shape());
    }
    for (Node& n : nodes_) {
      if (n.needs_grad) {
        n.grad = Matrix<T>(n.value.rows(), n.value.cols());
      }
    }
    backward_done_ = true;
    if (!out.needs_grad) {
      return;
    }
    nodes_[output.id()].grad(0, 0) = T(1);
    for (std::size_t i = output.id() + 1; i-- > 0;) {
      if (nodes_[i].backward) {
        nodes_[i].backward(*this, i);
      }
    }
  }

  void reset() {
    nodes_.clear();
    backward_done_ = false;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    bool needs_grad = false;
    Backward backward;
  };

  Var<T> push(Matrix<T> value, bool needs_grad, Backward backward) {
    if (backward_done_) {
      throw ValidationError("tape already differentiated; reset() before recording");
    }
    nodes_.push_back(Node{std::move(value), {}, needs_grad, std::move(backward)});
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

namespace detail {

template <typename T>
void require_same_tape(Var<T> a, Var<T> b) {
  if (&a.tape() != &b.tape()) {
    throw ValidationError("operands recorded on different tapes");
  }
}

template <typename T>
void require_same_shape(const char* op, const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

template <typename T>
void add_into(Matrix<T>& dst, const Matrix<T>& src, T factor = T(1)) {
  auto& d = dst.data();
  const auto& s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] += factor * s[i];
  }
}

} // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b);
  Tape<T>& t = a.tape();
  Matrix<T> out;
  gemm(a.value(), false, b.value(), false, out);
  const std::size_t ia = a.id(), ib = b.id();
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.record(std::move(out), ng, [ia, ib](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_of(self);
    if (tp.needs_grad_of(ia)) {
      gemm(g, false, tp.value_of(ib), true, tp.grad_buffer(ia), true);
    }
    if (tp.needs_grad_of(ib)) {
      gemm(tp.value_of(ia), true, g, false, tp.grad_buffer(ib), true);
    }
  });
}

/// Constant sparse operand times a recorded dense matrix.
template <typename T>
Var<T> spmm(const CsrMatrix<T>& s, Var<T> d) {
  Tape<T>& t = d.tape();
  Matrix<T> out = mplex::spmm(s, d.value());
  const std::size_t id = d.id();
  const CsrMatrix<T>* sp = &s;
  return t.record(std::move(out), t.needs_grad(d), [sp, id](Tape<T>& tp, std::size_t self) {
    spmm_transposed_accumulate(*sp, tp.grad_of(self), tp.grad_buffer(id));
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape("add", a.value(), b.value());
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  detail::add_into(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                  [ia, ib](Tape<T>& tp, std::size_t self) {
                    if (tp.needs_grad_of(ia)) detail::add_into(tp.grad_buffer(ia), tp.grad_of(self));
                    if (tp.needs_grad_of(ib)) detail::add_into(tp.grad_buffer(ib), tp.grad_of(self));
                  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape("sub", a.value(), b.value());
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  detail::add_into(out, b.value(), T(-1));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                  [ia, ib](Tape<T>& tp, std::size_t self) {
                    if (tp.needs_grad_of(ia)) detail::add_into(tp.grad_buffer(ia), tp.grad_of(self));
                    if (tp.needs_grad_of(ib))
                      detail::add_into(tp.grad_buffer(ib), tp.grad_of(self), T(-1));
                  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  for (T& v : out.data()) v *= factor;
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia, factor](Tape<T>& tp, std::size_t self) {
    detail::add_into(tp.grad_buffer(ia), tp.grad_of(self), factor);
  });
}

/// 1 - a, elementwise.
template <typename T>
Var<T> one_minus(Var<T> a) {
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  for (T& v : out.data()) v = T(1) - v;
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    detail::add_into(tp.grad_buffer(ia), tp.grad_of(self), T(-1));
  });
}

template <typename T>
Var<T> hadamard(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape("hadamard", a.value(), b.value());
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  const auto& bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                  [ia, ib](Tape<T>& tp, std::size_t self) {
                    const auto& g = tp.grad_of(self).data();
                    if (tp.needs_grad_of(ia)) {
                      auto& ga = tp.grad_buffer(ia).data();
                      const auto& vb = tp.value_of(ib).data();
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                    }
                    if (tp.needs_grad_of(ib)) {
                      auto& gb = tp.grad_buffer(ib).data();
                      const auto& va = tp.value_of(ia).data();
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                    }
                  });
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  for (T& v : out.data()) v = sigmoid_scalar(v);
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.grad_of(self).data();
    const auto& y = tp.value_of(self).data();
    auto& ga = tp.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

/// Natural log. Entries must be strictly positive.
template <typename T>
Var<T> log(Var<T> a) {
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  for (T& v : out.data()) {
    if (!(v > T(0))) {
      throw NumericError("log of non-positive entry " + std::to_string(v));
    }
    v = std::log(v);
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.grad_of(self).data();
    const auto& x = tp.value_of(ia).data();
    auto& ga = tp.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

/// Clamp into [lo, hi]. Gradient is zero where the clamp is active.
template <typename T>
Var<T> clamp(Var<T> a, T lo, T hi) {
  Tape<T>& t = a.tape();
  Matrix<T> out = a.value();
  for (T& v : out.data()) v = std::clamp(v, lo, hi);
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia, lo, hi](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.grad_of(self).data();
    const auto& x = tp.value_of(ia).data();
    auto& ga = tp.grad_buffer(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    }
  });
}

/// PReLU with a learnable 1x1 slope shared by all entries.
template <typename T>
Var<T> prelu(Var<T> a, Var<T> slope) {
  detail::require_same_tape(a, slope);
  if (slope.rows() != 1 || slope.cols() != 1) {
    throw DimensionError("prelu slope must be 1x1, got " + slope.value().shape());
  }
  Tape<T>& t = a.tape();
  const T s = slope.scalar();
  Matrix<T> out = a.value();
  for (T& v : out.data()) {
    if (v <= T(0)) v *= s;
  }
  const std::size_t ia = a.id(), is = slope.id();
  return t.record(std::move(out), t.needs_grad(a) || t.needs_grad(slope),
                  [ia, is](Tape<T>& tp, std::size_t self) {
                    const auto& g = tp.grad_of(self).data();
                    const auto& x = tp.value_of(ia).data();
                    const T sv = tp.value_of(is)(0, 0);
                    if (tp.needs_grad_of(ia)) {
                      auto& ga = tp.grad_buffer(ia).data();
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > T(0) ? g[i] : sv * g[i];
                    }
                    if (tp.needs_grad_of(is)) {
                      T acc = 0;
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        if (x[i] <= T(0)) acc += g[i] * x[i];
                      }
                      tp.grad_buffer(is)(0, 0) += acc;
                    }
                  });
}

template <typename T>
Matrix<T> softmax_rows_value(const Matrix<T>& x) {
  Matrix<T> out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    T mx = row.empty() ? T(0) : *std::max_element(row.begin(), row.end());
    T sum = 0;
    for (T& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (T& v : row) v /= sum;
  }
  return out;
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  Tape<T>& t = a.tape();
  Matrix<T> out = softmax_rows_value(a.value());
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_of(self);
    const Matrix<T>& y = tp.value_of(self);
    Matrix<T>& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto gr = g.row(r);
      auto yr = y.row(r);
      T dot = 0;
      for (std::size_t j = 0; j < yr.size(); ++j) dot += gr[j] * yr[j];
      auto gar = ga.row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) gar[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Var<T> frobenius_sq(Var<T> a) {
  Tape<T>& t = a.tape();
  Matrix<T> out(1, 1, frobenius_norm_sq(a.value()));
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    detail::add_into(tp.grad_buffer(ia), tp.value_of(ia), T(2) * tp.grad_of(self)(0, 0));
  });
}

template <typename T>
Var<T> trace(Var<T> a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("trace of non-square matrix " + a.value().shape());
  }
  Tape<T>& t = a.tape();
  T s = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a.value()(i, i);
  const std::size_t ia = a.id();
  return t.record(Matrix<T>(1, 1, s), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    Matrix<T>& ga = tp.grad_buffer(ia);
    const T g = tp.grad_of(self)(0, 0);
    for (std::size_t i = 0; i < ga.rows(); ++i) ga(i, i) += g;
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  Tape<T>& t = a.tape();
  const std::size_t ia = a.id();
  return t.record(mplex::transpose(a.value()), t.needs_grad(a),
                  [ia](Tape<T>& tp, std::size_t self) {
                    detail::add_into(tp.grad_buffer(ia), mplex::transpose(tp.grad_of(self)));
                  });
}

/// out row k = a row index[k]. Indices may repeat; gradients scatter-add.
template <typename T>
Var<T> row_gather(Var<T> a, std::span<const std::size_t> index) {
  Tape<T>& t = a.tape();
  const Matrix<T>& av = a.value();
  Matrix<T> out(index.size(), av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= av.rows()) {
      throw DimensionError("row_gather index " + std::to_string(index[k]) + " out of range for " +
                           av.shape());
    }
    std::copy(av.row(index[k]).begin(), av.row(index[k]).end(), out.row(k).begin());
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return t.record(std::move(out), t.needs_grad(a),
                  [ia, idx = std::move(idx)](Tape<T>& tp, std::size_t self) {
                    const Matrix<T>& g = tp.grad_of(self);
                    Matrix<T>& ga = tp.grad_buffer(ia);
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                      auto src = g.row(k);
                      auto dst = ga.row(idx[k]);
                      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                    }
                  });
}

template <typename T>
Var<T> reduce_sum(Var<T> a) {
  Tape<T>& t = a.tape();
  T s = 0;
  for (T v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return t.record(Matrix<T>(1, 1, s), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const T g = tp.grad_of(self)(0, 0);
    for (T& v : tp.grad_buffer(ia).data()) v += g;
  });
}

/// Column-wise concatenation of equal-height matrices.
template <typename T>
Var<T> hconcat(std::span<const Var<T>> parts) {
  if (parts.empty()) {
    throw DimensionError("hconcat of zero operands");
  }
  Tape<T>& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  bool ng = false;
  for (const auto& p : parts) {
    detail::require_same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw DimensionError("hconcat row mismatch: " + p.value().shape());
    }
    cols += p.cols();
    ng = ng || t.needs_grad(p);
  }
  Matrix<T> out(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix<T>& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    }
    off += v.cols();
    ids.push_back(p.id());
  }
  return t.record(std::move(out), ng, [ids = std::move(ids)](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_of(self);
    std::size_t o = 0;
    for (std::size_t id : ids) {
      const std::size_t c = tp.value_of(id).cols();
      if (tp.needs_grad_of(id)) {
        Matrix<T>& gi = tp.grad_buffer(id);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t j = 0; j < c; ++j) gi(r, j) += g(r, o + j);
        }
      }
      o += c;
    }
  });
}

template <typename T>
Var<T> hconcat(std::initializer_list<Var<T>> parts) {
  return hconcat(std::span<const Var<T>>(parts.begin(), parts.size()));
}

/// out[i, :] = a[i, 0] * b[i, :]; `a` is a column vector.
template <typename T>
Var<T> scale_rows(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b);
  if (a.cols() != 1 || a.rows() != b.rows()) {
    throw DimensionError("scale_rows expects a column of height " + std::to_string(b.rows()) +
                         ", got " + a.value().shape());
  }
  Tape<T>& t = a.tape();
  Matrix<T> out = b.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const T s = a.value()(r, 0);
    for (T& v : out.row(r)) v *= s;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), t.needs_grad(a) || t.needs_grad(b),
                  [ia, ib](Tape<T>& tp, std::size_t self) {
                    const Matrix<T>& g = tp.grad_of(self);
                    const Matrix<T>& av = tp.value_of(ia);
                    const Matrix<T>& bv = tp.value_of(ib);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      auto gr = g.row(r);
                      if (tp.needs_grad_of(ia)) {
                        T acc = 0;
                        auto br = bv.row(r);
                        for (std::size_t j = 0; j < gr.size(); ++j) acc += gr[j] * br[j];
                        tp.grad_buffer(ia)(r, 0) += acc;
                      }
                      if (tp.needs_grad_of(ib)) {
                        auto gb = tp.grad_buffer(ib).row(r);
                        for (std::size_t j = 0; j < gr.size(); ++j) gb[j] += av(r, 0) * gr[j];
                      }
                    }
                  });
}

/// Row sums as a column vector.
template <typename T>
Var<T> row_sum(Var<T> a) {
  Tape<T>& t = a.tape();
  const Matrix<T>& av = a.value();
  Matrix<T> out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    T s = 0;
    for (T v : av.row(r)) s += v;
    out(r, 0) = s;
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_of(self);
    Matrix<T>& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      for (T& v : ga.row(r)) v += g(r, 0);
    }
  });
}

/// Column means broadcast to every row (1/n * 1 1^T a).
template <typename T>
Var<T> mean_rows_broadcast(Var<T> a) {
  Tape<T>& t = a.tape();
  const Matrix<T>& av = a.value();
  const std::size_t n = av.rows();
  std::vector<T> mean(av.cols(), T(0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < av.cols(); ++j) mean[j] += av(r, j);
  }
  for (T& m : mean) m /= static_cast<T>(n);
  Matrix<T> out(n, av.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(mean.begin(), mean.end(), out.row(r).begin());
  const std::size_t ia = a.id();
  return t.record(std::move(out), t.needs_grad(a), [ia](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_of(self);
    Matrix<T>& ga = tp.grad_buffer(ia);
    const std::size_t rows = g.rows();
    std::vector<T> colsum(g.cols(), T(0));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) colsum[j] += g(r, j);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < g.cols(); ++j) ga(r, j) += colsum[j] / static_cast<T>(rows);
    }
  });
}

} // namespace mplex::ad
