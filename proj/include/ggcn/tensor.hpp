#pragma once

// Dense matrices with a reverse-mode gradient tape.
//
// A Tape owns every value produced during a forward pass. Var is a cheap
// handle (tape pointer + node index) and is only valid while its tape lives.
// Operations record a closure that pushes the upstream gradient into the
// parents that require it; Tape::backward replays those closures in reverse
// creation order, which is a valid topological order by construction.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/errors.hpp"

namespace ggcn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Accumulated gradient. Only meaningful after Tape::backward; zero-filled
  // for leaves that were never reached.
  const Matrix& grad() const;
  bool requires_grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    if (requires_grad) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
  }

  Var constant(Matrix value) { return leaf(std::move(value), false); }

  // Appends an op result. The node requires grad iff any parent does; in that
  // case `fn(tape, self)` is called during backward with grad(self) filled.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn) {
    bool needs = false;
    for (const Var& p : parents) {
      if (p.tape_ != this) throw ContractError("operand belongs to a different tape");
      needs = needs || nodes_[p.id_].requires_grad;
    }
    Node node;
    node.value = std::move(value);
    node.requires_grad = needs;
    if (needs) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
  }

  void backward(const Var& loss) {
    if (loss.tape_ != this) throw ContractError("loss belongs to a different tape");
    const Matrix& v = nodes_[loss.id_].value;
    if (v.rows() != 1 || v.cols() != 1) {
      throw ContractError("backward requires a scalar loss, got " +
                          detail::shape_str(v.rows(), v.cols()));
    }
    if (!nodes_[loss.id_].requires_grad) return;
    grad_mut(loss.id_)(0, 0) += 1.0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.requires_grad || !node.backward || node.grad.size() == 0) continue;
      node.backward(*this, i);
    }
  }

  void zero_grad() {
    for (Node& node : nodes_) {
      if (node.grad.size() != 0) node.grad.setZero();
    }
  }

  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  const Matrix& grad(std::size_t id) {
    return grad_mut(id);
  }

  // Adds `delta` into the gradient of `target` if it requires one.
  template <typename Expr>
  void accumulate(const Var& target, const Expr& delta) {
    if (!nodes_[target.id_].requires_grad) return;
    grad_mut(target.id_).noalias() += delta;
  }

  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Matrix& grad_mut(std::size_t id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    return node.grad;
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }
inline double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("scalar() on non-scalar " + detail::shape_str(v.rows(), v.cols()));
  }
  return v(0, 0);
}

namespace detail {

inline void same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                         " vs " + shape_str(b.rows(), b.cols()));
  }
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// ---- forward ops -----------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " +
                         detail::shape_str(a.rows(), a.cols()) + " x " +
                         detail::shape_str(b.rows(), b.cols()));
  }
  Matrix out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate(a, g * b.value().transpose());
    t.accumulate(b, a.value().transpose() * g);
  });
}

// a * b^T; used by the inner-product decoder.
inline Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts differ " +
                         detail::shape_str(a.rows(), a.cols()) + " vs " +
                         detail::shape_str(b.rows(), b.cols()));
  }
  Matrix out = a.value() * b.value().transpose();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate(a, g * b.value());
    t.accumulate(b, g.transpose() * a.value());
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::same_shape("add", a, b);
  Matrix out = a.value() + b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    t.accumulate(a, t.upstream(self));
    t.accumulate(b, t.upstream(self));
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::same_shape("sub", a, b);
  Matrix out = a.value() - b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    t.accumulate(a, t.upstream(self));
    t.accumulate(b, -t.upstream(self));
  });
}

// Elementwise (Hadamard) product.
inline Var mul(const Var& a, const Var& b) {
  detail::same_shape("mul", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate(a, g.cwiseProduct(b.value()));
    t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

inline Var scale(const Var& a, double s) {
  Matrix out = a.value() * s;
  return a.tape()->record(std::move(out), {a}, [a, s](Tape& t, std::size_t self) {
    t.accumulate(a, t.upstream(self) * s);
  });
}

inline Var add_scalar(const Var& a, double s) {
  Matrix out = a.value().array() + s;
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    t.accumulate(a, t.upstream(self));
  });
}

inline Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    t.accumulate(a, (a.value().array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

inline Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr(&detail::stable_sigmoid);
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    t.accumulate(a, t.upstream(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

inline Var exp(const Var& a) {
  Matrix out = a.value().array().exp();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    t.accumulate(a, t.upstream(self).cwiseProduct(t.value(self)));
  });
}

// Natural log of max(a, floor). Entries at or below the floor get zero
// gradient. floor = 0 gives the plain log.
inline Var log(const Var& a, double floor = 0.0) {
  Matrix out = a.value().cwiseMax(floor).array().log();
  return a.tape()->record(std::move(out), {a}, [a, floor](Tape& t, std::size_t self) {
    const auto x = a.value().array();
    const auto g = t.upstream(self).array();
    t.accumulate(a, (x > floor).select(g / x, 0.0).matrix());
  });
}

inline Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const double g = t.upstream(self)(0, 0);
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g));
  });
}

inline Var concat_rows(const Var& top, const Var& bottom) {
  if (top.cols() != bottom.cols()) {
    throw DimensionError("concat_rows: column counts differ " +
                         detail::shape_str(top.rows(), top.cols()) + " vs " +
                         detail::shape_str(bottom.rows(), bottom.cols()));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.value();
  out.bottomRows(bottom.rows()) = bottom.value();
  return top.tape()->record(std::move(out), {top, bottom},
                            [top, bottom](Tape& t, std::size_t self) {
                              const Matrix& g = t.upstream(self);
                              t.accumulate(top, g.topRows(top.rows()));
                              t.accumulate(bottom, g.bottomRows(bottom.rows()));
                            });
}

inline Var slice_rows(const Var& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         detail::shape_str(a.rows(), a.cols()));
  }
  Matrix out = a.value().middleRows(begin, count);
  return a.tape()->record(std::move(out), {a}, [a, begin, count](Tape& t, std::size_t self) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleRows(begin, count) = t.upstream(self);
    t.accumulate(a, full);
  });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace ggcn
