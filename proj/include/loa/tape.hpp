#pragma once

// Reverse-mode differentiation over matrix-valued nodes. Vectors are n×1
// nodes and scalars are 1×1 nodes. A tape is single-writer: record and
// differentiate on one thread; independent tapes may run concurrently.

#include <cstddef>
#include <span>
#include <vector>

#include "loa/numerics.hpp"

namespace loa::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1×1 node.
  double scalar() const;

  Tape* tape() const noexcept { return tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op {
  Leaf,
  Constant,
  Add,
  Sub,
  Neg,
  ScaleConst,
  Scale,
  MatMul,
  Transpose,
  Dot,
  Outer,
  Relu,
  Log1p,
  Reciprocal,
  Hadamard,
  MeanRows,
  BroadcastRows,
  ConcatCols,
  Column,
  Sum,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  Var leaf(const Vector& value);
  /// Input that never receives an adjoint.
  Var constant(Matrix value);
  Var constant(const Vector& value);
  /// Constant copy of the current value of v; gradient flow stops here.
  Var detach(const Var& v);

  /// Adjoints of the 1×1 node `output` with respect to each leaf in
  /// `params`. Leaves not reachable from output get zero adjoints.
  std::vector<Matrix> grad(const Var& output, std::span<const Var> params);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  Var record(Op op, Matrix value, const Var& a, const Var& b = {}, double c = 0.0,
             std::size_t index = 0);

 private:
  struct Node {
    Op op = Op::Leaf;
    int a = -1;
    int b = -1;
    double c = 0.0;
    std::size_t index = 0;
    bool needs_grad = false;
    Matrix value;
  };

  void check_owner(const Var& v) const;
  void backprop(const Node& node, const Matrix& g, std::vector<Matrix>& adj) const;

  std::vector<Node> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double s, const Var& a);
/// Scalar-times-tensor product; one side must be 1×1.
Var operator*(const Var& a, const Var& b);

Var matmul(const Var& a, const Var& b);
inline Var matvec(const Var& m, const Var& v) { return matmul(m, v); }
Var transpose(const Var& a);
Var dot(const Var& a, const Var& b);
Var outer(const Var& u, const Var& v);
Var relu(const Var& a);
Var log1p(const Var& a);
Var reciprocal(const Var& a);
Var hadamard(const Var& a, const Var& b);
Var mean_rows(const Var& a);
Var broadcast_rows(const Var& row, std::size_t n);
Var concat_cols(const Var& a, const Var& b);
Var column(const Var& a, std::size_t j);
Var sum(const Var& a);

inline double value_of(const Var& s) { return s.scalar(); }
/// Plain copy of a column node.
Vector plain(const Var& v);
/// Column nodes already serve as vectors.
inline const Var& as_vector(const Var& v) { return v; }

}  // namespace loa::ad
