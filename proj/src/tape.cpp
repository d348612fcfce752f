#include "loa/tape.hpp"

#include <cmath>
#include <string>

#include "loa/errors.hpp"

namespace loa::ad {

namespace {

void accumulate(Matrix& slot, const Matrix& g) {
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

void accumulate_scaled(Matrix& slot, const Matrix& g, double s) {
  if (slot.size() == 0) slot = Matrix(g.rows(), g.cols());
  double* out = slot.data();
  const double* in = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) out[i] += s * in[i];
}

Tape* common_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw UsageError("tape: operation on an unrecorded variable");
  if (a.tape() != b.tape()) throw UsageError("tape: operands recorded on different tapes");
  return a.tape();
}

Tape* tape_of(const Var& a) {
  if (!a.valid()) throw UsageError("tape: operation on an unrecorded variable");
  return a.tape();
}

void require_shape(bool ok, const char* what) {
  if (!ok) throw ShapeError(std::string("tape: ") + what);
}

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw UsageError("tape: value of an unrecorded variable");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  require_shape(v.rows() == 1 && v.cols() == 1, "scalar() on a non-scalar node");
  return v(0, 0);
}

Vector plain(const Var& v) { return as_vector(v.value()); }

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{Op::Leaf, -1, -1, 0.0, 0, true, std::move(value)});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(const Vector& value) { return leaf(as_column(value)); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{Op::Constant, -1, -1, 0.0, 0, false, std::move(value)});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(const Vector& value) { return constant(as_column(value)); }

Var Tape::detach(const Var& v) {
  check_owner(v);
  return constant(v.value());
}

void Tape::check_owner(const Var& v) const {
  if (v.tape() != this) throw UsageError("tape: variable belongs to another tape");
}

Var Tape::record(Op op, Matrix value, const Var& a, const Var& b, double c, std::size_t index) {
  bool needs = false;
  int ia = -1;
  int ib = -1;
  if (a.valid()) {
    check_owner(a);
    ia = a.id();
    needs = needs || nodes_[static_cast<std::size_t>(ia)].needs_grad;
  }
  if (b.valid()) {
    check_owner(b);
    ib = b.id();
    needs = needs || nodes_[static_cast<std::size_t>(ib)].needs_grad;
  }
  nodes_.push_back(Node{op, ia, ib, c, index, needs, std::move(value)});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::vector<Matrix> Tape::grad(const Var& output, std::span<const Var> params) {
  check_owner(output);
  const Matrix& out = output.value();
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("grad: output is not a scalar node");
  for (const Var& p : params) {
    check_owner(p);
    if (nodes_[static_cast<std::size_t>(p.id())].op != Op::Leaf) {
      throw UsageError("grad: parameter was not recorded as a leaf");
    }
  }

  std::vector<Matrix> adj(nodes_.size());
  adj[static_cast<std::size_t>(output.id())] = Matrix(1, 1, 1.0);
  for (int id = output.id(); id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    Matrix& g = adj[static_cast<std::size_t>(id)];
    if (g.size() == 0 || !node.needs_grad) continue;
    if (node.op != Op::Leaf && node.op != Op::Constant) {
      backprop(node, g, adj);
      if (node.op != Op::Leaf) g = Matrix();
    }
  }

  std::vector<Matrix> result;
  result.reserve(params.size());
  for (const Var& p : params) {
    Matrix g = adj[static_cast<std::size_t>(p.id())];
    if (g.size() == 0) g = Matrix(p.rows(), p.cols());
    result.push_back(std::move(g));
  }
  return result;
}

void Tape::backprop(const Node& node, const Matrix& g, std::vector<Matrix>& adj) const {
  auto slot = [&](int id) -> Matrix* {
    if (id < 0 || !nodes_[static_cast<std::size_t>(id)].needs_grad) return nullptr;
    return &adj[static_cast<std::size_t>(id)];
  };
  auto val = [&](int id) -> const Matrix& { return nodes_[static_cast<std::size_t>(id)].value; };
  Matrix* da = slot(node.a);
  Matrix* db = slot(node.b);

  switch (node.op) {
    case Op::Leaf:
    case Op::Constant:
      break;
    case Op::Add:
      if (da) accumulate(*da, g);
      if (db) accumulate(*db, g);
      break;
    case Op::Sub:
      if (da) accumulate(*da, g);
      if (db) accumulate_scaled(*db, g, -1.0);
      break;
    case Op::Neg:
      if (da) accumulate_scaled(*da, g, -1.0);
      break;
    case Op::ScaleConst:
      if (da) accumulate_scaled(*da, g, node.c);
      break;
    case Op::Scale: {
      // a is the 1×1 factor, b the tensor.
      const Matrix& s = val(node.a);
      const Matrix& t = val(node.b);
      if (da) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g.data()[i] * t.data()[i];
        accumulate(*da, Matrix(1, 1, acc));
      }
      if (db) accumulate_scaled(*db, g, s(0, 0));
      break;
    }
    case Op::MatMul:
      if (da) accumulate(*da, matmul(g, transpose(val(node.b))));
      if (db) accumulate(*db, matmul(transpose(val(node.a)), g));
      break;
    case Op::Transpose:
      if (da) accumulate(*da, transpose(g));
      break;
    case Op::Dot: {
      const double s = g(0, 0);
      if (da) accumulate_scaled(*da, val(node.b), s);
      if (db) accumulate_scaled(*db, val(node.a), s);
      break;
    }
    case Op::Outer: {
      const Matrix& u = val(node.a);
      const Matrix& v = val(node.b);
      if (da) {
        Matrix du(u.rows(), 1);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * v(j, 0);
          du(i, 0) = s;
        }
        accumulate(*da, du);
      }
      if (db) {
        Matrix dv(v.rows(), 1);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) dv(j, 0) += g(i, j) * u(i, 0);
        accumulate(*db, dv);
      }
      break;
    }
    case Op::Relu:
      if (da) {
        const Matrix& x = val(node.a);
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] = x.data()[i] > 0.0 ? g.data()[i] : 0.0;
        accumulate(*da, d);
      }
      break;
    case Op::Log1p:
      if (da) {
        const Matrix& x = val(node.a);
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] = g.data()[i] / (1.0 + x.data()[i]);
        accumulate(*da, d);
      }
      break;
    case Op::Reciprocal:
      if (da) {
        const Matrix& y = node.value;
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] = -g.data()[i] * y.data()[i] * y.data()[i];
        accumulate(*da, d);
      }
      break;
    case Op::Hadamard: {
      const Matrix& x = val(node.a);
      const Matrix& y = val(node.b);
      if (da) {
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] = g.data()[i] * y.data()[i];
        accumulate(*da, d);
      }
      if (db) {
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] = g.data()[i] * x.data()[i];
        accumulate(*db, d);
      }
      break;
    }
    case Op::MeanRows:
      if (da) {
        const std::size_t n = val(node.a).rows();
        const double inv = 1.0 / static_cast<double>(n);
        Matrix d(n, g.cols());
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) = g(0, j) * inv;
        accumulate(*da, d);
      }
      break;
    case Op::BroadcastRows:
      if (da) {
        Matrix d(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) d(0, j) += g(i, j);
        accumulate(*da, d);
      }
      break;
    case Op::ConcatCols: {
      const std::size_t left = val(node.a).cols();
      const std::size_t right = val(node.b).cols();
      if (da) {
        Matrix d(g.rows(), left);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < left; ++j) d(i, j) = g(i, j);
        accumulate(*da, d);
      }
      if (db) {
        Matrix d(g.rows(), right);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < right; ++j) d(i, j) = g(i, left + j);
        accumulate(*db, d);
      }
      break;
    }
    case Op::Column:
      if (da) {
        const Matrix& x = val(node.a);
        Matrix d(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) d(i, node.index) = g(i, 0);
        accumulate(*da, d);
      }
      break;
    case Op::Sum:
      if (da) {
        const Matrix& x = val(node.a);
        accumulate(*da, Matrix(x.rows(), x.cols(), g(0, 0)));
      }
      break;
  }
}

// ---- recorded operations --------------------------------------------------

Var operator+(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  return t->record(Op::Add, a.value() + b.value(), a, b);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  return t->record(Op::Sub, a.value() - b.value(), a, b);
}

Var operator-(const Var& a) {
  Tape* t = tape_of(a);
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = -v.data()[i];
  return t->record(Op::Neg, std::move(v), a);
}

Var operator*(double s, const Var& a) {
  Tape* t = tape_of(a);
  return t->record(Op::ScaleConst, s * a.value(), a, {}, s);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const bool a_scalar = a.rows() == 1 && a.cols() == 1;
  const bool b_scalar = b.rows() == 1 && b.cols() == 1;
  require_shape(a_scalar || b_scalar, "product needs a 1x1 factor (use matmul or hadamard)");
  const Var& s = a_scalar ? a : b;
  const Var& x = a_scalar ? b : a;
  return t->record(Op::Scale, s.scalar() * x.value(), s, x);
}

Var matmul(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  return t->record(Op::MatMul, loa::matmul(a.value(), b.value()), a, b);
}

Var transpose(const Var& a) {
  Tape* t = tape_of(a);
  return t->record(Op::Transpose, loa::transpose(a.value()), a);
}

Var dot(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require_shape(x.rows() == y.rows() && x.cols() == y.cols(), "dot shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i] * y.data()[i];
  return t->record(Op::Dot, Matrix(1, 1, s), a, b);
}

Var outer(const Var& u, const Var& v) {
  Tape* t = common_tape(u, v);
  require_shape(u.cols() == 1 && v.cols() == 1, "outer expects column vectors");
  return t->record(Op::Outer, loa::outer(plain(u), plain(v)), u, v);
}

Var relu(const Var& a) {
  Tape* t = tape_of(a);
  return t->record(Op::Relu, loa::relu(a.value()), a);
}

Var log1p(const Var& a) {
  Tape* t = tape_of(a);
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::log1p(v.data()[i]);
  return t->record(Op::Log1p, std::move(v), a);
}

Var reciprocal(const Var& a) {
  Tape* t = tape_of(a);
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = 1.0 / v.data()[i];
  return t->record(Op::Reciprocal, std::move(v), a);
}

Var hadamard(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  require_shape(x.rows() == y.rows() && x.cols() == y.cols(), "hadamard shape mismatch");
  Matrix v(x.rows(), x.cols());
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = x.data()[i] * y.data()[i];
  return t->record(Op::Hadamard, std::move(v), a, b);
}

Var mean_rows(const Var& a) {
  Tape* t = tape_of(a);
  return t->record(Op::MeanRows, loa::mean_rows(a.value()), a);
}

Var broadcast_rows(const Var& row, std::size_t n) {
  Tape* t = tape_of(row);
  return t->record(Op::BroadcastRows, loa::broadcast_rows(row.value(), n), row);
}

Var concat_cols(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  return t->record(Op::ConcatCols, loa::concat_cols(a.value(), b.value()), a, b);
}

Var column(const Var& a, std::size_t j) {
  Tape* t = tape_of(a);
  return t->record(Op::Column, as_column(loa::column(a.value(), j)), a, {}, 0.0, j);
}

Var sum(const Var& a) {
  Tape* t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t->record(Op::Sum, Matrix(1, 1, s), a);
}

}  // namespace loa::ad
