#include <doctest.h>

#include <cmath>

#include "loa/numerics.hpp"
#include "loa/tape.hpp"

using namespace loa;

namespace {

// Relative error between a tape gradient and central differences of f.
double gradient_error(const std::function<ad::Var(ad::Tape&, const ad::Var&)>& build, const Matrix& at) {
  ad::Tape tape;
  const ad::Var x = tape.leaf(at);
  const ad::Var out = build(tape, x);
  const ad::Var params[] = {x};
  const Matrix g = tape.grad(out, params)[0];
  double worst = 0;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double h = 1e-6;
    Matrix p = at, m = at;
    p.data()[i] += h;
    m.data()[i] -= h;
    ad::Tape tp, tm;
    const double fp = build(tp, tp.leaf(p)).scalar();
    const double fm = build(tm, tm.leaf(m)).scalar();
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::abs(fd - g.data()[i]) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace

TEST_CASE("square of a scalar has adjoint 2x") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(1, 1, 3.0));
  const ad::Var params[] = {x};
  CHECK(tape.grad(x * x, params)[0](0, 0) == 6.0);
}

TEST_CASE("linear form has its coefficient vector as adjoint") {
  ad::Tape tape;
  const Vector a{1.5, -2.0, 0.25};
  const ad::Var x = tape.leaf(Vector{0.3, 0.1, 7.0});
  const ad::Var params[] = {x};
  const Matrix g = tape.grad(dot(tape.constant(a), x), params)[0];
  for (std::size_t i = 0; i < 3; ++i) CHECK(g(i, 0) == a[i]);
}

TEST_CASE("every operation matches central differences") {
  Rng rng(1);
  const Matrix w = random_normal(rng, 4, 3);
  const Matrix c = random_normal(rng, 3, 2);
  auto check = [&](const char* name, auto build) {
    INFO(name);
    CHECK(gradient_error(build, w) < 1e-6);
  };
  check("matmul relu sum", [&](ad::Tape& t, const ad::Var& x) { return sum(relu(matmul(x, t.constant(c)))); });
  check("transpose hadamard", [&](ad::Tape&, const ad::Var& x) { return sum(hadamard(x, transpose(transpose(x)))); });
  check("mean rows broadcast", [&](ad::Tape&, const ad::Var& x) {
    return sum(hadamard(broadcast_rows(mean_rows(x), 4), x));
  });
  check("concat column", [&](ad::Tape&, const ad::Var& x) {
    const ad::Var y = concat_cols(x, 2.0 * x);
    return dot(column(y, 4), column(y, 1));
  });
  check("outer log1p reciprocal", [&](ad::Tape&, const ad::Var& x) {
    const ad::Var a = column(x, 0), b = column(x, 2);
    const ad::Var s = dot(a, a);
    return sum(outer(a, b)) * reciprocal(s + s) + log1p(s);
  });
  check("subtraction negation", [&](ad::Tape& t, const ad::Var& x) {
    const ad::Var y = -(x - t.constant(w));
    return sum(hadamard(y, y));
  });
}

TEST_CASE("forty gradient steps on a quadratic differentiate like central differences") {
  // L(x0) = f(x_40) where x_{k+1} = x_k − 0.05 ∇f(x_k), f = ½‖Ax − b‖²
  Rng rng(4);
  const Matrix a = random_normal(rng, 5, 5) + 3.0 * Matrix::identity(5);
  const Vector b = random_normal(rng, 5);
  const Matrix x0 = as_column(random_normal(rng, 5));
  auto build = [&](ad::Tape& t, const ad::Var& x) {
    const ad::Var am = t.constant(a), at = t.constant(transpose(a)), bv = t.constant(b);
    ad::Var xk = x;
    for (int k = 0; k < 40; ++k) xk = xk - 0.005 * matmul(at, matmul(am, xk) - bv);
    const ad::Var r = matmul(am, xk) - bv;
    return 0.5 * dot(r, r);
  };
  CHECK(gradient_error(build, x0) < 1e-5);
}

TEST_CASE("detach cuts the graph: gradient only through the path after the cut") {
  // y = x·x; z = detach(y)·x. dz/dx = y (treated constant) = x², not 3x².
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(1, 1, 2.0));
  const ad::Var y = x * x;
  const ad::Var z = tape.detach(y) * x;
  const ad::Var params[] = {x};
  CHECK(tape.grad(z, params)[0](0, 0) == 4.0);
  CHECK(z.scalar() == 8.0);
}

TEST_CASE("leaves not reachable from the output get zero adjoints") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(2, 1, 1.0));
  const ad::Var unused = tape.leaf(Matrix(3, 2, 1.0));
  const ad::Var params[] = {x, unused};
  const auto g = tape.grad(sum(x), params);
  CHECK(g[1].rows() == 3);
  CHECK(max_abs(g[1]) == 0.0);
}

TEST_CASE("plain and tape arithmetic produce the same bits") {
  Rng rng(8);
  const Matrix a = random_normal(rng, 6, 6);
  const Vector v = random_normal(rng, 6);
  ad::Tape tape;
  const ad::Var av = tape.constant(a), vv = tape.constant(v);
  const Vector plain_r = matvec(a, v) - 0.3 * v;
  const Vector tape_r = plain(matvec(av, vv) - 0.3 * vv);
  for (std::size_t i = 0; i < 6; ++i) CHECK(plain_r[i] == tape_r[i]);
  CHECK(dot(plain_r, v) == value_of(dot(matvec(av, vv) - 0.3 * vv, vv)));
}
