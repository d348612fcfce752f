#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loa/errors.hpp"
#include "loa/problems.hpp"

using namespace loa;

namespace {

Dataset dataset(Matrix a, Vector b) {
  Dataset d;
  d.features = std::move(a);
  d.labels = std::move(b);
  return d;
}

}  // namespace

TEST_CASE("generated quadratic vanishes at A⁻¹b and has the sampled spectrum") {
  Rng rng(1);
  QuadraticSampling s;
  for (int trial = 0; trial < 5; ++trial) {
    const Problem p = gen_quadratic(8, rng, s);
    const Quadratic& q = *p.quadratic;
    const Vector x = solve_lu(q.a, q.b);
    CHECK(p.objective(x) < 1e-20 * std::max(1.0, dot(q.b, q.b)));
    const SymEigen ea = sym_eigen(q.a);
    CHECK(ea.values[0] >= s.lambda_min_lo - 1e-10);
    CHECK(ea.values[7] <= s.lambda_max_hi + 1e-10);
    // Hessian AᵀA has condition number cond(A)²
    const SymEigen eh = sym_eigen(q.hessian());
    const double cond_a = ea.values[7] / ea.values[0];
    CHECK(eh.values[7] / eh.values[0] == doctest::Approx(cond_a * cond_a).epsilon(1e-8));
    CHECK(*p.lipschitz == doctest::Approx(eh.values[7]).epsilon(1e-10));
    CHECK(*p.f_star == 0.0);
  }
}

TEST_CASE("quadratic gradient matches finite differences") {
  Rng rng(2);
  const Problem p = gen_quadratic(6, rng);
  Rng r(3);
  CHECK(gradient_check(p, r) < 1e-6);
}

TEST_CASE("quadratics need at least two dimensions") {
  Rng rng(2);
  CHECK_THROWS_AS(gen_quadratic(1, rng), DimensionError);
}

TEST_CASE("synthetic logistic problem: shape, gradient and minimum") {
  Rng rng(4);
  const Problem p = gen_logistic_synthetic(50, 100, 1e-3, rng);
  CHECK(p.dim == 51);
  Rng r(5);
  CHECK(gradient_check(p, r) < 1e-5);
  const Vector x = random_normal(r, p.dim);
  CHECK(p.objective(x) >= *p.f_star);
  // a Newton refinement from the reference point cannot improve it noticeably
  CHECK(reference_minimum(p, Vector(p.dim)) == doctest::Approx(*p.f_star).epsilon(1e-12));
}

TEST_CASE("heavily regularized logistic problem has its minimizer near zero") {
  Rng rng(6);
  const Problem p = gen_logistic_synthetic(5, 20, 1e6, rng);
  // f(0) = (1/M)Σ log 2
  CHECK(p.objective(Vector(p.dim)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(*p.f_star == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("ridge on the identity") {
  const Matrix eye = Matrix::identity(2);
  const Problem p0 = make_ridge(dataset(eye, Vector{1.0, 1.0}), 0.0);
  CHECK(std::abs(*p0.f_star) < 1e-15);
  // f = ‖x − b‖² + ‖x‖², minimized at b/2 with value ½ + ½
  const Problem p2 = make_ridge(dataset(eye, Vector{1.0, 1.0}), 2.0);
  CHECK(*p2.f_star == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p2.objective(Vector{0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(norm(p2.gradient(Vector{0.5, 0.5})) < 1e-14);
  // independent oracle: a grid around the minimizer never goes lower
  for (double a = 0.3; a <= 0.7; a += 0.01)
    for (double b = 0.3; b <= 0.7; b += 0.01) CHECK(p2.objective(Vector{a, b}) >= *p2.f_star - 1e-15);
}

TEST_CASE("ridge gradient and singular unregularized system") {
  Rng rng(7);
  const Problem p = make_ridge(dataset(random_normal(rng, 30, 5), random_normal(rng, 30)), 0.5);
  Rng r(8);
  CHECK(gradient_check(p, r) < 1e-6);
  CHECK_THROWS_AS(make_ridge(dataset(Matrix(3, 2), Vector(3)), 0.0), SingularError);
}

TEST_CASE("init pair: x₀ − x₋₁ is a small step along −∇f(x₋₁)") {
  Rng rng(9);
  Problem p = gen_quadratic(5, rng);
  Rng r1(10), r2(10);
  make_init_pair(p, r1);
  const Vector d = p.x0 - p.x_prev;
  const Vector g = p.gradient(p.x_prev);
  CHECK(norm(d + 1e-3 * g) <= 1e-15 * norm(d) + 1e-18);
  Problem q = p;
  make_init_pair(q, r2);
  CHECK(norm(q.x0 - p.x0) == 0.0);
  CHECK(norm(q.x_prev - p.x_prev) == 0.0);
}

TEST_CASE("init pair at a stationary point does not move") {
  const Problem p0 = make_ridge(dataset(Matrix::identity(2), Vector{0.0, 0.0}), 1.0);
  Problem p = p0;
  p.gradient = [](const Vector& x) { return Vector(x.size()); };
  Rng r(1);
  make_init_pair(p, r);
  CHECK(norm(p.x0 - p.x_prev) == 0.0);
}

TEST_CASE("libsvm line with gaps") {
  std::istringstream in("+1 1:0.5 3:2.0\n");
  const Dataset d = parse_libsvm(in);
  REQUIRE(d.rows() == 1);
  REQUIRE(d.cols() == 3);
  CHECK(d.labels[0] == 1.0);
  CHECK(d.features(0, 0) == 0.5);
  CHECK(d.features(0, 1) == 0.0);
  CHECK(d.features(0, 2) == 2.0);
}

TEST_CASE("empty libsvm input gives an empty dataset") {
  std::istringstream in("");
  const Dataset d = parse_libsvm(in);
  CHECK(d.rows() == 0);
}

TEST_CASE("libsvm labels are remapped to 0/1 in sorted order") {
  std::istringstream a("-1 1:1\n+1 2:1\n-1 1:3\n");
  const Dataset d = parse_libsvm(a);
  CHECK(d.labels[0] == 0.0);
  CHECK(d.labels[1] == 1.0);
  std::istringstream b("1 1:1\n2 1:1\n");
  const Dataset e = parse_libsvm(b);
  CHECK(e.labels[0] == 0.0);
  CHECK(e.labels[1] == 1.0);
  std::istringstream c("1 1:1\n2 1:1\n3 1:1\n");
  CHECK_THROWS_AS(parse_libsvm(c), ParseError);
  std::istringstream raw("1.5 1:1\n2 1:1\n3 1:1\n");
  CHECK(parse_libsvm(raw, LabelMode::Raw).labels[0] == 1.5);
}

TEST_CASE("malformed libsvm lines report their line number") {
  for (const char* text : {"1 1:0.5\n1 x:2\n", "1 1:0.5\n1 3:1 2:1\n", "1 1:0.5\n1 0:1\n", "1 1:0.5\nabc 1:1\n",
                           "1 1:0.5\n1 2\n"}) {
    std::istringstream in(text);
    try {
      parse_libsvm(in);
      FAIL("expected a parse error for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("libsvm round trip is the identity on values") {
  Rng rng(11);
  Dataset d;
  d.features = random_normal(rng, 20, 7);
  for (std::size_t i = 0; i < 20; ++i) d.features(i, i % 7) = 0.0;
  for (std::size_t i = 0; i < 20; ++i) d.features(i, 6) = i % 2 ? 0.0 : d.features(i, 6);
  d.labels = Vector(20);
  for (std::size_t i = 0; i < 20; ++i) d.labels[i] = static_cast<double>(i % 2);
  std::stringstream s;
  serialize_libsvm(d, s);
  const Dataset e = parse_libsvm(s);
  REQUIRE(e.rows() == 20);
  REQUIRE(e.cols() == 7);
  for (std::size_t i = 0; i < d.features.size(); ++i) CHECK(e.features.data()[i] == d.features.data()[i]);
  for (std::size_t i = 0; i < 20; ++i) CHECK(e.labels[i] == d.labels[i]);
}

TEST_CASE("csv: header, target column and standardization") {
  std::istringstream in("a,b,c\n1,2,3\n3,2,5\n");
  const Dataset d = parse_csv_numeric(in, 2);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 2);
  CHECK(d.labels[0] == 3.0);
  CHECK(d.labels[1] == 5.0);
  CHECK(d.features(0, 0) == doctest::Approx(-1.0));
  CHECK(d.features(1, 0) == doctest::Approx(1.0));
  // the constant column is guarded to zeros
  CHECK(d.features(0, 1) == 0.0);
  CHECK(d.features(1, 1) == 0.0);
}

TEST_CASE("csv standardization invariants on random data") {
  Rng rng(12);
  std::stringstream s;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 4; ++j) s << 10 * rng.normal() + j << ',';
    s << rng.normal() << '\n';
  }
  const Dataset d = parse_csv_numeric(s, 4);
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 50; ++i) m += d.features(i, j);
    m /= 50;
    for (std::size_t i = 0; i < 50; ++i) v += (d.features(i, j) - m) * (d.features(i, j) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 50 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("csv errors") {
  std::istringstream ragged("1,2\n1,2,3\n");
  CHECK_THROWS_AS(parse_csv_numeric(ragged, 0), ParseError);
  std::istringstream text("1,2\nx,2\n");
  CHECK_THROWS_AS(parse_csv_numeric(text, 0), ParseError);
  std::istringstream narrow("1,2\n");
  CHECK_THROWS_AS(parse_csv_numeric(narrow, 5), ShapeError);
}

TEST_CASE("diabetes table has 442 rows and 10 features") {
  const auto path = std::filesystem::path(LOA_SOURCE_DIR) / "data" / "diabetes.csv";
  const Dataset d = load_dataset(path, "csv", 10, LabelMode::Raw);
  CHECK(d.rows() == 442);
  CHECK(d.cols() == 10);
  const Problem p = make_ridge(d, 1.0);
  Rng r(1);
  CHECK(gradient_check(p, r) < 1e-6);
}

TEST_CASE("missing dataset file is an I/O error") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.libsvm", "libsvm"), IoError);
}

TEST_CASE("manifest regenerates the same problems") {
  const std::string m = quadratic_suite_manifest(6, 3, 99, 2);
  const ProblemSet a = load_problem_manifest(m);
  const ProblemSet b = load_problem_manifest(m);
  REQUIRE(a.problems.size() == 6);
  CHECK(a.problems[0].label == "quadratic-n6-0.0");
  CHECK(a.problems[5].label == "quadratic-n6-2.1");
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(norm(a.problems[i].x0 - b.problems[i].x0) == 0.0);
    CHECK(max_abs(a.problems[i].quadratic->a - b.problems[i].quadratic->a) == 0.0);
  }
  // two initializations share the function
  CHECK(max_abs(a.problems[0].quadratic->a - a.problems[1].quadratic->a) == 0.0);
  CHECK(norm(a.problems[0].x0 - a.problems[1].x0) > 0.0);
  const ProblemSet c = load_problem_manifest(quadratic_suite_manifest(6, 3, 100, 2));
  CHECK(max_abs(a.problems[0].quadratic->a - c.problems[0].quadratic->a) > 0.0);
}

TEST_CASE("manifest with several kinds and relative dataset paths") {
  const std::string m = R"({"seed": 3, "problems": [
    {"kind": "quadratic", "n": 4, "count": 2, "lambda_min": [1, 2], "lambda_max": [2, 3]},
    {"kind": "logistic", "n": 3, "m_per_class": 10},
    {"kind": "ridge", "path": "data/diabetes.csv", "target_column": 10, "lambda": 1.0}]})";
  const ProblemSet s = load_problem_manifest(m, LOA_SOURCE_DIR);
  REQUIRE(s.problems.size() == 4);
  CHECK(s.problems[0].dim == 4);
  CHECK(*s.problems[0].lipschitz <= 9.0 + 1e-9);
  CHECK(s.problems[2].dim == 4);
  CHECK(s.problems[3].label == "ridge-diabetes-0");
  CHECK(s.problems[3].dim == 10);
}

TEST_CASE("bad manifests are format errors") {
  CHECK_THROWS_AS(load_problem_manifest("{"), FormatError);
  CHECK_THROWS_AS(load_problem_manifest(R"({"problems": 3})"), FormatError);
  CHECK_THROWS_AS(load_problem_manifest(R"({"problems": [{"kind": "cubic"}]})"), FormatError);
  CHECK_THROWS_AS(load_problem_manifest(R"({"problems": [{"kind": "quadratic"}]})"), FormatError);
}
