#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loa/numerics.hpp"

namespace loa {

/// f(x) = scale·½‖Ax − b‖². Kept in closed form so the same objective can be
/// evaluated on plain values and recorded on a tape.
struct Quadratic {
  Matrix a;
  Matrix a_t;
  Vector b;
  double scale = 1.0;

  template <class Mat, class Vec>
  static auto value(const Mat& a, const Vec& b, double scale, const Vec& x) {
    const auto r = matvec(a, x) - b;
    return scale * (0.5 * dot(r, r));
  }

  template <class Mat, class Vec>
  static auto gradient(const Mat& a, const Mat& a_t, const Vec& b, double scale, const Vec& x) {
    return scale * matvec(a_t, matvec(a, x) - b);
  }

  double value(const Vector& x) const { return value(a, b, scale, x); }
  Vector gradient(const Vector& x) const { return gradient(a, a_t, b, scale, x); }
  Matrix hessian() const { return scale * matmul(a_t, a); }
};

/// An objective with its gradient oracle, an initialization pair
/// (x₋₁, x₀) and, when known, its minimum value.
struct Problem {
  std::string label;
  std::size_t dim = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;  // empty when unavailable
  Vector x_prev;
  Vector x0;
  std::optional<double> f_star;
  std::optional<double> lipschitz;  // largest Hessian eigenvalue, when known
  std::shared_ptr<const Quadratic> quadratic;

  bool has_hessian() const { return static_cast<bool>(hessian); }
  bool has_init() const { return x0.size() == dim && x_prev.size() == dim; }
};

struct QuadraticSampling {
  double lambda_min_lo = 0.1;
  double lambda_min_hi = 1.0;
  double lambda_max_lo = 1.0;
  double lambda_max_hi = 50.0;
  double b_lo = 0.0;
  double b_hi = 15.0;
};

struct Dataset {
  Matrix features;  // rows are samples
  Vector labels;
  std::size_t rows() const { return features.rows(); }
  std::size_t cols() const { return features.cols(); }
};

/// Random quadratic ½‖Ax − b‖² with A = PDPᵀ; f* = 0.
Problem gen_quadratic(std::size_t n, Rng& rng, const QuadraticSampling& sampling = {});
Problem make_quadratic(std::shared_ptr<const Quadratic> q, std::string label);

/// Two Gaussian clouds of m_per_class points in dimension n, with an
/// appended ones column: the variable has n + 1 coordinates.
Problem gen_logistic_synthetic(std::size_t n, std::size_t m_per_class, double eta, Rng& rng);
/// Mean logistic loss plus (eta/2)‖x‖² on a binary dataset; a ones column is
/// appended to the features.
Problem make_logistic(const Dataset& data, double eta, std::string label = "logistic");
/// ‖Ax − b‖² + (lambda/2)‖x‖² with f* from the normal equations.
Problem make_ridge(const Dataset& data, double lambda, std::string label = "ridge");

/// x₋₁ ~ N(0, I), x₀ = x₋₁ − step·∇f(x₋₁).
void make_init_pair(Problem& problem, Rng& rng, double step = 1e-3);

/// Damped Newton with Armijo backtracking; stops at ‖∇f‖ ≤ tol or when the
/// iterates stop improving. Returns the lowest objective value reached.
double reference_minimum(const Problem& problem, const Vector& start, double tol = 1e-12,
                         int max_iter = 200);

/// Largest relative deviation between the gradient oracle and central
/// differences over `points` random N(0, I) points.
double gradient_check(const Problem& problem, Rng& rng, int points = 5, double h = 1e-6);

enum class LabelMode { Binary, Raw };

Dataset parse_libsvm(std::istream& in, LabelMode mode = LabelMode::Binary);
void serialize_libsvm(const Dataset& data, std::ostream& out);
Dataset parse_csv_numeric(std::istream& in, std::size_t target_column);
/// format is "libsvm" or "csv"; target_column applies to csv only.
Dataset load_dataset(const std::filesystem::path& path, const std::string& format,
                     std::size_t target_column = 0, LabelMode mode = LabelMode::Binary);

/// A problem set regenerated deterministically from a JSON manifest.
struct ProblemSet {
  std::vector<Problem> problems;
  std::string manifest;  // normalized manifest JSON text
};

ProblemSet load_problem_manifest(const std::string& json_text,
                                 const std::filesystem::path& base_dir = {});
ProblemSet load_problem_manifest_file(const std::filesystem::path& path);
/// Manifest text for `count` quadratics of dimension n from a seed.
std::string quadratic_suite_manifest(std::size_t n, std::size_t count, std::uint64_t seed,
                                     std::size_t inits_per_function = 1);

}  // namespace loa
