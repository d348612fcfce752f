#pragma once

#include <functional>

#include "loa/framework.hpp"

namespace loa {

struct LineSearchConfig {
  bool enabled = false;
  double shrink = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 30;
  double initial_trial = 1.0;

  void validate() const;
};

/// Largest t = initial·shrink^j, j ≤ max_backtracks, with
/// f(x + t·dir) ≤ f(x) + armijo·t·⟨∇f(x), dir⟩. Throws LineSearchFailure.
double backtracking_search(const std::function<double(const Vector&)>& f, const Vector& x, double fx,
                           const Vector& grad, const Vector& dir, const LineSearchConfig& ls);
/// backtracking_search, falling back to the smallest trial on failure.
double search_or_smallest(const std::function<double(const Vector&)>& f, const Vector& x, double fx,
                          const Vector& grad, const Vector& dir, const LineSearchConfig& ls);

// Hyper-parameter names: "gamma", "alpha", "beta1", "beta2", "eps".

AlgorithmSpec gd_spec(double gamma);
/// x_{k+1} = x_k + α(x_k − x_{k−1}) − γ∇f(x_k); x_{k−1} starts at the
/// problem's x₋₁.
AlgorithmSpec heavy_ball_spec(double alpha, double gamma);
/// Requires a Hessian. Cholesky solve, LU when the Hessian is indefinite.
AlgorithmSpec newton_spec(const LineSearchConfig& ls = {});
/// m_k = β₁m + (1−β₁)g, v²_k = β₂v² + (1−β₂)g⊙g, step −γ m/(√v² + ε), no
/// bias correction. `isotropic_second_moment` replaces g⊙g with ‖g‖²/n in
/// every coordinate; it exists only as a negative control for the
/// equivariance table.
AlgorithmSpec adam_spec(double beta1, double beta2, double gamma, double eps,
                        bool isotropic_second_moment = false);

struct UpdateGuards {
  double curvature_tol = 1e-10;
  /// The update is also skipped when ‖d_k‖ ≤ resolution_tol·‖x_k‖: the
  /// secant pair is then mostly rounding error.
  double resolution_tol = 1e-10;
  bool symmetrize = true;
};

/// Classical BFGS: the learned quasi-Newton method with prediction y_k = d_k.
AlgorithmSpec bfgs_spec(double gamma = 1.0, const LineSearchConfig& ls = {},
                        const UpdateGuards& guards = {});

}  // namespace loa
