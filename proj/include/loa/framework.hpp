#pragma once

// Generic iterative runner: at each iterate an oracle builds the input
// matrix, a model predicts, an update proposes a step, and a storage rule
// carries state to the next iteration.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loa/errors.hpp"
#include "loa/numerics.hpp"
#include "loa/problems.hpp"

namespace loa {

/// How a stored quantity transforms when the problem is transformed.
enum class Role {
  PointLike,
  GradientLike,
  GradientSquareLike,  // coordinate-wise squares of gradients
  InverseHessianLike,
};

const char* to_string(Role role) noexcept;

class State {
 public:
  void set(const std::string& label, Vector v, Role role);
  void set(const std::string& label, Matrix m, Role role = Role::InverseHessianLike);

  const Vector& vec(const std::string& label) const;
  const Matrix& mat(const std::string& label) const;
  bool has_vec(const std::string& label) const { return vectors_.count(label) != 0; }
  bool has_mat(const std::string& label) const { return matrices_.count(label) != 0; }
  Role role(const std::string& label) const;

  const std::map<std::string, Vector>& vectors() const { return vectors_; }
  const std::map<std::string, Matrix>& matrices() const { return matrices_; }

 private:
  std::map<std::string, Vector> vectors_;
  std::map<std::string, Matrix> matrices_;
  std::map<std::string, Role> roles_;
};

using Hyper = std::map<std::string, double>;
double hyper_or(const Hyper& h, const std::string& key, double fallback);

/// The current iterate with its objective value and gradient, evaluated
/// once per iteration by the runner.
struct Point {
  const Vector& x;
  double f;
  const Vector& grad;
};

struct Step {
  Vector delta;
  double step_size = 0.0;  // the scalar actually applied (after line search)
  bool skipped_update = false;
  State scratch;  // values the update computed for the storage rule
};

struct AlgorithmSpec {
  std::string name;
  std::size_t input_width = 0;  // columns of the oracle output, independent of n
  std::function<State(const Problem&, const Hyper&)> initial_state;
  std::function<Matrix(const Problem&, const Point&, const State&, const Hyper&)> oracle;
  std::function<Vector(const Matrix&)> model;
  std::function<Step(const Problem&, const Point&, const Matrix&, const Vector&, const State&,
                     const Hyper&)>
      update;
  std::function<void(State&, const Point&, const Matrix&, const Vector&, const Step&)> storage;
  Hyper hyper;
  /// State matrix whose spectrum is recorded, or empty. When
  /// identity_preconditioner is set the bounds (1, 1) are recorded instead.
  std::string b_label;
  bool identity_preconditioner = false;
};

struct EigenBound {
  int k = 0;
  double min = 0.0;
  double max = 0.0;
};

struct Trajectory {
  std::string problem;
  std::string algorithm;
  std::vector<Vector> iterates;
  std::vector<double> f_values;
  std::vector<double> grad_norms;
  std::vector<double> step_sizes;
  std::vector<EigenBound> b_eigen_bounds;
  std::vector<int> skipped_updates;
  std::vector<std::string> warnings;
  std::optional<double> f_star;
  double wall_time = 0.0;

  std::size_t steps() const { return step_sizes.size(); }
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trajectory partial)
      : Error(ErrorCode::Divergence, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Runs k_max iterations from problem.x0 and state s0.
Trajectory run(const AlgorithmSpec& spec, const Problem& problem, const State& s0, int k_max,
               const Hyper& hyper);
/// Same, with the AlgorithmSpec's own initial state and hyper-parameters.
Trajectory run(const AlgorithmSpec& spec, const Problem& problem, int k_max);

/// Eigen bounds are recorded every iteration for n ≤ 200, else every 10th.
bool records_eigen_at(std::size_t n, int k);

void write_trajectory_csv(const Trajectory& t, std::ostream& out, const std::string& metadata_json);

// ---- problem transforms ----

struct ProblemTransform {
  enum class Kind { Translation, Permutation, Orthogonal, GeometricScale, FunctionScale };
  Kind kind = Kind::Translation;
  Vector shift;                   // translation
  std::vector<std::size_t> perm;  // (Px)_i = x_{perm[i]}
  Matrix q;                       // orthogonal
  double lambda = 1.0;            // scalings

  static ProblemTransform translation(Vector v);
  static ProblemTransform permutation(std::vector<std::size_t> perm);
  static ProblemTransform orthogonal(Matrix q);
  static ProblemTransform geometric_scale(double lambda);
  static ProblemTransform function_scale(double lambda);

  /// Iterate map: x ↦ T(x). Identity for function scaling.
  Vector apply_point(const Vector& x) const;
  Vector apply_gradient(const Vector& g) const;
  Vector apply_gradient_square(const Vector& v) const;
  Matrix apply_inverse_hessian(const Matrix& b) const;
  ProblemTransform inverse() const;
  std::size_t dim() const;  // 0 when dimension-agnostic
};

const char* to_string(ProblemTransform::Kind kind) noexcept;

/// f̂ = f∘T⁻¹ (λf for function scaling), x̂₀ = T(x₀), and the state mapped
/// role by role. Throws RoleError for a role without a rule under T.
std::pair<Problem, State> transform_problem(const ProblemTransform& t, const Problem& problem,
                                            const State& s0);
Problem transform_problem(const ProblemTransform& t, const Problem& problem);

}  // namespace loa
