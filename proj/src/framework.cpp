#include "loa/framework.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace loa {

const char* to_string(Role role) noexcept {
  switch (role) {
    case Role::PointLike: return "point-like";
    case Role::GradientLike: return "gradient-like";
    case Role::GradientSquareLike: return "gradient-square-like";
    case Role::InverseHessianLike: return "inverse-hessian-like";
  }
  return "unknown";
}

void State::set(const std::string& label, Vector v, Role role) {
  if (role == Role::InverseHessianLike) throw RoleError("vector '" + label + "' cannot be inverse-hessian-like");
  vectors_[label] = std::move(v);
  roles_[label] = role;
}

void State::set(const std::string& label, Matrix m, Role role) {
  if (role != Role::InverseHessianLike) throw RoleError("matrix '" + label + "' must be inverse-hessian-like");
  matrices_[label] = std::move(m);
  roles_[label] = role;
}

const Vector& State::vec(const std::string& label) const {
  const auto it = vectors_.find(label);
  if (it == vectors_.end()) throw UsageError("state has no vector '" + label + "'");
  return it->second;
}

const Matrix& State::mat(const std::string& label) const {
  const auto it = matrices_.find(label);
  if (it == matrices_.end()) throw UsageError("state has no matrix '" + label + "'");
  return it->second;
}

Role State::role(const std::string& label) const {
  const auto it = roles_.find(label);
  if (it == roles_.end()) throw RoleError("state label '" + label + "' has no declared role");
  return it->second;
}

double hyper_or(const Hyper& h, const std::string& key, double fallback) {
  const auto it = h.find(key);
  return it == h.end() ? fallback : it->second;
}

bool records_eigen_at(std::size_t n, int k) { return n <= 200 || k % 10 == 0; }

Trajectory run(const AlgorithmSpec& spec, const Problem& problem, const State& s0, int k_max,
               const Hyper& hyper) {
  if (k_max < 1) throw UsageError("k_max must be at least 1");
  if (!problem.has_init()) throw UsageError("problem '" + problem.label + "' has no initialization pair");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = problem.dim;

  Trajectory t;
  t.problem = problem.label;
  t.algorithm = spec.name;
  t.f_star = problem.f_star;
  auto finish = [&] {
    t.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto diverge = [&](const std::string& what) {
    finish();
    throw DivergenceError(spec.name + " on " + problem.label + ": " + what, t);
  };

  State state = s0;
  Vector x = problem.x0;
  for (int k = 0;; ++k) {
    const double f = problem.objective(x);
    const Vector g = problem.gradient(x);
    t.iterates.push_back(x);
    t.f_values.push_back(f);
    t.grad_norms.push_back(norm(g));
    if (!std::isfinite(f) || !all_finite(x) || !all_finite(g))
      diverge("non-finite value at iterate " + std::to_string(k));

    if (records_eigen_at(n, k)) {
      if (spec.identity_preconditioner) {
        t.b_eigen_bounds.push_back({k, 1.0, 1.0});
      } else if (!spec.b_label.empty() && state.has_mat(spec.b_label)) {
        const Matrix& b = state.mat(spec.b_label);
        if (all_finite(b)) {
          const auto r = eigen_range(b);
          t.b_eigen_bounds.push_back({k, r.min, r.max});
        }
      }
    }
    if (k == k_max) break;

    const Point p{x, f, g};
    const Matrix input = spec.oracle(problem, p, state, hyper);
    if (input.rows() != n || input.cols() != spec.input_width)
      throw ShapeError(spec.name + " oracle produced " + std::to_string(input.rows()) + "x" +
                       std::to_string(input.cols()) + ", expected " + std::to_string(n) + "x" +
                       std::to_string(spec.input_width));
    const Vector y = spec.model ? spec.model(input) : Vector();
    Step step = spec.update(problem, p, input, y, state, hyper);
    if (step.skipped_update) t.skipped_updates.push_back(k);
    t.step_sizes.push_back(step.step_size);
    spec.storage(state, p, input, y, step);
    x = x + step.delta;
  }
  finish();
  return t;
}

Trajectory run(const AlgorithmSpec& spec, const Problem& problem, int k_max) {
  return run(spec, problem, spec.initial_state(problem, spec.hyper), k_max, spec.hyper);
}

void write_trajectory_csv(const Trajectory& t, std::ostream& out, const std::string& metadata_json) {
  out << "# " << metadata_json << '\n';
  out << "k,f,f_minus_fstar,grad_norm,bmin,bmax\n";
  std::size_t e = 0;
  char buf[256];
  for (std::size_t k = 0; k < t.f_values.size(); ++k) {
    while (e < t.b_eigen_bounds.size() && t.b_eigen_bounds[e].k < static_cast<int>(k)) ++e;
    const bool has_b = e < t.b_eigen_bounds.size() && t.b_eigen_bounds[e].k == static_cast<int>(k);
    const double gap = t.f_star ? t.f_values[k] - *t.f_star : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g", k, t.f_values[k], gap, t.grad_norms[k]);
    out << buf;
    if (has_b) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", t.b_eigen_bounds[e].min, t.b_eigen_bounds[e].max);
      out << buf << '\n';
    } else {
      out << ",,\n";
    }
  }
}

// ---- transforms ----

using Kind = ProblemTransform::Kind;

const char* to_string(Kind kind) noexcept {
  switch (kind) {
    case Kind::Translation: return "translation";
    case Kind::Permutation: return "permutation";
    case Kind::Orthogonal: return "orthogonal";
    case Kind::GeometricScale: return "geometric_scale";
    case Kind::FunctionScale: return "function_scale";
  }
  return "unknown";
}

ProblemTransform ProblemTransform::translation(Vector v) {
  ProblemTransform t;
  t.kind = Kind::Translation;
  t.shift = std::move(v);
  return t;
}

ProblemTransform ProblemTransform::permutation(std::vector<std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (auto i : perm) {
    if (i >= perm.size() || seen[i]) throw UsageError("not a permutation");
    seen[i] = true;
  }
  ProblemTransform t;
  t.kind = Kind::Permutation;
  t.perm = std::move(perm);
  return t;
}

ProblemTransform ProblemTransform::orthogonal(Matrix q) {
  if (q.rows() != q.cols()) throw ShapeError("orthogonal transform must be square");
  const Matrix qtq = matmul(transpose(q), q) - Matrix::identity(q.rows());
  if (max_abs(qtq) > 1e-10) throw UsageError("matrix is not orthogonal");
  ProblemTransform t;
  t.kind = Kind::Orthogonal;
  t.q = std::move(q);
  return t;
}

ProblemTransform ProblemTransform::geometric_scale(double lambda) {
  if (!(lambda > 0)) throw UsageError("scale must be positive");
  ProblemTransform t;
  t.kind = Kind::GeometricScale;
  t.lambda = lambda;
  return t;
}

ProblemTransform ProblemTransform::function_scale(double lambda) {
  ProblemTransform t = geometric_scale(lambda);
  t.kind = Kind::FunctionScale;
  return t;
}

std::size_t ProblemTransform::dim() const {
  switch (kind) {
    case Kind::Translation: return shift.size();
    case Kind::Permutation: return perm.size();
    case Kind::Orthogonal: return q.rows();
    default: return 0;
  }
}

namespace {

Vector permute(const std::vector<std::size_t>& perm, const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[perm[i]];
  return out;
}

Matrix permute_both(const std::vector<std::size_t>& perm, const Matrix& b) {
  Matrix out(b.rows(), b.cols());
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = b(perm[i], perm[j]);
  return out;
}

}  // namespace

Vector ProblemTransform::apply_point(const Vector& x) const {
  switch (kind) {
    case Kind::Translation: return x + shift;
    case Kind::Permutation: return permute(perm, x);
    case Kind::Orthogonal: return matvec(q, x);
    case Kind::GeometricScale: return lambda * x;
    case Kind::FunctionScale: return x;
  }
  return x;
}

Vector ProblemTransform::apply_gradient(const Vector& g) const {
  switch (kind) {
    case Kind::Translation: return g;
    case Kind::Permutation: return permute(perm, g);
    case Kind::Orthogonal: return matvec(q, g);
    case Kind::GeometricScale: return (1.0 / lambda) * g;
    case Kind::FunctionScale: return lambda * g;
  }
  return g;
}

Vector ProblemTransform::apply_gradient_square(const Vector& v) const {
  switch (kind) {
    case Kind::Translation: return v;
    case Kind::Permutation: return permute(perm, v);
    case Kind::Orthogonal:
      if (norm_inf(v) != 0.0)
        throw RoleError("coordinate-wise squared gradients have no orthogonal transformation rule");
      return v;
    case Kind::GeometricScale: return (1.0 / (lambda * lambda)) * v;
    case Kind::FunctionScale: return (lambda * lambda) * v;
  }
  return v;
}

Matrix ProblemTransform::apply_inverse_hessian(const Matrix& b) const {
  switch (kind) {
    case Kind::Translation: return b;
    case Kind::Permutation: return permute_both(perm, b);
    case Kind::Orthogonal: return matmul(matmul(q, b), transpose(q));
    case Kind::GeometricScale: return (lambda * lambda) * b;
    case Kind::FunctionScale: return (1.0 / lambda) * b;
  }
  return b;
}

ProblemTransform ProblemTransform::inverse() const {
  switch (kind) {
    case Kind::Translation: return translation(-shift);
    case Kind::Permutation: {
      std::vector<std::size_t> inv(perm.size());
      for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
      return permutation(std::move(inv));
    }
    case Kind::Orthogonal: return orthogonal(transpose(q));
    case Kind::GeometricScale: return geometric_scale(1.0 / lambda);
    case Kind::FunctionScale: return function_scale(1.0 / lambda);
  }
  return *this;
}

Problem transform_problem(const ProblemTransform& t, const Problem& problem) {
  const std::size_t td = t.dim();
  if (td != 0 && td != problem.dim)
    throw DimensionError("transform dimension " + std::to_string(td) + " does not match problem dimension " +
                         std::to_string(problem.dim));
  Problem p;
  p.label = problem.label + "/" + to_string(t.kind);
  p.dim = problem.dim;
  p.f_star = problem.f_star;
  p.lipschitz = problem.lipschitz;
  if (problem.has_init()) {
    p.x_prev = t.apply_point(problem.x_prev);
    p.x0 = t.apply_point(problem.x0);
  }
  const auto f = problem.objective;
  const auto g = problem.gradient;
  const auto h = problem.hessian;
  const ProblemTransform inv = t.inverse();

  switch (t.kind) {
    case Kind::FunctionScale: {
      const double l = t.lambda;
      p.objective = [f, l](const Vector& x) { return l * f(x); };
      p.gradient = [g, l](const Vector& x) { return l * g(x); };
      if (h) p.hessian = [h, l](const Vector& x) { return l * h(x); };
      if (p.f_star) *p.f_star *= l;
      if (p.lipschitz) *p.lipschitz *= l;
      break;
    }
    default: {
      // f̂(x̂) = f(T⁻¹x̂); ∇f̂ maps gradients forward, ∇²f̂ maps like a
      // Hessian: P H Pᵀ for rotations, H/λ² for scaling.
      p.objective = [f, inv](const Vector& x) { return f(inv.apply_point(x)); };
      p.gradient = [g, inv, t](const Vector& x) { return t.apply_gradient(g(inv.apply_point(x))); };
      if (h) {
        // Ĥ = M⁻ᵀ H M⁻¹ for T(x) = Mx + c: Q H Qᵀ for rotations, H/λ² for scaling.
        const ProblemTransform& conj = t.kind == Kind::GeometricScale ? inv : t;
        p.hessian = [h, inv, conj](const Vector& x) { return conj.apply_inverse_hessian(h(inv.apply_point(x))); };
      }
      if (t.kind == Kind::GeometricScale && p.lipschitz) *p.lipschitz /= t.lambda * t.lambda;
      break;
    }
  }

  if (problem.quadratic) {
    const Quadratic& q = *problem.quadratic;
    auto nq = std::make_shared<Quadratic>(q);
    switch (t.kind) {
      case Kind::Translation: nq->b = q.b + matvec(q.a, t.shift); break;
      case Kind::Permutation: {
        Matrix pm(q.a.cols(), q.a.cols());
        for (std::size_t i = 0; i < pm.rows(); ++i) pm(i, t.perm[i]) = 1.0;
        nq->a = matmul(q.a, transpose(pm));
        break;
      }
      case Kind::Orthogonal: nq->a = matmul(q.a, transpose(t.q)); break;
      case Kind::GeometricScale: nq->a = (1.0 / t.lambda) * q.a; break;
      case Kind::FunctionScale: nq->scale = q.scale * t.lambda; break;
    }
    nq->a_t = transpose(nq->a);
    p.quadratic = nq;
    // Closed forms keep the transformed objective tape-expressible and the
    // Hessian exact.
    std::shared_ptr<const Quadratic> cq = nq;
    p.objective = [cq](const Vector& x) { return cq->value(x); };
    p.gradient = [cq](const Vector& x) { return cq->gradient(x); };
    const Matrix hq = cq->hessian();
    p.hessian = [hq](const Vector&) { return hq; };
  }
  return p;
}

std::pair<Problem, State> transform_problem(const ProblemTransform& t, const Problem& problem,
                                            const State& s0) {
  Problem p = transform_problem(t, problem);
  State s;
  for (const auto& [label, v] : s0.vectors()) {
    switch (s0.role(label)) {
      case Role::PointLike: s.set(label, t.apply_point(v), Role::PointLike); break;
      case Role::GradientLike: s.set(label, t.apply_gradient(v), Role::GradientLike); break;
      case Role::GradientSquareLike:
        s.set(label, t.apply_gradient_square(v), Role::GradientSquareLike);
        break;
      default: throw RoleError("vector '" + label + "' has no transformation rule");
    }
  }
  for (const auto& [label, m] : s0.matrices()) {
    if (s0.role(label) != Role::InverseHessianLike)
      throw RoleError("matrix '" + label + "' has no transformation rule");
    s.set(label, t.apply_inverse_hessian(m));
  }
  return {std::move(p), std::move(s)};
}

}  // namespace loa
