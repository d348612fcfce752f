#include "loa/baselines.hpp"

#include <cmath>

#include "loa/qn.hpp"

namespace loa {

void LineSearchConfig::validate() const {
  if (!(shrink > 0 && shrink < 1)) throw UsageError("line search shrink must be in (0, 1)");
  if (!(armijo > 0 && armijo < 1)) throw UsageError("Armijo constant must be in (0, 1)");
  if (max_backtracks < 0) throw UsageError("max_backtracks must be nonnegative");
  if (!(initial_trial > 0)) throw UsageError("initial trial step must be positive");
}

double backtracking_search(const std::function<double(const Vector&)>& f, const Vector& x, double fx,
                           const Vector& grad, const Vector& dir, const LineSearchConfig& ls) {
  ls.validate();
  const double slope = dot(grad, dir);
  double t = ls.initial_trial;
  for (int j = 0; j <= ls.max_backtracks; ++j, t *= ls.shrink) {
    const double ft = f(x + t * dir);
    if (std::isfinite(ft) && ft <= fx + ls.armijo * t * slope) return t;
  }
  throw LineSearchFailure("no Armijo step after " + std::to_string(ls.max_backtracks) + " backtracks");
}

double search_or_smallest(const std::function<double(const Vector&)>& f, const Vector& x, double fx,
                          const Vector& grad, const Vector& dir, const LineSearchConfig& ls) {
  try {
    return backtracking_search(f, x, fx, grad, dir, ls);
  } catch (const LineSearchFailure&) {
    return ls.initial_trial * std::pow(ls.shrink, ls.max_backtracks);
  }
}

namespace {

void keep_nothing(State&, const Point&, const Matrix&, const Vector&, const Step&) {}

}  // namespace

AlgorithmSpec gd_spec(double gamma) {
  if (!(gamma > 0)) throw UsageError("step size must be positive");
  AlgorithmSpec s;
  s.name = "gd";
  s.input_width = 1;
  s.hyper = {{"gamma", gamma}};
  s.identity_preconditioner = true;
  s.initial_state = [](const Problem&, const Hyper&) { return State(); };
  s.oracle = [](const Problem&, const Point& p, const State&, const Hyper&) { return as_column(p.grad); };
  s.update = [](const Problem&, const Point& p, const Matrix&, const Vector&, const State&, const Hyper& h) {
    Step st;
    st.step_size = h.at("gamma");
    st.delta = (-st.step_size) * p.grad;
    return st;
  };
  s.storage = keep_nothing;
  return s;
}

AlgorithmSpec heavy_ball_spec(double alpha, double gamma) {
  if (!(alpha >= 0 && alpha < 1)) throw UsageError("momentum must be in [0, 1)");
  if (!(gamma > 0)) throw UsageError("step size must be positive");
  AlgorithmSpec s;
  s.name = "hb";
  s.input_width = 2;
  s.hyper = {{"alpha", alpha}, {"gamma", gamma}};
  s.initial_state = [](const Problem& p, const Hyper&) {
    State st;
    st.set("x_prev", p.x_prev, Role::PointLike);
    return st;
  };
  s.oracle = [](const Problem&, const Point& p, const State& st, const Hyper&) {
    const Vector cols[] = {p.x - st.vec("x_prev"), p.grad};
    return hstack(cols);
  };
  s.update = [](const Problem&, const Point& p, const Matrix& input, const Vector&, const State&,
                const Hyper& h) {
    Step st;
    st.step_size = h.at("gamma");
    st.delta = h.at("alpha") * column(input, 0) + (-st.step_size) * p.grad;
    return st;
  };
  s.storage = [](State& st, const Point& p, const Matrix&, const Vector&, const Step&) {
    st.set("x_prev", p.x, Role::PointLike);
  };
  return s;
}

AlgorithmSpec newton_spec(const LineSearchConfig& ls) {
  if (ls.enabled) ls.validate();
  AlgorithmSpec s;
  s.name = "newton";
  s.input_width = 2;
  s.initial_state = [](const Problem& p, const Hyper&) {
    if (!p.has_hessian()) throw CapabilityError("Newton's method needs a Hessian for " + p.label);
    return State();
  };
  s.oracle = [](const Problem& prob, const Point& p, const State&, const Hyper&) {
    if (!prob.has_hessian()) throw CapabilityError("Newton's method needs a Hessian for " + prob.label);
    const Matrix h = prob.hessian(p.x);
    Vector dir;
    try {
      dir = -solve_cholesky(h, p.grad);
    } catch (const SingularError&) {
      dir = -solve_lu(h, p.grad);
    }
    const Vector cols[] = {p.grad, dir};
    return hstack(cols);
  };
  s.update = [ls](const Problem& prob, const Point& p, const Matrix& input, const Vector&, const State&,
                  const Hyper&) {
    Step st;
    const Vector dir = column(input, 1);
    st.step_size = ls.enabled ? search_or_smallest(prob.objective, p.x, p.f, p.grad, dir, ls) : 1.0;
    st.delta = st.step_size == 1.0 ? dir : st.step_size * dir;
    return st;
  };
  s.storage = keep_nothing;
  return s;
}

AlgorithmSpec adam_spec(double beta1, double beta2, double gamma, double eps, bool isotropic_second_moment) {
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw UsageError("ADAM betas must be in [0, 1)");
  if (!(gamma > 0)) throw UsageError("step size must be positive");
  if (!(eps >= 0)) throw UsageError("ADAM epsilon must be nonnegative");
  AlgorithmSpec s;
  s.name = isotropic_second_moment ? "adam-isotropic" : "adam";
  s.input_width = 3;
  s.hyper = {{"beta1", beta1}, {"beta2", beta2}, {"gamma", gamma}, {"eps", eps}};
  s.initial_state = [](const Problem& p, const Hyper&) {
    State st;
    st.set("m", Vector(p.dim), Role::GradientLike);
    st.set("v2", Vector(p.dim), Role::GradientSquareLike);
    return st;
  };
  s.oracle = [isotropic_second_moment](const Problem&, const Point& p, const State& st, const Hyper& h) {
    const double b1 = h.at("beta1"), b2 = h.at("beta2");
    const std::size_t n = p.grad.size();
    Vector sq = hadamard(p.grad, p.grad);
    if (isotropic_second_moment) sq = Vector(n, dot(p.grad, p.grad) / static_cast<double>(n));
    const Vector cols[] = {p.grad, b1 * st.vec("m") + (1 - b1) * p.grad, b2 * st.vec("v2") + (1 - b2) * sq};
    return hstack(cols);
  };
  s.update = [](const Problem&, const Point&, const Matrix& input, const Vector&, const State&, const Hyper& h) {
    Step st;
    st.step_size = h.at("gamma");
    const double eps = h.at("eps");
    st.delta = Vector(input.rows());
    for (std::size_t i = 0; i < input.rows(); ++i) {
      const double m = input(i, 1), v2 = input(i, 2);
      const double denom = std::sqrt(v2) + eps;
      st.delta[i] = denom > 0 ? -st.step_size * m / denom : 0.0;
    }
    return st;
  };
  s.storage = [](State& st, const Point&, const Matrix& input, const Vector&, const Step&) {
    st.set("m", column(input, 1), Role::GradientLike);
    st.set("v2", column(input, 2), Role::GradientSquareLike);
  };
  return s;
}

}  // namespace loa
