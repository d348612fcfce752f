#include "loa/qn.hpp"

#include <cmath>
#include <cstdio>

namespace loa {

BbInit bb_init(const Vector& x_prev, const Vector& x0, const Vector& g_prev, const Vector& g0) {
  const Vector dg = g0 - g_prev;
  const Vector d = x0 - x_prev;
  const double dg2 = dot(dg, dg);
  if (!(std::sqrt(dg2) >= 1e-30))
    throw StationaryStartError("gradient difference of the initialization pair vanishes");
  BbInit out;
  out.gamma_bb = dot(dg, d) / dg2;
  out.negative = out.gamma_bb <= 0;
  out.b = (0.8 * std::abs(out.gamma_bb)) * Matrix::identity(x0.size());
  return out;
}

Matrix stack_features(const Vector& a, const Vector& b, const Vector& c) {
  const Vector cols[] = {a, b, c};
  return hstack(cols);
}

State qn_initial_state(const Problem& problem) {
  const Vector g_prev = problem.gradient(problem.x_prev);
  const BbInit bb = bb_init(problem.x_prev, problem.x0, g_prev, problem.gradient(problem.x0));
  if (bb.negative)
    std::fprintf(stderr, "warning: %s: negative initial Barzilai-Borwein step, using its magnitude\n",
                 problem.label.c_str());
  State s;
  s.set("x_prev", problem.x_prev, Role::PointLike);
  s.set("g_prev", g_prev, Role::GradientLike);
  s.set("B", bb.b);
  return s;
}

namespace {

AlgorithmSpec qn_spec(std::string name, std::function<Vector(const Matrix&)> model, double gamma,
                      const LineSearchConfig& ls, const UpdateGuards& guards) {
  if (!(gamma > 0)) throw UsageError("step size must be positive");
  if (!(guards.curvature_tol > 0)) throw UsageError("curvature tolerance must be positive");
  if (ls.enabled) ls.validate();
  AlgorithmSpec s;
  s.name = std::move(name);
  s.input_width = 3;
  s.hyper = {{"gamma", gamma}};
  s.b_label = "B";
  s.initial_state = [](const Problem& p, const Hyper&) { return qn_initial_state(p); };
  s.oracle = [](const Problem&, const Point& p, const State& st, const Hyper& h) {
    const auto f = qn_features(st.mat("B"), p.x, p.grad, st.vec("x_prev"), st.vec("g_prev"), h.at("gamma"));
    if (!all_finite(f.dg)) throw EvalError("non-finite gradient");
    return model_input(f);
  };
  s.model = std::move(model);
  s.update = [ls, guards](const Problem& prob, const Point& p, const Matrix&, const Vector& y, const State& st,
                          const Hyper& h) {
    const double gamma = h.at("gamma");
    const auto f = qn_features(st.mat("B"), p.x, p.grad, st.vec("x_prev"), st.vec("g_prev"), gamma);
    auto [b, skipped] = qn_update(st.mat("B"), f, p.x, y, guards);
    Step step;
    step.skipped_update = skipped;
    if (ls.enabled) {
      const Vector dir = -matvec(b, p.grad);
      step.step_size = search_or_smallest(prob.objective, p.x, p.f, p.grad, dir, ls);
      step.delta = step.step_size * dir;
    } else {
      step.step_size = gamma;
      step.delta = qn_step(b, p.grad, gamma);
    }
    step.scratch.set("B", std::move(b));
    return step;
  };
  s.storage = [](State& st, const Point& p, const Matrix&, const Vector&, const Step& step) {
    st.set("x_prev", p.x, Role::PointLike);
    st.set("g_prev", p.grad, Role::GradientLike);
    st.set("B", step.scratch.mat("B"));
  };
  return s;
}

}  // namespace

AlgorithmSpec bfgs_spec(double gamma, const LineSearchConfig& ls, const UpdateGuards& guards) {
  return qn_spec("bfgs", [](const Matrix& input) { return column(input, 1); }, gamma, ls, guards);
}

AlgorithmSpec loa_bfgs_spec(std::shared_ptr<const ModelWeights> weights, double gamma, const LineSearchConfig& ls,
                            const UpdateGuards& guards) {
  weights->validate();
  return qn_spec("loa-bfgs", [weights](const Matrix& input) { return forward(*weights, input); }, gamma, ls,
                 guards);
}

Trajectory run_learned(const Problem& problem, const ModelWeights& weights, int k, double gamma,
                       const LineSearchConfig& ls) {
  const auto spec = loa_bfgs_spec(std::make_shared<const ModelWeights>(weights), gamma, ls);
  return run(spec, problem, k);
}

}  // namespace loa
