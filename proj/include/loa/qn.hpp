#pragma once

// The learned quasi-Newton iteration. Features, the rank-two update and the
// iterate step are templates over plain values (Vector/Matrix/double) and
// tape nodes, so the training tape replays exactly the same arithmetic as
// the plain runner.

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "loa/baselines.hpp"
#include "loa/framework.hpp"
#include "loa/model.hpp"
#include "loa/tape.hpp"

namespace loa {

struct BbInit {
  Matrix b;           // 0.8·|γ_BB|·I
  double gamma_bb = 0.0;
  bool negative = false;  // γ_BB ≤ 0 and its magnitude was used
};

/// γ_BB = ⟨Δg₀, d₀⟩/‖Δg₀‖². Throws StationaryStartError when ‖Δg₀‖ < 1e-30.
BbInit bb_init(const Vector& x_prev, const Vector& x0, const Vector& g_prev, const Vector& g0);

template <class Vec>
struct QnFeatures {
  Vec b_dg;  // B_{k−1}Δg_k
  Vec d;     // x_k − x_{k−1}
  Vec dg;    // ∇f(x_k) − ∇f(x_{k−1})
  Vec dir;   // −γB_{k−1}∇f(x_k)
};

template <class Mat, class Vec>
QnFeatures<Vec> qn_features(const Mat& b_prev, const Vec& x, const Vec& g, const Vec& x_prev,
                            const Vec& g_prev, double gamma) {
  Vec dg = g - g_prev;
  Vec d = x - x_prev;
  Vec b_dg = matvec(b_prev, dg);
  Vec dir = (-gamma) * matvec(b_prev, g);
  return {std::move(b_dg), std::move(d), std::move(dg), std::move(dir)};
}

Matrix stack_features(const Vector& a, const Vector& b, const Vector& c);
inline ad::Var stack_features(const ad::Var& a, const ad::Var& b, const ad::Var& c) {
  return concat_cols(concat_cols(a, b), c);
}

template <class Vec>
auto model_input(const QnFeatures<Vec>& f) {
  return stack_features(f.b_dg, f.d, f.dir);
}

/// B_k = B + (1/⟨Δg,y⟩)[r yᵀ + y rᵀ − (⟨Δg,r⟩/⟨Δg,y⟩) y yᵀ], r = d − BΔg.
/// Returns B unchanged (and true) when |⟨Δg,y⟩| ≤ tol·‖Δg‖‖y‖ or when the
/// step is below the resolution of x.
template <class Mat, class Vec>
std::pair<Mat, bool> qn_update(const Mat& b_prev, const QnFeatures<Vec>& f, const Vec& x, const Vec& y,
                               const UpdateGuards& guards) {
  if (norm(plain(f.d)) <= guards.resolution_tol * norm(plain(x))) return {b_prev, true};
  auto dgy = dot(f.dg, y);
  const double c = value_of(dgy);
  const double scale = norm(plain(f.dg)) * norm(plain(y));
  if (!(std::abs(c) > guards.curvature_tol * scale)) return {b_prev, true};
  const Vec r = f.d - f.b_dg;
  auto inv = reciprocal(dgy);
  auto coef = dot(f.dg, r) * inv;
  auto ry = outer(r, y);
  Mat b = b_prev + inv * (ry + transpose(ry) - coef * outer(y, y));
  if (guards.symmetrize) b = 0.5 * (b + transpose(b));
  return {std::move(b), false};
}

template <class Mat, class Vec>
Vec qn_step(const Mat& b, const Vec& g, double gamma) {
  return (-gamma) * matvec(b, g);
}

/// The learned method as a runnable AlgorithmSpec; `weights` must outlive its
/// use (it is shared).
AlgorithmSpec loa_bfgs_spec(std::shared_ptr<const ModelWeights> weights, double gamma = 1.0,
                            const LineSearchConfig& ls = {}, const UpdateGuards& guards = {});

/// Initial quasi-Newton state {x_prev, g_prev, B} from the problem's
/// initialization pair.
State qn_initial_state(const Problem& problem);

Trajectory run_learned(const Problem& problem, const ModelWeights& weights, int k, double gamma = 1.0,
                       const LineSearchConfig& ls = {});

}  // namespace loa
