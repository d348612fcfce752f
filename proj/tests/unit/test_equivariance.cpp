#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "loa/equivariance.hpp"
#include "loa/qn.hpp"

using namespace loa;
using Kind = ProblemTransform::Kind;
using loa_test::seeded_quadratic;

TEST_CASE("heavy ball is translation equivariant with fixed step") {
  const Problem p = seeded_quadratic(3, 1);
  const auto t = ProblemTransform::translation(Vector{2.0, -1.0, 0.5});
  const auto r = check_equivariance(heavy_ball_spec(0.5, 1.0 / *p.lipschitz), t, p, 20, 1e-9, false);
  CHECK(r.pass);
  CHECK(r.max_rel_iterate_dev <= 1e-9);
}

TEST_CASE("heavy ball needs λ²γ under geometric scaling") {
  const Problem p = seeded_quadratic(3, 2);
  const auto t = ProblemTransform::geometric_scale(3.0);
  const auto spec = heavy_ball_spec(0.5, 1.0 / *p.lipschitz);
  const auto fixed = check_equivariance(spec, t, p, 20, 1e-8, false);
  CHECK(!fixed.pass);
  CHECK(fixed.max_rel_iterate_dev > 1e-3);
  const auto adapted = check_equivariance(spec, t, p, 20, 1e-8, true);
  CHECK(adapted.gamma_adapted);
  CHECK(adapted.pass);
}

TEST_CASE("step-size adaptation rules") {
  const Hyper h = {{"gamma", 0.1}, {"alpha", 0.5}};
  CHECK(adapt_hyper("gd", h, ProblemTransform::geometric_scale(3.0))->at("gamma") == doctest::Approx(0.9));
  CHECK(adapt_hyper("hb", h, ProblemTransform::function_scale(4.0))->at("gamma") == doctest::Approx(0.025));
  CHECK(adapt_hyper("adam", h, ProblemTransform::geometric_scale(3.0))->at("gamma") == doctest::Approx(0.3));
  CHECK(!adapt_hyper("bfgs", h, ProblemTransform::geometric_scale(3.0)));
  CHECK(!adapt_hyper("gd", h, ProblemTransform::translation(Vector(2))));
}

TEST_CASE("learned method passes geometric scaling with fixed step") {
  Rng rng(3);
  const ModelWeights w = init_near_coincident(rng);
  const Problem p = seeded_quadratic(3, 4);
  const auto spec = loa_bfgs_spec(std::make_shared<const ModelWeights>(w));
  CHECK(check_equivariance(spec, ProblemTransform::geometric_scale(10.0), p, 20, 1e-8, false).pass);
}

TEST_CASE("deviations of T and T⁻¹ agree within a factor of two") {
  Rng rng(5);
  const Problem p = seeded_quadratic(4, 6);
  for (const auto& t : {ProblemTransform::geometric_scale(3.0), ProblemTransform::orthogonal(random_orthogonal(rng, 4))}) {
    const double a = check_equivariance(adam_spec(0.9, 0.999, 0.1, 0.0), t, p, 20, 1e-8, false).max_rel_iterate_dev;
    const double b =
        check_equivariance(adam_spec(0.9, 0.999, 0.1, 0.0), t.inverse(), p, 20, 1e-8, false).max_rel_iterate_dev;
    INFO(to_string(t.kind));
    CHECK(a <= 2 * b);
    CHECK(b <= 2 * a);
  }
}

TEST_CASE("value residual is bounded by the iterate deviation") {
  Rng rng(7);
  const Problem p = seeded_quadratic(3, 8);
  const auto t = ProblemTransform::orthogonal(random_orthogonal(rng, 3));
  const auto spec = adam_spec(0.9, 0.999, 0.1, 0.0);
  const auto r = check_equivariance(spec, t, p, 20, 1e-8, false);
  const Trajectory base = run(spec, p, 20);
  double gmax = 0;
  for (double g : base.grad_norms) gmax = std::max(gmax, g);
  double fmax = 0, xmax = 0;
  for (std::size_t k = 0; k < base.f_values.size(); ++k) {
    fmax = std::max(fmax, std::abs(base.f_values[k]));
    xmax = std::max(xmax, norm(t.apply_point(base.iterates[k])));
  }
  // absolute value residual ≤ 10 · absolute iterate deviation · max gradient
  CHECK(r.max_rel_value_dev * fmax <= 10 * r.max_rel_iterate_dev * xmax * gmax);
}

TEST_CASE("failed runs report infinite deviation with a diagnostic") {
  const Problem p = seeded_quadratic(3, 9);
  const auto r = check_equivariance(gd_spec(100.0 / *p.lipschitz), ProblemTransform::geometric_scale(2.0), p, 2000,
                                    1e-8, false);
  CHECK(!r.pass);
  CHECK(std::isinf(r.max_rel_iterate_dev));
  CHECK(!r.diagnostic.empty());
}

TEST_CASE("default table matches the published one") {
  const Table1 t = build_table1();
  CHECK(t.matches_expected());
  CHECK(t.at("adam", Kind::Orthogonal).value == Cell::Fail);
  CHECK(t.at("loa-bfgs", Kind::Orthogonal).value == Cell::Fail);
  CHECK(t.at("gd", Kind::GeometricScale).value == Cell::PassWithAdaptedGamma);
  CHECK(t.at("newton", Kind::Orthogonal).value == Cell::Pass);
  const std::string md = table1_markdown(t);
  CHECK(md.find("| loa-bfgs |") != std::string::npos);
}

TEST_CASE("corrupted ADAM breaks the table") {
  Table1Options o;
  o.corrupt_adam = true;
  const Table1 t = build_table1(o);
  CHECK(!t.matches_expected());
  CHECK(t.at("adam", Kind::Orthogonal).value == Cell::Pass);
}

TEST_CASE("gradient descent below 2/L descends monotonically") {
  QuadraticSampling s;
  s.lambda_min_lo = 1.0;
  s.lambda_min_hi = 1.5;
  s.lambda_max_lo = 1.5;
  s.lambda_max_hi = 2.0;
  Rng rng(10);
  Problem p = gen_quadratic(10, rng, s);
  make_init_pair(p, rng);
  const double gamma = 1.9 / *p.lipschitz;
  const Trajectory t = run(gd_spec(gamma), p, 300);
  const Theorem2Verdict v = check_theorem2(t, *p.lipschitz, gamma);
  CHECK(v.hypotheses_met);
  CHECK(v.c == 1.0);
  CHECK(v.C == 1.0);
  CHECK(v.monotone);
  CHECK(v.final_grad_norm <= 1e-6);
}

TEST_CASE("gradient descent above 2/L on a stiff quadratic is not monotone") {
  Rng rng(11);
  Problem p = gen_quadratic(10, rng);
  make_init_pair(p, rng);
  const double gamma = 2.5 / *p.lipschitz;
  const Trajectory t = run(gd_spec(gamma), p, 100);
  const Theorem2Verdict v = check_theorem2(t, *p.lipschitz, gamma);
  CHECK(!v.hypotheses_met);
  CHECK(!v.monotone);
  CHECK(v.first_increase >= 0);
}

TEST_CASE("descent monitor needs eigenvalue data") {
  Trajectory t;
  t.f_values = {1.0, 0.5};
  t.grad_norms = {1.0, 0.5};
  CHECK_THROWS_AS(check_theorem2(t, 1.0, 1.0), CapabilityError);
}
