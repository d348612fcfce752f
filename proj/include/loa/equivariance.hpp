#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loa/framework.hpp"
#include "loa/model.hpp"

namespace loa {

struct EquivarianceReport {
  std::string algorithm;
  ProblemTransform::Kind transform = ProblemTransform::Kind::Translation;
  double lambda = 1.0;
  int k_run = 0;
  double max_rel_iterate_dev = 0.0;
  double max_rel_value_dev = 0.0;
  bool pass = false;
  bool gamma_adapted = false;
  std::string diagnostic;  // set when a run diverged or failed
};

/// Step-size rule that restores equivariance for algorithms whose
/// hyper-parameters are not scale-free: λ²γ (gradient methods) or λγ (ADAM)
/// under geometric scaling, γ/λ (gradient methods) under function scaling.
/// nullopt when the algorithm has no such rule for this transform.
std::optional<Hyper> adapt_hyper(const std::string& algorithm, const Hyper& hyper, const ProblemTransform& t);

/// Runs the algorithm on the problem and on its transform side by side. Iterates
/// are compared as max_k ‖T(x_k) − x̂_k‖ / max_k ‖T(x_k)‖ (T is the identity
/// on iterates for function scaling); values as the same ratio on f̂(x̂_k)
/// against the scaled f(x_k).
EquivarianceReport check_equivariance(const AlgorithmSpec& spec, const ProblemTransform& t, const Problem& problem,
                                      int k, double tol, bool adapt_gamma);

enum class Cell { Pass, Fail, PassWithAdaptedGamma, Gray };
const char* to_string(Cell c) noexcept;

struct Table1Options {
  std::uint64_t seed = 0;
  std::size_t dim = 3;
  int k = 20;
  int problem_count = 3;
  double pass_tol = 1e-8;
  double fail_tol = 1e-3;
  std::vector<double> lambdas = {0.1, 10.0};
  /// Weights for the learned row; seeded init_near_coincident when absent.
  std::optional<ModelWeights> weights;
  /// Negative control: replaces ADAM by its isotropic-second-moment variant.
  bool corrupt_adam = false;
};

struct Table1Entry {
  std::string algorithm;
  ProblemTransform::Kind transform{};
  Cell value = Cell::Gray;
  Cell expected = Cell::Gray;
  double max_fixed_dev = 0.0;
  double max_adapted_dev = 0.0;  // NaN when the adapted runs were not needed
  std::vector<EquivarianceReport> reports;

  bool matches() const { return value == expected; }
};

struct Table1 {
  std::vector<std::string> algorithms;
  std::vector<ProblemTransform::Kind> transforms;
  std::vector<Table1Entry> entries;  // row-major over algorithms × transforms
  Table1Options options;

  const Table1Entry& at(const std::string& algorithm, ProblemTransform::Kind t) const;
  bool matches_expected() const;
};

/// Expected cells: the published summary of invariance properties.
Cell expected_cell(const std::string& algorithm, ProblemTransform::Kind t);

/// Specs and step sizes used per problem for the table.
AlgorithmSpec table1_spec(const std::string& algorithm, const Problem& problem, const Table1Options& opts,
                          const ModelWeights& weights);

Table1 build_table1(const Table1Options& opts = {});
std::string table1_markdown(const Table1& t);
std::string table1_json(const Table1& t);

struct Theorem2Verdict {
  bool hypotheses_met = false;
  double c = 0.0;  // min recorded eigenvalue of B_k
  double C = 0.0;  // max recorded eigenvalue of B_k
  bool monotone = true;
  int first_increase = -1;
  double final_grad_norm = 0.0;
  double min_grad_norm = 0.0;
};

/// With c > 0 and γ ≤ 2/(C·L) the iteration must not increase f (slack
/// 1e-12·|f|). Monotonicity is measured in all cases; hypotheses_met tells
/// whether it is implied. Throws CapabilityError without eigen data.
Theorem2Verdict check_theorem2(const Trajectory& t, double lipschitz, double gamma);

}  // namespace loa
