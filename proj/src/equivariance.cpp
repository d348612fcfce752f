#include "loa/equivariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "loa/baselines.hpp"
#include "loa/qn.hpp"

namespace loa {

using Kind = ProblemTransform::Kind;

std::optional<Hyper> adapt_hyper(const std::string& algorithm, const Hyper& hyper, const ProblemTransform& t) {
  const bool gradient_method = algorithm == "gd" || algorithm == "hb";
  const bool adam = algorithm == "adam" || algorithm == "adam-isotropic";
  Hyper h = hyper;
  if (t.kind == Kind::GeometricScale && gradient_method) {
    h.at("gamma") *= t.lambda * t.lambda;
    return h;
  }
  if (t.kind == Kind::GeometricScale && adam) {
    h.at("gamma") *= t.lambda;
    return h;
  }
  if (t.kind == Kind::FunctionScale && gradient_method) {
    h.at("gamma") /= t.lambda;
    return h;
  }
  return std::nullopt;
}

EquivarianceReport check_equivariance(const AlgorithmSpec& spec, const ProblemTransform& t, const Problem& problem,
                                      int k, double tol, bool adapt_gamma) {
  EquivarianceReport r;
  r.algorithm = spec.name;
  r.transform = t.kind;
  r.lambda = t.lambda;
  r.k_run = k;
  const double inf = std::numeric_limits<double>::infinity();
  try {
    const State s0 = spec.initial_state(problem, spec.hyper);
    const auto [tp, ts0] = transform_problem(t, problem, s0);
    Hyper th = spec.hyper;
    if (adapt_gamma) {
      if (auto h = adapt_hyper(spec.name, spec.hyper, t)) {
        th = *h;
        r.gamma_adapted = true;
      }
    }
    const Trajectory a = run(spec, problem, s0, k, spec.hyper);
    const Trajectory b = run(spec, tp, ts0, k, th);
    const double fscale = t.kind == Kind::FunctionScale ? t.lambda : 1.0;
    double dev = 0, scale = 0, vdev = 0, vscale = 0;
    for (std::size_t i = 0; i < a.iterates.size(); ++i) {
      const Vector tx = t.apply_point(a.iterates[i]);
      dev = std::max(dev, norm(tx - b.iterates[i]));
      scale = std::max(scale, norm(tx));
      vdev = std::max(vdev, std::abs(b.f_values[i] - fscale * a.f_values[i]));
      vscale = std::max(vscale, std::abs(fscale * a.f_values[i]));
    }
    r.max_rel_iterate_dev = scale > 0 ? dev / scale : dev;
    r.max_rel_value_dev = vscale > 0 ? vdev / vscale : vdev;
  } catch (const Error& e) {
    r.max_rel_iterate_dev = inf;
    r.max_rel_value_dev = inf;
    r.diagnostic = e.what();
  }
  r.pass = r.max_rel_iterate_dev <= tol;
  return r;
}

const char* to_string(Cell c) noexcept {
  switch (c) {
    case Cell::Pass: return "pass";
    case Cell::Fail: return "fail";
    case Cell::PassWithAdaptedGamma: return "pass_with_adapted_gamma";
    case Cell::Gray: return "gray";
  }
  return "unknown";
}

Cell expected_cell(const std::string& algorithm, Kind t) {
  if (algorithm == "gd" || algorithm == "hb")
    return t == Kind::GeometricScale || t == Kind::FunctionScale ? Cell::PassWithAdaptedGamma : Cell::Pass;
  if (algorithm == "adam") {
    if (t == Kind::Orthogonal) return Cell::Fail;
    if (t == Kind::GeometricScale) return Cell::PassWithAdaptedGamma;
    return Cell::Pass;
  }
  if (algorithm == "loa-bfgs") return t == Kind::Orthogonal ? Cell::Fail : Cell::Pass;
  return Cell::Pass;  // newton, bfgs
}

const Table1Entry& Table1::at(const std::string& algorithm, Kind t) const {
  for (const auto& e : entries)
    if (e.algorithm == algorithm && e.transform == t) return e;
  throw UsageError("no table entry for " + algorithm + "/" + to_string(t));
}

bool Table1::matches_expected() const {
  return std::all_of(entries.begin(), entries.end(), [](const Table1Entry& e) { return e.matches(); });
}

AlgorithmSpec table1_spec(const std::string& algorithm, const Problem& problem, const Table1Options& opts,
                          const ModelWeights& weights) {
  const double lip = problem.lipschitz.value_or(1.0);
  if (algorithm == "gd") return gd_spec(1.0 / lip);
  if (algorithm == "hb") return heavy_ball_spec(0.5, 1.0 / lip);
  if (algorithm == "newton") return newton_spec();
  if (algorithm == "bfgs") return bfgs_spec(1.0);
  if (algorithm == "adam") {
    AlgorithmSpec s = adam_spec(0.9, 0.999, 0.1, 0.0, opts.corrupt_adam);
    s.name = "adam";
    return s;
  }
  if (algorithm == "loa-bfgs") return loa_bfgs_spec(std::make_shared<const ModelWeights>(weights), 1.0);
  throw UsageError("unknown algorithm '" + algorithm + "'");
}

Table1 build_table1(const Table1Options& opts) {
  Table1 table;
  table.options = opts;
  table.algorithms = {"gd", "hb", "newton", "bfgs", "adam", "loa-bfgs"};
  table.transforms = {Kind::Translation, Kind::Permutation, Kind::Orthogonal, Kind::GeometricScale,
                      Kind::FunctionScale};
  const Rng root(opts.seed);
  Rng wr = root.substream("weights");
  const ModelWeights weights = opts.weights ? *opts.weights : init_near_coincident(wr);

  std::vector<Problem> problems;
  for (int i = 0; i < opts.problem_count; ++i) {
    Rng r = root.substream("problem", static_cast<std::uint64_t>(i));
    Problem p = gen_quadratic(opts.dim, r);
    p.label = "table-quadratic-" + std::to_string(i);
    make_init_pair(p, r);
    problems.push_back(std::move(p));
  }

  // The transforms are shared by every algorithm so rows are comparable.
  std::vector<std::vector<ProblemTransform>> transforms(table.transforms.size());
  for (int i = 0; i < opts.problem_count; ++i) {
    Rng r = root.substream("transform", static_cast<std::uint64_t>(i));
    transforms[0].push_back(ProblemTransform::translation(3.0 * random_normal(r, opts.dim)));
    std::vector<std::size_t> perm;
    do perm = random_permutation(r, opts.dim);
    while (std::is_sorted(perm.begin(), perm.end()));
    transforms[1].push_back(ProblemTransform::permutation(perm));
    transforms[2].push_back(ProblemTransform::orthogonal(random_orthogonal(r, opts.dim)));
  }

  for (const auto& algo : table.algorithms) {
    for (std::size_t ti = 0; ti < table.transforms.size(); ++ti) {
      const Kind kind = table.transforms[ti];
      Table1Entry e;
      e.algorithm = algo;
      e.transform = kind;
      e.expected = expected_cell(algo, kind);
      e.max_adapted_dev = std::numeric_limits<double>::quiet_NaN();

      std::vector<std::pair<std::size_t, ProblemTransform>> cases;
      for (std::size_t pi = 0; pi < problems.size(); ++pi) {
        if (kind == Kind::GeometricScale || kind == Kind::FunctionScale) {
          for (double l : opts.lambdas)
            cases.emplace_back(pi, kind == Kind::GeometricScale ? ProblemTransform::geometric_scale(l)
                                                                : ProblemTransform::function_scale(l));
        } else {
          cases.emplace_back(pi, transforms[ti][pi]);
        }
      }

      // A cell's deviation is the worst of its constituent runs.
      for (const auto& [pi, t] : cases) {
        const AlgorithmSpec spec = table1_spec(algo, problems[pi], opts, weights);
        auto r = check_equivariance(spec, t, problems[pi], opts.k, opts.pass_tol, false);
        e.max_fixed_dev = std::max(e.max_fixed_dev, r.max_rel_iterate_dev);
        e.reports.push_back(std::move(r));
      }
      if (e.max_fixed_dev <= opts.pass_tol) {
        e.value = Cell::Pass;
      } else if (e.max_fixed_dev > opts.fail_tol) {
        e.value = Cell::Fail;
        bool adapted_pass = true, any_rule = false;
        double worst = 0;
        for (const auto& [pi, t] : cases) {
          const AlgorithmSpec spec = table1_spec(algo, problems[pi], opts, weights);
          auto r = check_equivariance(spec, t, problems[pi], opts.k, opts.pass_tol, true);
          any_rule = any_rule || r.gamma_adapted;
          adapted_pass = adapted_pass && r.pass && r.gamma_adapted;
          worst = std::max(worst, r.max_rel_iterate_dev);
          e.reports.push_back(std::move(r));
        }
        if (any_rule) {
          e.max_adapted_dev = worst;
          if (adapted_pass) e.value = Cell::PassWithAdaptedGamma;
        }
      } else {
        e.value = Cell::Gray;
      }
      table.entries.push_back(std::move(e));
    }
  }
  return table;
}

namespace {

const char* mark(Cell c) {
  switch (c) {
    case Cell::Pass: return "✓";
    case Cell::Fail: return "✗";
    case Cell::PassWithAdaptedGamma: return "dep. Γ";
    case Cell::Gray: return "gray";
  }
  return "?";
}

}  // namespace

std::string table1_markdown(const Table1& t) {
  std::ostringstream out;
  out << "| algorithm |";
  for (auto k : t.transforms) out << ' ' << to_string(k) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < t.transforms.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& a : t.algorithms) {
    out << "| " << a << " |";
    for (auto k : t.transforms) {
      const auto& e = t.at(a, k);
      out << ' ' << mark(e.value);
      if (!e.matches()) out << " (expected " << mark(e.expected) << ')';
      out << " |";
    }
    out << '\n';
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "\nn = %zu, K = %d, %d problems, pass ≤ %.0e, fail > %.0e. %s\n", t.options.dim,
                t.options.k, t.options.problem_count, t.options.pass_tol, t.options.fail_tol,
                t.matches_expected() ? "All cells match." : "Some cells do not match.");
  out << buf;
  return out.str();
}

std::string table1_json(const Table1& t) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json cells = json::array();
  for (const auto& e : t.entries) {
    json reports = json::array();
    for (const auto& r : e.reports)
      reports.push_back({{"lambda", r.lambda},
                         {"k", r.k_run},
                         {"max_rel_iterate_dev", num(r.max_rel_iterate_dev)},
                         {"max_rel_value_dev", num(r.max_rel_value_dev)},
                         {"pass", r.pass},
                         {"gamma_adapted", r.gamma_adapted},
                         {"diagnostic", r.diagnostic}});
    cells.push_back({{"algorithm", e.algorithm},
                     {"transform", to_string(e.transform)},
                     {"value", to_string(e.value)},
                     {"expected", to_string(e.expected)},
                     {"match", e.matches()},
                     {"max_fixed_dev", num(e.max_fixed_dev)},
                     {"max_adapted_dev", num(e.max_adapted_dev)},
                     {"reports", std::move(reports)}});
  }
  json transforms = json::array();
  for (auto k : t.transforms) transforms.push_back(to_string(k));
  json j = {{"format", "loa-table1"},
            {"version", 1},
            {"config",
             {{"seed", t.options.seed},
              {"dim", t.options.dim},
              {"k", t.options.k},
              {"problem_count", t.options.problem_count},
              {"pass_tol", t.options.pass_tol},
              {"fail_tol", t.options.fail_tol},
              {"lambdas", t.options.lambdas},
              {"corrupt_adam", t.options.corrupt_adam}}},
            {"algorithms", t.algorithms},
            {"transforms", std::move(transforms)},
            {"cells", std::move(cells)},
            {"matches_expected", t.matches_expected()}};
  return j.dump(2);
}

Theorem2Verdict check_theorem2(const Trajectory& t, double lipschitz, double gamma) {
  if (t.b_eigen_bounds.empty()) throw CapabilityError("trajectory has no eigenvalue bounds");
  Theorem2Verdict v;
  v.c = std::numeric_limits<double>::infinity();
  v.C = -std::numeric_limits<double>::infinity();
  for (const auto& b : t.b_eigen_bounds) {
    v.c = std::min(v.c, b.min);
    v.C = std::max(v.C, b.max);
  }
  v.hypotheses_met = v.c > 0 && gamma <= 2.0 / (v.C * lipschitz);
  for (std::size_t k = 1; k < t.f_values.size(); ++k) {
    if (t.f_values[k] > t.f_values[k - 1] + 1e-12 * std::abs(t.f_values[k - 1])) {
      v.monotone = false;
      v.first_increase = static_cast<int>(k);
      break;
    }
  }
  v.final_grad_norm = t.grad_norms.back();
  v.min_grad_norm = *std::min_element(t.grad_norms.begin(), t.grad_norms.end());
  return v;
}

}  // namespace loa
