#include "loa/training.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "loa/qn.hpp"
#include "loa/tape.hpp"

namespace loa {

void TrainConfig::validate() const {
  if (k_unroll < 1 || segment < 1 || k_unroll % segment != 0)
    throw UsageError("segment must divide the unroll length");
  if (batch_size < 1) throw UsageError("batch size must be positive");
  if (!(lr_fc > 0) || !(lr_skip > 0)) throw UsageError("learning rates must be positive");
  if (!(clip_norm > 0)) throw UsageError("clip norm must be positive");
  if (epochs < 0) throw UsageError("epochs must be nonnegative");
  if (!(gamma > 0)) throw UsageError("step size must be positive");
}

std::size_t ReferenceTable::valid_count() const {
  std::size_t c = 0;
  for (bool v : valid) c += v;
  return c;
}

ReferenceTable precompute_reference(const std::vector<Problem>& problems, int k, int segment, double gamma) {
  ReferenceTable ref;
  const auto spec = bfgs_spec(gamma);
  for (const auto& p : problems) {
    if (!p.f_star) throw UsageError("problem " + p.label + " has no reference minimum");
    std::vector<double> gaps;
    bool ok = true;
    try {
      const Trajectory t = run(spec, p, k);
      const double start_gap = t.f_values[0] - *p.f_star;
      for (int j = segment; j <= k; j += segment) {
        const double gap = t.f_values[static_cast<std::size_t>(j)] - *p.f_star;
        gaps.push_back(gap);
        if (!(gap > 1e-20 * std::max(start_gap, 0.0)) || !std::isfinite(gap)) ok = false;
      }
      if (!ok) ref.warnings.push_back(p.label + ": BFGS reference gap vanished; problem excluded");
    } catch (const DivergenceError& e) {
      ok = false;
      ref.warnings.push_back(p.label + ": BFGS reference diverged; problem excluded");
    }
    gaps.resize(static_cast<std::size_t>(k / segment), std::numeric_limits<double>::quiet_NaN());
    ref.gaps.push_back(std::move(gaps));
    ref.valid.push_back(ok);
  }
  return ref;
}

namespace {

struct PlainOps {
  using M = Matrix;
  using V = Vector;
  Matrix constant(const Matrix& m) { return m; }
  Vector constant(const Vector& v) { return v; }
  double scalar(double s) { return s; }
  template <class T>
  T detach(const T& t) { return t; }
};

struct TapeOps {
  using M = ad::Var;
  using V = ad::Var;
  ad::Tape& tape;
  ad::Var constant(const Matrix& m) { return tape.constant(m); }
  ad::Var constant(const Vector& v) { return tape.constant(v); }
  ad::Var scalar(double s) { return tape.constant(Matrix(1, 1, s)); }
  ad::Var detach(const ad::Var& v) { return tape.detach(v); }
};

// The learned iteration unrolled from the problem's initialization, with the
// same arithmetic as the plain runner.
template <class Ops>
auto unroll(Ops& ops, const LayerArray<typename Ops::M>& w, const Problem& p, const std::vector<double>& ref,
            const TrainConfig& cfg) {
  using M = typename Ops::M;
  using V = typename Ops::V;
  using std::log1p;
  if (!p.quadratic) throw CapabilityError("the unrolled loss needs a closed-form quadratic: " + p.label);
  if (!p.f_star) throw UsageError("problem " + p.label + " has no reference minimum");
  const Quadratic& q = *p.quadratic;
  const M a = ops.constant(q.a);
  const M at = ops.constant(q.a_t);
  const V b = ops.constant(q.b);
  const auto fs = ops.scalar(*p.f_star);

  const State s0 = qn_initial_state(p);
  V x_prev = ops.constant(s0.vec("x_prev"));
  V g_prev = ops.constant(s0.vec("g_prev"));
  M bm = ops.constant(s0.mat("B"));
  V x = ops.constant(p.x0);
  const UpdateGuards guards;

  decltype(ops.scalar(0.0)) total = ops.scalar(0.0);
  int count = 0;
  for (int k = 0; k < cfg.k_unroll; ++k) {
    V g = Quadratic::gradient(a, at, b, q.scale, x);
    const auto feats = qn_features(bm, x, g, x_prev, g_prev, cfg.gamma);
    const V y = as_vector(model_forward(w, model_input(feats)));
    auto [bn, skipped] = qn_update(bm, feats, x, y, guards);
    V xn = x + qn_step(bn, g, cfg.gamma);
    x_prev = std::move(x);
    g_prev = std::move(g);
    bm = std::move(bn);
    x = std::move(xn);
    if ((k + 1) % cfg.segment == 0) {
      const double r = ref[static_cast<std::size_t>((k + 1) / cfg.segment - 1)];
      const auto term = log1p((1.0 / r) * (Quadratic::value(a, b, q.scale, x) - fs));
      if (!std::isfinite(value_of(term))) throw NonFiniteLoss(k + 1);
      total = count == 0 ? term : total + term;
      ++count;
      x = ops.detach(x);
      x_prev = ops.detach(x_prev);
      g_prev = ops.detach(g_prev);
      bm = ops.detach(bm);
    }
  }
  return (1.0 / count) * total;
}

bool all_finite(const std::vector<Matrix>& ms) {
  for (const auto& m : ms)
    if (!loa::all_finite(m)) return false;
  return true;
}

}  // namespace

LossAndGrad unrolled_loss(const ModelWeights& w, const Problem& problem, const std::vector<double>& ref_gaps,
                          const TrainConfig& cfg) {
  ad::Tape tape;
  TapeOps ops{tape};
  LayerArray<ad::Var> vars;
  for (std::size_t i = 0; i < kLayerCount; ++i) vars[i] = tape.leaf(w.layers[i]);
  const ad::Var loss = unroll(ops, vars, problem, ref_gaps, cfg);
  LossAndGrad out;
  out.loss = loss.scalar();
  out.grad = tape.grad(loss, vars);
  return out;
}

double unrolled_loss_value(const ModelWeights& w, const Problem& problem, const std::vector<double>& ref_gaps,
                           const TrainConfig& cfg) {
  if (problem.quadratic) {
    PlainOps ops;
    return unroll(ops, w.layers, problem, ref_gaps, cfg);
  }
  // Any other objective: run the learned method and read the boundary values.
  const Trajectory t = run_learned(problem, w, cfg.k_unroll, cfg.gamma);
  double total = 0;
  int count = 0;
  for (int k = cfg.segment; k <= cfg.k_unroll; k += cfg.segment) {
    const double r = ref_gaps[static_cast<std::size_t>(k / cfg.segment - 1)];
    total = count == 0 ? std::log1p((1.0 / r) * (t.f_values[static_cast<std::size_t>(k)] - *problem.f_star))
                       : total + std::log1p((1.0 / r) * (t.f_values[static_cast<std::size_t>(k)] - *problem.f_star));
    ++count;
  }
  if (!std::isfinite(total)) throw NonFiniteLoss(cfg.k_unroll);
  return (1.0 / count) * total;
}

double mean_loss(const ModelWeights& w, const std::vector<Problem>& problems, const ReferenceTable& ref,
                 const TrainConfig& cfg) {
  double total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (!ref.valid[i]) continue;
    try {
      total += unrolled_loss_value(w, problems[i], ref.gaps[i], cfg);
    } catch (const NonFiniteLoss&) {
      return std::numeric_limits<double>::quiet_NaN();
    } catch (const DivergenceError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    ++count;
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(count);
}

namespace {

struct MetaAdam {
  LayerArray<Matrix> m, v;
  int t = 0;
  static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit MetaAdam(const ModelWeights& w) {
    for (std::size_t i = 0; i < kLayerCount; ++i) {
      m[i] = Matrix(w.layers[i].rows(), w.layers[i].cols());
      v[i] = m[i];
    }
  }

  void step(ModelWeights& w, const std::vector<Matrix>& g, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1 - std::pow(beta1, t), c2 = 1 - std::pow(beta2, t);
    for (std::size_t i = 0; i < kLayerCount; ++i) {
      const double lr = i == kSkipLayer ? cfg.lr_skip : cfg.lr_fc;
      for (std::size_t k = 0; k < g[i].size(); ++k) {
        const double gk = g[i].data()[k];
        double& mk = m[i].data()[k];
        double& vk = v[i].data()[k];
        mk = beta1 * mk + (1 - beta1) * gk;
        vk = beta2 * vk + (1 - beta2) * gk * gk;
        w.layers[i].data()[k] -= lr * (mk / c1) / (std::sqrt(vk / c2) + eps);
      }
    }
  }
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<Problem>& problems,
                  const std::vector<Problem>& test_problems) {
  Rng init = Rng(cfg.seed).substream("weights");
  ModelWeights start = cfg.coincident_init ? init_bfgs_coincident(init) : init_random(init);
  return train_from(cfg, std::move(start), problems, test_problems);
}

TrainResult train_from(const TrainConfig& cfg, ModelWeights start, const std::vector<Problem>& problems,
                       const std::vector<Problem>& test_problems) {
  cfg.validate();
  start.validate();
  const ReferenceTable ref = precompute_reference(problems, cfg.k_unroll, cfg.segment, cfg.gamma);
  const ReferenceTable test_ref = precompute_reference(test_problems, cfg.k_unroll, cfg.segment, cfg.gamma);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < problems.size(); ++i)
    if (ref.valid[i]) usable.push_back(i);
  if (usable.size() < static_cast<std::size_t>(cfg.batch_size))
    throw UsageError("fewer usable training problems than the batch size");

  TrainResult result;
  result.warnings = ref.warnings;
  auto evaluate = [&](const ModelWeights& w, int epoch, int skipped) {
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = mean_loss(w, problems, ref, cfg);
    r.test_loss = test_problems.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : mean_loss(w, test_problems, test_ref, cfg);
    r.skipped_batches = skipped;
    return r;
  };

  ModelWeights w = std::move(start);
  result.history.push_back(evaluate(w, 0, 0));
  result.best = w;
  result.best_epoch = 0;
  result.best_loss = result.history.back().train_loss;

  MetaAdam adam(w);
  const Rng root(cfg.seed);
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    Rng shuffle = root.substream("shuffle", static_cast<std::uint64_t>(epoch));
    shuffle.shuffle(std::span<std::size_t>(order));

    int batches = 0, skipped = 0;
    for (std::size_t start_i = 0; start_i + bs <= order.size(); start_i += bs) {
      ++batches;
      std::vector<std::optional<LossAndGrad>> parts(bs);
      auto work = [&](std::size_t j) {
        const std::size_t pi = order[start_i + j];
        try {
          LossAndGrad lg = unrolled_loss(w, problems[pi], ref.gaps[pi], cfg);
          if (std::isfinite(lg.loss) && all_finite(lg.grad)) parts[j] = std::move(lg);
        } catch (const NonFiniteLoss&) {
        }
      };
      if (cfg.parallel) {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < bs; ++j) threads.emplace_back(work, j);
        for (auto& t : threads) t.join();
      } else {
        for (std::size_t j = 0; j < bs; ++j) work(j);
      }
      bool ok = true;
      for (const auto& p : parts) ok = ok && p.has_value();
      if (!ok) {
        ++skipped;
        continue;
      }
      std::vector<Matrix> g = parts[0]->grad;
      for (std::size_t j = 1; j < bs; ++j)
        for (std::size_t i = 0; i < kLayerCount; ++i) g[i] += parts[j]->grad[i];
      double sq = 0;
      for (auto& gi : g) {
        gi *= 1.0 / static_cast<double>(bs);
        for (double v : gi.values()) sq += v * v;
      }
      const double gnorm = std::sqrt(sq);
      if (gnorm > cfg.clip_norm)
        for (auto& gi : g) gi *= cfg.clip_norm / gnorm;
      adam.step(w, g, cfg);
    }
    if (batches > 0 && skipped == batches)
      throw TrainingDiverged("every batch of epoch " + std::to_string(epoch) + " was non-finite", result.best,
                             result.best_epoch);

    result.history.push_back(evaluate(w, epoch, skipped));
    const double loss = result.history.back().train_loss;
    if (std::isfinite(loss) && !(loss >= result.best_loss)) {
      result.best = w;
      result.best_epoch = epoch;
      result.best_loss = loss;
    }
  }
  result.last = std::move(w);
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,mean_train_loss,mean_test_loss,log2_reference,skipped_batches\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", r.epoch, r.train_loss, r.test_loss, std::log(2.0),
                  r.skipped_batches);
    out << buf;
  }
}

}  // namespace loa
