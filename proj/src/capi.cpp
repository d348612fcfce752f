#include "loa/loa.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>

#include <json.hpp>

#include "loa/equivariance.hpp"
#include "loa/qn.hpp"
#include "loa/training.hpp"

struct loa_problems {
  loa::ProblemSet set;
};
struct loa_weights {
  loa::ModelWeights w;
};
struct loa_trajectory {
  loa::Trajectory t;
  bool diverged = false;
};
struct loa_train_result {
  loa::TrainResult r;
};
struct loa_table1 {
  loa::Table1 t;
};

namespace {

thread_local std::string last_error;

loa_status code_of(loa::ErrorCode c) {
  using loa::ErrorCode;
  switch (c) {
    case ErrorCode::Usage:
    case ErrorCode::Role:
    case ErrorCode::Dimension:
      return LOA_ERR_USAGE;
    case ErrorCode::Io:
      return LOA_ERR_IO;
    case ErrorCode::Format:
      return LOA_ERR_FORMAT;
    case ErrorCode::Parse:
      return LOA_ERR_PARSE;
    case ErrorCode::Shape:
      return LOA_ERR_SHAPE;
    case ErrorCode::Capability:
      return LOA_ERR_CAPABILITY;
    case ErrorCode::Divergence:
    case ErrorCode::NonFiniteLoss:
      return LOA_ERR_DIVERGENCE;
    case ErrorCode::TrainingDiverged:
      return LOA_ERR_TRAINING_DIVERGED;
    default:
      return LOA_ERR_NUMERIC;
  }
}

template <class F>
loa_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return LOA_OK;
  } catch (const loa::Error& e) {
    last_error = std::string(loa::to_string(e.code())) + ": " + e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return LOA_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return LOA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw loa::UsageError(std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

loa::TrainConfig to_cpp(const loa_train_config& c) {
  loa::TrainConfig t;
  t.k_unroll = c.k_unroll;
  t.segment = c.segment;
  t.batch_size = c.batch_size;
  t.lr_fc = c.lr_fc;
  t.lr_skip = c.lr_skip;
  t.clip_norm = c.clip_norm;
  t.epochs = c.epochs;
  t.seed = c.seed;
  t.gamma = c.gamma;
  t.coincident_init = c.coincident_init != 0;
  t.parallel = c.parallel != 0;
  return t;
}

loa::AlgorithmSpec make_spec(const std::string& name, const loa::Problem& p, const loa_weights* w,
                             const loa_run_options& o) {
  loa::LineSearchConfig ls;
  ls.enabled = o.line_search != 0;
  auto step_over_l = [&] {
    if (o.gamma > 0) return o.gamma;
    if (!p.lipschitz) throw loa::UsageError(name + " needs --gamma on " + p.label + " (no Lipschitz constant)");
    return 1.0 / *p.lipschitz;
  };
  const double qn_gamma = o.gamma > 0 ? o.gamma : 1.0;
  if (name == "gd") return loa::gd_spec(step_over_l());
  if (name == "hb") return loa::heavy_ball_spec(0.5, step_over_l());
  if (name == "newton") return loa::newton_spec(ls);
  if (name == "adam") return loa::adam_spec(0.9, 0.999, o.gamma > 0 ? o.gamma : 0.1, 1e-8);
  if (name == "bfgs") return loa::bfgs_spec(qn_gamma, ls);
  if (name == "loa-bfgs") {
    if (!w) throw loa::UsageError("loa-bfgs needs weights");
    return loa::loa_bfgs_spec(std::make_shared<const loa::ModelWeights>(w->w), qn_gamma, ls);
  }
  throw loa::UsageError("unknown algorithm '" + name + "'");
}

const loa::Problem& problem_at(const loa_problems* p, std::size_t i) {
  require(p, "problem set");
  if (i >= p->set.problems.size()) throw loa::UsageError("problem index out of range");
  return p->set.problems[i];
}

}  // namespace

extern "C" {

const char* loa_version(void) { return "1.0.0"; }
const char* loa_last_error(void) { return last_error.c_str(); }
void loa_string_free(char* s) { delete[] s; }

loa_status loa_suite_manifest(size_t n, size_t count, uint64_t seed, size_t inits, char** out_json) {
  return guarded([&] {
    require(out_json, "output");
    if (n == 0 || count == 0 || inits == 0) throw loa::UsageError("dimension and counts must be positive");
    *out_json = copy_string(loa::quadratic_suite_manifest(n, count, seed, inits));
  });
}

loa_status loa_problems_from_manifest(const char* json_text, const char* base_dir, loa_problems** out) {
  return guarded([&] {
    require(json_text, "manifest");
    require(out, "output");
    auto p = std::make_unique<loa_problems>();
    p->set = loa::load_problem_manifest(json_text, base_dir ? base_dir : "");
    *out = p.release();
  });
}

loa_status loa_problems_from_manifest_file(const char* path, loa_problems** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output");
    auto p = std::make_unique<loa_problems>();
    p->set = loa::load_problem_manifest_file(path);
    *out = p.release();
  });
}

void loa_problems_free(loa_problems* p) { delete p; }
size_t loa_problems_count(const loa_problems* p) { return p ? p->set.problems.size() : 0; }
const char* loa_problems_label(const loa_problems* p, size_t i) {
  return p && i < p->set.problems.size() ? p->set.problems[i].label.c_str() : nullptr;
}
size_t loa_problems_dim(const loa_problems* p, size_t i) {
  return p && i < p->set.problems.size() ? p->set.problems[i].dim : 0;
}
const char* loa_problems_manifest(const loa_problems* p) { return p ? p->set.manifest.c_str() : nullptr; }

loa_status loa_weights_create(loa_weights_init kind, uint64_t seed, loa_weights** out) {
  return guarded([&] {
    require(out, "output");
    auto w = std::make_unique<loa_weights>();
    loa::Rng rng(seed);
    switch (kind) {
      case LOA_INIT_COINCIDENT:
        w->w = loa::init_bfgs_coincident(rng);
        break;
      case LOA_INIT_NEAR_COINCIDENT:
        w->w = loa::init_near_coincident(rng);
        break;
      case LOA_INIT_RANDOM:
        w->w = loa::init_random(rng);
        break;
      default:
        throw loa::UsageError("unknown weight initialization");
    }
    *out = w.release();
  });
}

loa_status loa_weights_load(const char* path, loa_weights** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output");
    auto w = std::make_unique<loa_weights>();
    w->w = loa::load_weights_file(path);
    *out = w.release();
  });
}

loa_status loa_weights_save(const loa_weights* w, const char* path) {
  return guarded([&] {
    require(w, "weights");
    require(path, "path");
    loa::save_weights_file(w->w, path);
  });
}

void loa_weights_free(loa_weights* w) { delete w; }
size_t loa_weights_parameter_count(const loa_weights* w) { return w ? w->w.parameter_count() : 0; }

void loa_run_options_default(loa_run_options* o) {
  if (!o) return;
  o->k = 40;
  o->gamma = 0.0;
  o->line_search = 0;
}

int loa_algorithm_known(const char* name) {
  if (!name) return 0;
  for (const char* n : {"gd", "hb", "newton", "adam", "bfgs", "loa-bfgs"})
    if (std::strcmp(n, name) == 0) return 1;
  return 0;
}

loa_status loa_run(const loa_problems* p, size_t index, const char* algorithm, const loa_weights* w,
                   const loa_run_options* o, loa_trajectory** out) {
  return guarded([&] {
    require(algorithm, "algorithm");
    require(o, "options");
    require(out, "output");
    const loa::Problem& prob = problem_at(p, index);
    const loa::AlgorithmSpec spec = make_spec(algorithm, prob, w, *o);
    auto t = std::make_unique<loa_trajectory>();
    try {
      t->t = loa::run(spec, prob, o->k);
    } catch (const loa::DivergenceError& e) {
      t->t = e.partial();
      t->t.warnings.push_back(e.what());
      t->diverged = true;
    }
    *out = t.release();
  });
}

void loa_trajectory_free(loa_trajectory* t) { delete t; }
int loa_trajectory_diverged(const loa_trajectory* t) { return t && t->diverged; }
size_t loa_trajectory_length(const loa_trajectory* t) { return t ? t->t.f_values.size() : 0; }
double loa_trajectory_f(const loa_trajectory* t, size_t k) {
  return t && k < t->t.f_values.size() ? t->t.f_values[k] : std::numeric_limits<double>::quiet_NaN();
}
double loa_trajectory_grad_norm(const loa_trajectory* t, size_t k) {
  return t && k < t->t.grad_norms.size() ? t->t.grad_norms[k] : std::numeric_limits<double>::quiet_NaN();
}
double loa_trajectory_f_star(const loa_trajectory* t) {
  return t && t->t.f_star ? *t->t.f_star : std::numeric_limits<double>::quiet_NaN();
}
double loa_trajectory_wall_time(const loa_trajectory* t) { return t ? t->t.wall_time : 0.0; }
size_t loa_trajectory_warning_count(const loa_trajectory* t) { return t ? t->t.warnings.size() : 0; }
const char* loa_trajectory_warning(const loa_trajectory* t, size_t i) {
  return t && i < t->t.warnings.size() ? t->t.warnings[i].c_str() : nullptr;
}

loa_status loa_trajectory_write_csv(const loa_trajectory* t, const char* path) {
  return guarded([&] {
    require(t, "trajectory");
    require(path, "path");
    std::ofstream out(path);
    if (!out) throw loa::IoError(std::string("cannot write ") + path);
    const nlohmann::json meta = {{"problem", t->t.problem},
                                 {"algorithm", t->t.algorithm},
                                 {"diverged", t->diverged},
                                 {"wall_time", t->t.wall_time}};
    loa::write_trajectory_csv(t->t, out, meta.dump());
  });
}

void loa_train_config_default(loa_train_config* c) {
  if (!c) return;
  const loa::TrainConfig d;
  c->k_unroll = d.k_unroll;
  c->segment = d.segment;
  c->batch_size = d.batch_size;
  c->lr_fc = d.lr_fc;
  c->lr_skip = d.lr_skip;
  c->clip_norm = d.clip_norm;
  c->epochs = d.epochs;
  c->seed = d.seed;
  c->gamma = d.gamma;
  c->coincident_init = d.coincident_init;
  c->parallel = d.parallel;
}

loa_status loa_train(const loa_train_config* c, const loa_weights* start, const loa_problems* train,
                     const loa_problems* test, loa_train_result** out) {
  return guarded([&] {
    require(c, "config");
    require(train, "training set");
    require(out, "output");
    const loa::TrainConfig cfg = to_cpp(*c);
    const std::vector<loa::Problem> none;
    const auto& test_problems = test ? test->set.problems : none;
    auto r = std::make_unique<loa_train_result>();
    try {
      r->r = start ? loa::train_from(cfg, start->w, train->set.problems, test_problems)
                   : loa::train(cfg, train->set.problems, test_problems);
    } catch (const loa::TrainingDiverged& e) {
      r->r.best = e.checkpoint();
      r->r.last = e.checkpoint();
      r->r.best_epoch = e.epoch();
      r->r.best_loss = std::numeric_limits<double>::quiet_NaN();
      r->r.warnings.push_back(e.what());
      *out = r.release();
      throw;
    }
    *out = r.release();
  });
}

void loa_train_result_free(loa_train_result* r) { delete r; }
int loa_train_result_best_epoch(const loa_train_result* r) { return r ? r->r.best_epoch : -1; }
double loa_train_result_best_loss(const loa_train_result* r) {
  return r ? r->r.best_loss : std::numeric_limits<double>::quiet_NaN();
}
size_t loa_train_result_epochs(const loa_train_result* r) { return r ? r->r.history.size() : 0; }
double loa_train_result_train_loss(const loa_train_result* r, size_t e) {
  return r && e < r->r.history.size() ? r->r.history[e].train_loss : std::numeric_limits<double>::quiet_NaN();
}
double loa_train_result_test_loss(const loa_train_result* r, size_t e) {
  return r && e < r->r.history.size() ? r->r.history[e].test_loss : std::numeric_limits<double>::quiet_NaN();
}

loa_status loa_train_result_best_weights(const loa_train_result* r, loa_weights** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "output");
    *out = new loa_weights{r->r.best};
  });
}

loa_status loa_train_result_last_weights(const loa_train_result* r, loa_weights** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "output");
    *out = new loa_weights{r->r.last};
  });
}

loa_status loa_train_result_write_history(const loa_train_result* r, const char* path) {
  return guarded([&] {
    require(r, "result");
    require(path, "path");
    std::ofstream out(path);
    if (!out) throw loa::IoError(std::string("cannot write ") + path);
    loa::write_history_csv(r->r.history, out);
  });
}

size_t loa_train_result_warning_count(const loa_train_result* r) { return r ? r->r.warnings.size() : 0; }
const char* loa_train_result_warning(const loa_train_result* r, size_t i) {
  return r && i < r->r.warnings.size() ? r->r.warnings[i].c_str() : nullptr;
}

loa_status loa_mean_loss(const loa_weights* w, const loa_problems* p, const loa_train_config* c, double* loss,
                         size_t* valid) {
  return guarded([&] {
    require(w, "weights");
    require(p, "problem set");
    require(c, "config");
    require(loss, "output");
    const loa::TrainConfig cfg = to_cpp(*c);
    cfg.validate();
    const auto ref = loa::precompute_reference(p->set.problems, cfg.k_unroll, cfg.segment, cfg.gamma);
    *loss = loa::mean_loss(w->w, p->set.problems, ref, cfg);
    if (valid) *valid = ref.valid_count();
  });
}

void loa_table1_options_default(loa_table1_options* o) {
  if (!o) return;
  const loa::Table1Options d;
  o->seed = d.seed;
  o->dim = d.dim;
  o->k = d.k;
  o->problem_count = d.problem_count;
  o->pass_tol = d.pass_tol;
  o->fail_tol = d.fail_tol;
  o->lambda_small = d.lambdas[0];
  o->lambda_large = d.lambdas[1];
  o->corrupt_adam = 0;
  o->weights = nullptr;
}

loa_status loa_table1_build(const loa_table1_options* o, loa_table1** out) {
  return guarded([&] {
    require(o, "options");
    require(out, "output");
    if (o->dim < 2 || o->k < 1 || o->problem_count < 1) throw loa::UsageError("bad table dimensions");
    loa::Table1Options t;
    t.seed = o->seed;
    t.dim = o->dim;
    t.k = o->k;
    t.problem_count = o->problem_count;
    t.pass_tol = o->pass_tol;
    t.fail_tol = o->fail_tol;
    t.lambdas = {o->lambda_small, o->lambda_large};
    t.corrupt_adam = o->corrupt_adam != 0;
    if (o->weights) t.weights = o->weights->w;
    *out = new loa_table1{loa::build_table1(t)};
  });
}

void loa_table1_free(loa_table1* t) { delete t; }
int loa_table1_matches(const loa_table1* t) { return t && t->t.matches_expected(); }

loa_status loa_table1_markdown(const loa_table1* t, char** out) {
  return guarded([&] {
    require(t, "table");
    require(out, "output");
    *out = copy_string(loa::table1_markdown(t->t));
  });
}

loa_status loa_table1_json(const loa_table1* t, char** out) {
  return guarded([&] {
    require(t, "table");
    require(out, "output");
    *out = copy_string(loa::table1_json(t->t));
  });
}

}  // extern "C"
