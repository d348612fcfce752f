// Command-line driver: data generation, training, evaluation, benchmarks,
// the equivariance table and reports. Uses only the C interface.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loa/loa.h"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kMismatch = 1, kUsage = 2, kDivergence = 3 };

struct Failure {
  int code;
  std::string message;
};

int exit_for(loa_status s) {
  switch (s) {
    case LOA_ERR_DIVERGENCE:
    case LOA_ERR_TRAINING_DIVERGED:
    case LOA_ERR_NUMERIC:
    case LOA_ERR_INTERNAL:
      return kDivergence;
    default:
      return kUsage;
  }
}

void check(loa_status s) {
  if (s != LOA_OK) throw Failure{exit_for(s), loa_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Problems = Handle<loa_problems, loa_problems_free>;
using Weights = Handle<loa_weights, loa_weights_free>;
using Traj = Handle<loa_trajectory, loa_trajectory_free>;
using TrainResult = Handle<loa_train_result, loa_train_result_free>;
using Table = Handle<loa_table1, loa_table1_free>;

std::string take_string(char* s) {
  std::string out(s);
  loa_string_free(s);
  return out;
}

struct Options {
  std::uint64_t seed = 0;
  std::string out = "out";
  int k = 40;
  double gamma = 0.0;
  bool line_search = false;
  std::string weights;
  std::string problems;
  std::string algos = "bfgs,loa-bfgs";
  bool no_coincident_init = false;
  double tol = 1e-8;
  // gen-data
  std::string kind = "quadratic";
  std::size_t n = 20;
  std::size_t count = 20;
  std::size_t inits = 1;
  std::size_t test_count = 0;
  // train
  std::string test_problems;
  int epochs = 200;
  int batch = 2;
  int segment = 5;
  bool parallel = false;
  // bench / report
  bool svg = true;
  std::string from;
  // equiv-check
  bool corrupt_adam = false;
};

// Output directory staged under a temporary name and renamed into place when
// the command finishes; an existing directory is written in place.
class OutDir {
 public:
  explicit OutDir(const std::string& path) : final_(path) {
    if (fs::exists(final_)) {
      if (!fs::is_directory(final_)) throw Failure{kUsage, final_.string() + " exists and is not a directory"};
      work_ = final_;
    } else {
      work_ = final_;
      work_ += ".partial-" + std::to_string(::getpid());
      fs::create_directories(work_);
    }
  }
  OutDir(const OutDir&) = delete;
  OutDir& operator=(const OutDir&) = delete;
  ~OutDir() { commit(); }

  fs::path file(const std::string& name) const { return work_ / name; }
  fs::path final_file(const std::string& name) const { return final_ / name; }

  void commit() {
    if (work_ == final_) return;
    std::error_code ec;
    fs::rename(work_, final_, ec);
    if (ec) std::cerr << "warning: could not move " << work_ << " to " << final_ << ": " << ec.message() << '\n';
    work_ = final_;
  }

 private:
  fs::path final_;
  fs::path work_;
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Failure{kUsage, "cannot write " + path.string()};
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kUsage, "cannot read " + path.string()};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void echo_config(const OutDir& dir, const std::string& command, const json& resolved) {
  json c = resolved;
  c["command"] = command;
  c["library_version"] = loa_version();
  write_text(dir.file("config.json"), c.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string file_safe(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

// The problem set from --problems, or the default quadratic suite from the seed.
void load_problems(const Options& o, Problems& p, json& cfg) {
  if (!o.problems.empty()) {
    check(loa_problems_from_manifest_file(o.problems.c_str(), p.out()));
    cfg["problems"] = o.problems;
  } else {
    char* m = nullptr;
    check(loa_suite_manifest(20, 20, o.seed, 1, &m));
    const std::string text = take_string(m);
    check(loa_problems_from_manifest(text.c_str(), nullptr, p.out()));
    cfg["problems"] = json::parse(text);
  }
}

loa_train_config train_config(const json& manifest_config) {
  loa_train_config c;
  loa_train_config_default(&c);
  // manifest values first, then explicit flags
  c.k_unroll = manifest_config.value("k_unroll", c.k_unroll);
  c.segment = manifest_config.value("segment", c.segment);
  c.batch_size = manifest_config.value("batch_size", c.batch_size);
  c.lr_fc = manifest_config.value("lr_fc", c.lr_fc);
  c.lr_skip = manifest_config.value("lr_skip", c.lr_skip);
  c.clip_norm = manifest_config.value("clip_norm", c.clip_norm);
  c.epochs = manifest_config.value("epochs", c.epochs);
  c.gamma = manifest_config.value("gamma", c.gamma);
  return c;
}

json train_config_json(const loa_train_config& c) {
  return {{"k_unroll", c.k_unroll},   {"segment", c.segment},     {"batch_size", c.batch_size},
          {"lr_fc", c.lr_fc},         {"lr_skip", c.lr_skip},     {"clip_norm", c.clip_norm},
          {"epochs", c.epochs},       {"seed", c.seed},           {"gamma", c.gamma},
          {"coincident_init", c.coincident_init != 0},            {"parallel", c.parallel != 0}};
}

double relative_gap(const loa_trajectory* t, std::size_t k) {
  const double fs = loa_trajectory_f_star(t);
  return (loa_trajectory_f(t, k) - fs) / (loa_trajectory_f(t, 0) - fs);
}

std::vector<double> relative_gaps(const loa_trajectory* t) {
  std::vector<double> out;
  for (std::size_t k = 0; k < loa_trajectory_length(t); ++k) out.push_back(relative_gap(t, k));
  return out;
}

// ---- commands ----

int cmd_gen_data(const Options& o) {
  if (o.kind != "quadratic" && o.kind != "logistic") throw Failure{kUsage, "--kind must be quadratic or logistic"};
  OutDir dir(o.out);
  json cfg = {{"seed", o.seed}, {"kind", o.kind}, {"n", o.n}, {"count", o.count}, {"inits", o.inits},
              {"test_count", o.test_count}, {"out", o.out}};
  echo_config(dir, "gen-data", cfg);

  auto manifest = [&](std::size_t count, std::uint64_t seed) {
    if (o.kind == "quadratic") {
      char* m = nullptr;
      check(loa_suite_manifest(o.n, count, seed, o.inits, &m));
      return json::parse(take_string(m));
    }
    return json{{"version", 1},
                {"seed", seed},
                {"init", {{"step", 1e-3}}},
                {"problems", json::array({{{"kind", "logistic"},
                                           {"n", o.n},
                                           {"m_per_class", 100},
                                           {"eta", 1e-3},
                                           {"count", count},
                                           {"inits_per_function", o.inits}}})}};
  };

  auto emit = [&](const std::string& name, const json& m) {
    Problems p;  // regenerate once to validate the manifest
    check(loa_problems_from_manifest(m.dump().c_str(), nullptr, p.out()));
    write_text(dir.file(name), m.dump(2) + "\n");
    std::cout << "wrote " << dir.final_file(name).string() << " (" << loa_problems_count(p.get())
              << " problems)\n";
  };
  emit("problems.json", manifest(o.count, o.seed));
  json train = {{"config", {{"k_unroll", 40}, {"segment", 5}, {"batch_size", 2}, {"epochs", 200}}},
                {"problems", "problems.json"}};
  if (o.test_count > 0) {
    emit("test.json", manifest(o.test_count, o.seed + 1));
    train["test_problems"] = "test.json";
  }
  write_text(dir.file("train.json"), train.dump(2) + "\n");
  return kOk;
}

int cmd_train(const Options& o, const CLI::App& sub) {
  json manifest_config = json::object();
  std::string problems_path = o.problems, test_path = o.test_problems;
  if (!o.problems.empty()) {
    const json m = json::parse(read_text(o.problems), nullptr, false);
    if (m.is_object() && m.contains("config")) {
      manifest_config = m.at("config");
      const fs::path base = fs::path(o.problems).parent_path();
      if (m.contains("test_problems") && test_path.empty())
        test_path = (base / m.at("test_problems").get<std::string>()).string();
    }
  }
  loa_train_config c = train_config(manifest_config);
  c.seed = o.seed;
  if (sub.count("--k")) c.k_unroll = o.k;
  if (sub.count("--gamma")) c.gamma = o.gamma;
  if (sub.count("--epochs")) c.epochs = o.epochs;
  if (sub.count("--batch")) c.batch_size = o.batch;
  if (sub.count("--segment")) c.segment = o.segment;
  c.coincident_init = !o.no_coincident_init;
  c.parallel = o.parallel;

  Problems train, test;
  Options po = o;
  po.problems = problems_path;
  json cfg = {{"seed", o.seed}, {"out", o.out}, {"train", train_config_json(c)}};
  load_problems(po, train, cfg);
  if (!test_path.empty()) {
    check(loa_problems_from_manifest_file(test_path.c_str(), test.out()));
    cfg["test_problems"] = test_path;
  }
  Weights start;
  if (!o.weights.empty()) {
    check(loa_weights_load(o.weights.c_str(), start.out()));
    cfg["weights"] = o.weights;
  }

  OutDir dir(o.out);
  echo_config(dir, "train", cfg);
  std::cout << "training on " << loa_problems_count(train.get()) << " problems, " << c.epochs << " epochs\n";

  TrainResult r;
  const loa_status s = loa_train(&c, start.get(), train.get(), test.get(), r.out());
  for (std::size_t i = 0; i < loa_train_result_warning_count(r.get()); ++i)
    std::cerr << "warning: " << loa_train_result_warning(r.get(), i) << '\n';
  if (s == LOA_ERR_TRAINING_DIVERGED) {
    Weights ckpt;
    check(loa_train_result_best_weights(r.get(), ckpt.out()));
    check(loa_weights_save(ckpt.get(), dir.file("checkpoint.json").c_str()));
    std::cerr << "error: " << loa_last_error() << '\n';
    dir.commit();
    std::cerr << "last checkpoint: " << dir.final_file("checkpoint.json").string() << '\n';
    return kDivergence;
  }
  check(s);

  Weights best, last;
  check(loa_train_result_best_weights(r.get(), best.out()));
  check(loa_train_result_last_weights(r.get(), last.out()));
  check(loa_weights_save(best.get(), dir.file("weights_best.json").c_str()));
  check(loa_weights_save(last.get(), dir.file("weights_last.json").c_str()));
  check(loa_train_result_write_history(r.get(), dir.file("history.csv").c_str()));

  std::vector<double> tr, te;
  bool has_test = false;
  for (std::size_t e = 0; e < loa_train_result_epochs(r.get()); ++e) {
    tr.push_back(loa_train_result_train_loss(r.get(), e));
    te.push_back(loa_train_result_test_loss(r.get(), e));
    has_test = has_test || std::isfinite(te.back());
  }
  std::vector<loa_cli::Series> series = {{"train", tr}};
  if (has_test) series.push_back({"test", te});
  loa_cli::ChartOptions chart;
  chart.title = "training loss (dashed: log 2, BFGS level)";
  chart.x_label = "epoch";
  chart.y_label = "mean loss";
  chart.log_y = false;
  chart.reference_lines = {std::log(2.0)};
  write_text(dir.file("history.svg"), loa_cli::line_chart(series, chart));

  std::printf("epoch 0 loss %.17g\nbest epoch %d, loss %.6f\n", tr.empty() ? NAN : tr[0],
              loa_train_result_best_epoch(r.get()), loa_train_result_best_loss(r.get()));
  return kOk;
}

struct RunRecord {
  std::string problem, algorithm;
  bool diverged = false;
  bool failed = false;
  std::string error;
  double final_rel_gap = NAN;
  double wall_time = 0;
  std::size_t iterations = 0;
  std::vector<double> curve;
};

json record_json(const RunRecord& r) {
  json j = {{"problem", r.problem}, {"algorithm", r.algorithm}, {"diverged", r.diverged},
            {"failed", r.failed},   {"iterations", r.iterations}, {"wall_time", r.wall_time}};
  j["final_relative_gap"] = std::isfinite(r.final_rel_gap) ? json(r.final_rel_gap) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

RunRecord run_one(const loa_problems* p, std::size_t i, const std::string& algo, const loa_weights* w,
                  const loa_run_options& ro, const OutDir* dir) {
  RunRecord rec;
  rec.problem = loa_problems_label(p, i);
  rec.algorithm = algo;
  Traj t;
  const loa_status s = loa_run(p, i, algo.c_str(), w, &ro, t.out());
  if (s != LOA_OK) {
    rec.failed = true;
    rec.error = loa_last_error();
    if (s == LOA_ERR_USAGE) throw Failure{kUsage, rec.error};
    return rec;
  }
  rec.diverged = loa_trajectory_diverged(t.get());
  rec.iterations = loa_trajectory_length(t.get()) - 1;
  rec.wall_time = loa_trajectory_wall_time(t.get());
  rec.curve = relative_gaps(t.get());
  if (!rec.diverged) rec.final_rel_gap = rec.curve.back();
  if (dir) {
    const fs::path csv = dir->file("trajectories/" + file_safe(algo) + "/" + file_safe(rec.problem) + ".csv");
    fs::create_directories(csv.parent_path());
    check(loa_trajectory_write_csv(t.get(), csv.c_str()));
  }
  return rec;
}

int cmd_bench(const Options& o) {
  const auto algos = split_list(o.algos);
  if (algos.empty()) throw Failure{kUsage, "--algos is empty"};
  for (const auto& a : algos)
    if (!loa_algorithm_known(a.c_str())) throw Failure{kUsage, "unknown algorithm '" + a + "'"};
  const bool needs_weights = std::find(algos.begin(), algos.end(), "loa-bfgs") != algos.end();
  if (needs_weights && o.weights.empty()) throw Failure{kUsage, "loa-bfgs needs --weights"};

  json cfg = {{"seed", o.seed}, {"out", o.out}, {"k", o.k}, {"gamma", o.gamma}, {"line_search", o.line_search},
              {"algos", algos}, {"weights", o.weights}, {"svg", o.svg}};
  Problems p;
  load_problems(o, p, cfg);
  Weights w;
  if (needs_weights) check(loa_weights_load(o.weights.c_str(), w.out()));

  OutDir dir(o.out);
  echo_config(dir, "bench", cfg);
  loa_run_options ro;
  loa_run_options_default(&ro);
  ro.k = o.k;
  ro.gamma = o.gamma;
  ro.line_search = o.line_search;

  std::vector<RunRecord> records;
  for (std::size_t i = 0; i < loa_problems_count(p.get()); ++i) {
    std::vector<loa_cli::Series> series;
    for (const auto& a : algos) {
      records.push_back(run_one(p.get(), i, a, w.get(), ro, &dir));
      if (!records.back().failed) series.push_back({a, records.back().curve});
    }
    if (o.svg) {
      loa_cli::ChartOptions chart;
      chart.title = loa_problems_label(p.get(), i);
      chart.y_label = "(f(x_k) - f*) / (f(x_0) - f*)";
      write_text(dir.file("charts/" + file_safe(loa_problems_label(p.get(), i)) + ".svg"),
                 loa_cli::line_chart(series, chart));
    }
  }

  // per-algorithm aggregates; timing per iteration relative to gd when present
  json summary = {{"k", o.k}, {"runs", json::array()}, {"algorithms", json::object()}};
  std::map<std::string, double> time_per_iter;
  for (const auto& a : algos) {
    std::vector<double> gaps;
    double time = 0;
    std::size_t iters = 0, failed = 0;
    for (const auto& r : records) {
      if (r.algorithm != a) continue;
      if (r.failed || r.diverged) ++failed;
      if (std::isfinite(r.final_rel_gap)) gaps.push_back(r.final_rel_gap);
      time += r.wall_time;
      iters += r.iterations;
    }
    std::sort(gaps.begin(), gaps.end());
    time_per_iter[a] = iters ? time / static_cast<double>(iters) : NAN;
    summary["algorithms"][a] = {{"median_final_relative_gap", gaps.empty() ? json(nullptr)
                                                                           : json(gaps[gaps.size() / 2])},
                                {"failed_or_diverged", failed},
                                {"seconds_per_iteration", time_per_iter[a]}};
  }
  if (time_per_iter.count("gd"))
    for (const auto& a : algos)
      summary["algorithms"][a]["time_relative_to_gd"] = time_per_iter[a] / time_per_iter["gd"];
  std::size_t ok = 0;
  for (const auto& r : records) {
    summary["runs"].push_back(record_json(r));
    ok += !(r.failed || r.diverged);
  }
  write_text(dir.file("summary.json"), summary.dump(2) + "\n");

  for (const auto& a : algos)
    std::printf("%-10s median final relative gap %s\n", a.c_str(),
                summary["algorithms"][a]["median_final_relative_gap"].dump().c_str());
  std::printf("%zu runs, %zu completed\n", records.size(), ok);
  return ok == 0 ? kDivergence : kOk;
}

int cmd_eval(const Options& o) {
  if (o.weights.empty()) throw Failure{kUsage, "eval needs --weights"};
  json cfg = {{"seed", o.seed}, {"out", o.out}, {"k", o.k}, {"gamma", o.gamma}, {"line_search", o.line_search},
              {"weights", o.weights}};
  Problems p;
  load_problems(o, p, cfg);
  Weights w;
  check(loa_weights_load(o.weights.c_str(), w.out()));

  OutDir dir(o.out);
  echo_config(dir, "eval", cfg);
  loa_run_options ro;
  loa_run_options_default(&ro);
  ro.k = o.k;
  ro.gamma = o.gamma;
  ro.line_search = o.line_search;

  json out = {{"k", o.k}, {"problems", json::array()}};
  std::size_t wins = 0, compared = 0;
  for (std::size_t i = 0; i < loa_problems_count(p.get()); ++i) {
    const RunRecord learned = run_one(p.get(), i, "loa-bfgs", w.get(), ro, nullptr);
    const RunRecord bfgs = run_one(p.get(), i, "bfgs", nullptr, ro, nullptr);
    json row = {{"problem", learned.problem}, {"loa-bfgs", record_json(learned)}, {"bfgs", record_json(bfgs)}};
    if (std::isfinite(learned.final_rel_gap) && std::isfinite(bfgs.final_rel_gap)) {
      ++compared;
      const bool win = learned.final_rel_gap <= bfgs.final_rel_gap;
      wins += win;
      row["learned_not_worse"] = win;
    }
    out["problems"].push_back(row);
    std::printf("%-24s loa-bfgs %.3e  bfgs %.3e\n", learned.problem.c_str(), learned.final_rel_gap,
                bfgs.final_rel_gap);
  }
  out["learned_not_worse"] = wins;
  out["compared"] = compared;

  loa_train_config c;
  loa_train_config_default(&c);
  if (o.k % c.segment == 0) {
    c.k_unroll = o.k;
    c.gamma = o.gamma > 0 ? o.gamma : 1.0;
    double loss = NAN;
    std::size_t valid = 0;
    if (loa_mean_loss(w.get(), p.get(), &c, &loss, &valid) == LOA_OK) {
      out["mean_loss"] = std::isfinite(loss) ? json(loss) : json(nullptr);
      out["mean_loss_problems"] = valid;
      std::printf("mean loss %.6f over %zu problems (log 2 = %.6f)\n", loss, valid, std::log(2.0));
    } else {
      out["mean_loss_error"] = loa_last_error();
    }
  }
  write_text(dir.file("eval.json"), out.dump(2) + "\n");
  std::printf("learned not worse than BFGS on %zu of %zu problems\n", wins, compared);
  return kOk;
}

int cmd_equiv_check(const Options& o) {
  loa_table1_options t;
  loa_table1_options_default(&t);
  t.seed = o.seed;
  t.pass_tol = o.tol;
  t.corrupt_adam = o.corrupt_adam;
  Weights w;
  if (!o.weights.empty()) {
    check(loa_weights_load(o.weights.c_str(), w.out()));
    t.weights = w.get();
  }
  OutDir dir(o.out);
  echo_config(dir, "equiv-check",
              {{"seed", o.seed}, {"out", o.out}, {"tol", o.tol}, {"fail_tol", t.fail_tol}, {"dim", t.dim},
               {"k", t.k}, {"problem_count", t.problem_count}, {"lambdas", {t.lambda_small, t.lambda_large}},
               {"weights", o.weights}, {"corrupt_adam", o.corrupt_adam}});
  Table table;
  check(loa_table1_build(&t, table.out()));
  char* md = nullptr;
  char* js = nullptr;
  check(loa_table1_markdown(table.get(), &md));
  const std::string markdown = take_string(md);
  check(loa_table1_json(table.get(), &js));
  write_text(dir.file("table1.md"), markdown);
  write_text(dir.file("table1.json"), take_string(js));
  std::cout << markdown;
  return loa_table1_matches(table.get()) ? kOk : kMismatch;
}

// Charts and a Markdown summary from the artifacts of earlier commands.
int cmd_report(const Options& o) {
  if (o.from.empty()) throw Failure{kUsage, "report needs --from <directory>"};
  const fs::path src = o.from;
  if (!fs::is_directory(src)) throw Failure{kUsage, o.from + " is not a directory"};
  OutDir dir(o.out);
  echo_config(dir, "report", {{"from", o.from}, {"out", o.out}, {"seed", o.seed}});
  std::ostringstream md;
  md << "# Report for " << src.string() << "\n\n";
  bool any = false;

  if (fs::exists(src / "summary.json")) {
    any = true;
    const json s = json::parse(read_text(src / "summary.json"));
    md << "## Benchmark, K = " << s.at("k") << "\n\n| algorithm | median final relative gap | failed or diverged | "
       << "s/iteration |\n|---|---|---|---|\n";
    std::map<std::string, std::vector<std::vector<double>>> curves;
    for (auto it = s.at("algorithms").begin(); it != s.at("algorithms").end(); ++it)
      md << "| " << it.key() << " | " << it.value().at("median_final_relative_gap").dump() << " | "
         << it.value().at("failed_or_diverged") << " | " << it.value().at("seconds_per_iteration") << " |\n";
    for (const auto& r : s.at("runs")) {
      if (r.at("failed").get<bool>()) continue;
      const fs::path csv = src / "trajectories" / file_safe(r.at("algorithm").get<std::string>()) /
                           (file_safe(r.at("problem").get<std::string>()) + ".csv");
      std::ifstream in(csv);
      std::string line;
      std::vector<double> gaps;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'k') continue;
        std::stringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');
        std::getline(ls, field, ',');
        std::getline(ls, field, ',');
        gaps.push_back(field.empty() ? NAN : std::stod(field));
      }
      if (!gaps.empty()) {
        const double g0 = gaps[0];
        for (double& g : gaps) g /= g0;
        curves[r.at("algorithm").get<std::string>()].push_back(gaps);
      }
    }
    // median curve per algorithm
    std::vector<loa_cli::Series> series;
    for (const auto& [algo, cs] : curves) {
      std::size_t len = 0;
      for (const auto& c : cs) len = std::max(len, c.size());
      std::vector<double> med(len, NAN);
      for (std::size_t k = 0; k < len; ++k) {
        std::vector<double> v;
        for (const auto& c : cs)
          if (k < c.size() && std::isfinite(c[k])) v.push_back(c[k]);
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        med[k] = v[v.size() / 2];
      }
      series.push_back({algo, med});
    }
    loa_cli::ChartOptions chart;
    chart.title = "median relative sub-optimality";
    chart.y_label = "(f(x_k) - f*) / (f(x_0) - f*)";
    write_text(dir.file("convergence.svg"), loa_cli::line_chart(series, chart));
    md << "\n![convergence](convergence.svg)\n\n";
  }

  if (fs::exists(src / "history.csv")) {
    any = true;
    std::ifstream in(src / "history.csv");
    std::string line;
    std::getline(in, line);
    std::vector<double> tr, te;
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::string e, a, b;
      std::getline(ls, e, ',');
      std::getline(ls, a, ',');
      std::getline(ls, b, ',');
      tr.push_back(a.empty() ? NAN : std::stod(a));
      te.push_back(b.empty() || b == "nan" ? NAN : std::stod(b));
    }
    std::vector<loa_cli::Series> series = {{"train", tr}};
    if (std::any_of(te.begin(), te.end(), [](double v) { return std::isfinite(v); })) series.push_back({"test", te});
    loa_cli::ChartOptions chart;
    chart.title = "training loss (dashed: log 2)";
    chart.x_label = "epoch";
    chart.y_label = "mean loss";
    chart.log_y = false;
    chart.reference_lines = {std::log(2.0)};
    write_text(dir.file("training.svg"), loa_cli::line_chart(series, chart));
    const auto best = std::min_element(tr.begin(), tr.end(), [](double a, double b) {
      return std::isfinite(a) && (!std::isfinite(b) || a < b);
    });
    md << "## Training\n\nepochs: " << (tr.empty() ? 0 : tr.size() - 1) << ", epoch-0 loss: "
       << (tr.empty() ? NAN : tr[0]) << ", best loss: " << (tr.empty() ? NAN : *best) << " at epoch "
       << (best - tr.begin()) << "\n\n![training](training.svg)\n\n";
  }

  if (fs::exists(src / "table1.md")) {
    any = true;
    md << "## Equivariance table\n\n" << read_text(src / "table1.md") << "\n";
  }
  if (!any) throw Failure{kUsage, o.from + " holds no summary.json, history.csv or table1.md"};
  write_text(dir.file("report.md"), md.str());
  std::cout << "wrote " << dir.final_file("report.md").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned quasi-Newton optimization: training, benchmarks and equivariance checks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "root seed for every random stream")->capture_default_str();
    s->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto run_flags = [&](CLI::App* s) {
    s->add_option("--k", o.k, "iterations")->capture_default_str();
    s->add_option("--gamma", o.gamma, "step size (0: algorithm default)")->capture_default_str();
    s->add_flag("--line-search", o.line_search, "Armijo backtracking along the search direction");
    s->add_option("--problems", o.problems, "problem manifest (default: 20 quadratics, n = 20)");
    s->add_option("--weights", o.weights, "learned weights file");
  };

  auto* gen = app.add_subcommand("gen-data", "write problem manifests");
  common(gen);
  gen->add_option("--kind", o.kind, "quadratic or logistic")->capture_default_str();
  gen->add_option("--n", o.n, "dimension")->capture_default_str();
  gen->add_option("--count", o.count, "number of functions")->capture_default_str();
  gen->add_option("--inits", o.inits, "initializations per function")->capture_default_str();
  gen->add_option("--test-count", o.test_count, "functions in a held-out set")->capture_default_str();

  auto* train = app.add_subcommand("train", "train the learned model");
  common(train);
  train->add_option("--problems", o.problems, "problem or training manifest (default: 20 quadratics, n = 20)");
  train->add_option("--test", o.test_problems, "held-out problem manifest");
  train->add_option("--weights", o.weights, "starting weights (default: from the seed)");
  train->add_option("--k", o.k, "unrolled iterations")->capture_default_str();
  train->add_option("--gamma", o.gamma, "step size")->capture_default_str();
  train->add_option("--epochs", o.epochs, "epochs")->capture_default_str();
  train->add_option("--batch", o.batch, "problems per mini-batch")->capture_default_str();
  train->add_option("--segment", o.segment, "iterations between detaches")->capture_default_str();
  train->add_flag("--no-coincident-init", o.no_coincident_init, "start from random weights");
  train->add_flag("--parallel", o.parallel, "evaluate batch members on threads");

  auto* eval = app.add_subcommand("eval", "compare learned weights with BFGS");
  common(eval);
  run_flags(eval);

  auto* bench = app.add_subcommand("bench", "run algorithms on a problem set");
  common(bench);
  run_flags(bench);
  bench->add_option("--algos", o.algos, "comma list of gd, hb, newton, adam, bfgs, loa-bfgs")->capture_default_str();
  bench->add_flag("!--no-svg", o.svg, "skip the charts");

  auto* equiv = app.add_subcommand("equiv-check", "reproduce the equivariance table");
  common(equiv);
  equiv->add_option("--tol", o.tol, "pass tolerance")->capture_default_str();
  equiv->add_option("--weights", o.weights, "weights for the learned row (default: seeded)");
  equiv->add_flag("--corrupt-adam", o.corrupt_adam, "negative control: isotropic ADAM second moment");

  auto* report = app.add_subcommand("report", "charts and Markdown from earlier outputs");
  common(report);
  report->add_option("--from", o.from, "directory written by bench, train or equiv-check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (train->parsed()) return cmd_train(o, *train);
    if (eval->parsed()) return cmd_eval(o);
    if (bench->parsed()) return cmd_bench(o);
    if (equiv->parsed()) return cmd_equiv_check(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
