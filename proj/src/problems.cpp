#include "loa/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "loa/errors.hpp"

namespace loa {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix gram(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix g(n, n);
  for (std::size_t r = 0; r < m; ++r) {
    const auto row = a.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      for (std::size_t j = i; j < n; ++j) g(i, j) += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

Matrix with_ones_column(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) a(i, j) = x(i, j);
    a(i, x.cols()) = 1.0;
  }
  return a;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Logistic loss (1/m)Σ[softplus(aᵢᵀx) − bᵢaᵢᵀx] + (η/2)‖x‖² on rows of a.
struct Logistic {
  Matrix a;
  Vector b;
  double eta;

  double value(const Vector& x) const {
    const Vector z = matvec(a, x);
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += softplus(z[i]) - b[i] * z[i];
    return s / static_cast<double>(z.size()) + 0.5 * eta * dot(x, x);
  }
  Vector gradient(const Vector& x) const {
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]) - b[i];
    Vector g = matvec_transposed(a, r);
    g *= 1.0 / static_cast<double>(r.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += eta * x[i];
    return g;
  }
  Matrix hessian(const Vector& x) const {
    const Vector z = matvec(a, x);
    const std::size_t m = a.rows(), n = a.cols();
    Matrix h(n, n);
    for (std::size_t r = 0; r < m; ++r) {
      const double s = sigmoid(z[r]);
      const double w = s * (1 - s);
      const auto row = a.row(r);
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = w * row[i];
        if (wi == 0.0) continue;
        for (std::size_t j = i; j < n; ++j) h(i, j) += wi * row[j];
      }
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) h(i, j) *= inv_m;
      h(i, i) += eta;
      for (std::size_t j = 0; j < i; ++j) h(i, j) = h(j, i);
    }
    return h;
  }
};

Problem logistic_problem(Matrix a, Vector labels, double eta, std::string label) {
  if (!(eta > 0)) throw UsageError("logistic regularization must be positive");
  if (a.rows() != labels.size()) throw ShapeError("row count differs from label count");
  for (double v : labels)
    if (v != 0.0 && v != 1.0) throw UsageError("logistic labels must be 0 or 1");
  auto lg = std::make_shared<const Logistic>(Logistic{std::move(a), std::move(labels), eta});
  Problem p;
  p.label = std::move(label);
  p.dim = lg->a.cols();
  p.objective = [lg](const Vector& x) { return lg->value(x); };
  p.gradient = [lg](const Vector& x) { return lg->gradient(x); };
  p.hessian = [lg](const Vector& x) { return lg->hessian(x); };
  if (p.dim <= 200 && lg->a.rows() > 0) {
    p.lipschitz = 0.25 * eigen_range(gram(lg->a)).max / static_cast<double>(lg->a.rows()) + eta;
  }
  p.f_star = reference_minimum(p, Vector(p.dim));
  return p;
}

}  // namespace

Problem make_quadratic(std::shared_ptr<const Quadratic> q, std::string label) {
  Problem p;
  p.label = std::move(label);
  p.dim = q->a.cols();
  p.objective = [q](const Vector& x) { return q->value(x); };
  p.gradient = [q](const Vector& x) { return q->gradient(x); };
  const Matrix h = q->hessian();
  p.hessian = [h](const Vector&) { return h; };
  p.f_star = 0.0;
  p.lipschitz = eigen_range(h).max;
  p.quadratic = std::move(q);
  return p;
}

Problem gen_quadratic(std::size_t n, Rng& rng, const QuadraticSampling& s) {
  if (n < 2) throw DimensionError("quadratic dimension must be at least 2");
  Vector d(n);
  d[0] = rng.uniform(s.lambda_min_lo, s.lambda_min_hi);
  d[1] = rng.uniform(s.lambda_max_lo, s.lambda_max_hi);
  if (d[1] < d[0]) std::swap(d[0], d[1]);
  for (std::size_t i = 2; i < n; ++i) d[i] = rng.uniform(d[0], d[1]);

  Matrix g = random_normal(rng, n, n);
  const Matrix p = sym_eigen(g + transpose(g)).vectors;
  Matrix a = matmul(matmul(p, Matrix::diagonal(d)), transpose(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

  Vector b(n);
  for (auto& v : b) v = rng.uniform(s.b_lo, s.b_hi);

  auto q = std::make_shared<Quadratic>();
  q->a_t = transpose(a);
  q->a = std::move(a);
  q->b = std::move(b);
  return make_quadratic(std::move(q), "quadratic");
}

Problem gen_logistic_synthetic(std::size_t n, std::size_t m_per_class, double eta, Rng& rng) {
  if (n < 1 || m_per_class < 1) throw DimensionError("logistic problem needs n >= 1 and M >= 1");
  Vector mean0(n), mean1(n);
  for (std::size_t j = 0; j < n; ++j) mean0[j] = -1.0 + rng.normal();
  for (std::size_t j = 0; j < n; ++j) mean1[j] = 1.0 + rng.normal();
  Matrix pts(2 * m_per_class, n);
  Vector labels(2 * m_per_class);
  for (std::size_t i = 0; i < 2 * m_per_class; ++i) {
    const bool second = i >= m_per_class;
    const Vector& mu = second ? mean1 : mean0;
    for (std::size_t j = 0; j < n; ++j) pts(i, j) = mu[j] + rng.normal();
    labels[i] = second ? 1.0 : 0.0;
  }
  return logistic_problem(with_ones_column(pts), std::move(labels), eta, "logistic");
}

Problem make_logistic(const Dataset& data, double eta, std::string label) {
  return logistic_problem(with_ones_column(data.features), data.labels, eta, std::move(label));
}

Problem make_ridge(const Dataset& data, double lambda, std::string label) {
  if (lambda < 0) throw UsageError("ridge regularization must be nonnegative");
  if (data.rows() != data.labels.size()) throw ShapeError("row count differs from label count");
  struct Ridge {
    Matrix a;
    Vector b;
    double lambda;
    Matrix h;
  };
  auto r = std::make_shared<Ridge>();
  r->a = data.features;
  r->b = data.labels;
  r->lambda = lambda;
  r->h = 2.0 * gram(r->a);
  for (std::size_t i = 0; i < r->h.rows(); ++i) r->h(i, i) += lambda;
  std::shared_ptr<const Ridge> rc = r;

  Problem p;
  p.label = std::move(label);
  p.dim = data.cols();
  p.objective = [rc](const Vector& x) {
    const Vector res = matvec(rc->a, x) - rc->b;
    return dot(res, res) + 0.5 * rc->lambda * dot(x, x);
  };
  p.gradient = [rc](const Vector& x) {
    Vector g = 2.0 * matvec_transposed(rc->a, matvec(rc->a, x) - rc->b);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += rc->lambda * x[i];
    return g;
  };
  p.hessian = [rc](const Vector&) { return rc->h; };
  const Vector x_star = solve_cholesky(rc->h, 2.0 * matvec_transposed(rc->a, rc->b));
  p.f_star = p.objective(x_star);
  p.lipschitz = eigen_range(rc->h).max;
  return p;
}

void make_init_pair(Problem& problem, Rng& rng, double step) {
  if (!(step > 0)) throw UsageError("init step must be positive");
  problem.x_prev = random_normal(rng, problem.dim);
  problem.x0 = problem.x_prev - step * problem.gradient(problem.x_prev);
}

double reference_minimum(const Problem& problem, const Vector& start, double tol, int max_iter) {
  if (!problem.has_hessian()) throw CapabilityError("reference solve needs a Hessian");
  Vector x = start;
  double f = problem.objective(x);
  double best = f;
  int stalled = 0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = problem.gradient(x);
    if (norm(g) <= tol) break;
    Vector d;
    try {
      d = -solve_cholesky(problem.hessian(x), g);
    } catch (const SingularError&) {
      d = -g;
    }
    const double slope = dot(g, d);
    double t = 1.0;
    Vector trial = x + t * d;
    double ft = problem.objective(trial);
    for (int k = 0; k < 60 && !(ft <= f + 1e-4 * t * slope); ++k) {
      t *= 0.5;
      trial = x + t * d;
      ft = problem.objective(trial);
    }
    if (!(ft <= f)) break;  // no further progress possible in floating point
    stalled = ft < best ? 0 : stalled + 1;
    if (stalled > 5) break;
    x = std::move(trial);
    f = ft;
    best = std::min(best, f);
  }
  return best;
}

double gradient_check(const Problem& problem, Rng& rng, int points, double h) {
  double worst = 0;
  for (int i = 0; i < points; ++i) {
    const Vector x = random_normal(rng, problem.dim);
    const Vector g = problem.gradient(x);
    const Vector fd = finite_diff_grad(problem.objective, x, h);
    const double err = norm(g - fd) / std::max(norm(fd), 1.0);
    worst = std::max(worst, err);
  }
  return worst;
}

Dataset parse_libsvm(std::istream& in, LabelMode mode) {
  std::vector<double> labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    double label;
    if (!parse_double(tok, label)) throw ParseError(lineno, "bad label '" + tok + "'");
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t last = 0;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(lineno, "expected index:value, got '" + tok + "'");
      std::size_t idx = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (res.ec != std::errc() || res.ptr != tok.data() + colon || idx == 0)
        throw ParseError(lineno, "bad index in '" + tok + "'");
      if (idx <= last) throw ParseError(lineno, "indices must be strictly increasing");
      double v;
      if (!parse_double(std::string_view(tok).substr(colon + 1), v))
        throw ParseError(lineno, "bad value in '" + tok + "'");
      entries.emplace_back(idx - 1, v);
      last = idx;
    }
    width = std::max(width, last);
    labels.push_back(label);
    rows.push_back(std::move(entries));
  }

  Dataset d;
  d.features = Matrix(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto [j, v] : rows[i]) d.features(i, j) = v;
  d.labels = Vector(labels.size());

  std::map<double, double> remap;
  if (mode == LabelMode::Binary && !labels.empty()) {
    const std::set<double> distinct(labels.begin(), labels.end());
    if (distinct.size() > 2) throw ParseError(0, "more than two distinct labels in a binary dataset");
    const bool already = std::all_of(distinct.begin(), distinct.end(),
                                     [](double v) { return v == 0.0 || v == 1.0; });
    if (already) {
      for (double v : distinct) remap[v] = v;
    } else if (distinct.size() == 2) {
      remap[*distinct.begin()] = 0.0;
      remap[*distinct.rbegin()] = 1.0;
    } else {
      remap[*distinct.begin()] = *distinct.begin() > 0 ? 1.0 : 0.0;
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    d.labels[i] = mode == LabelMode::Binary ? remap[labels[i]] : labels[i];
  return d;
}

void serialize_libsvm(const Dataset& data, std::ostream& out) {
  char buf[64];
  auto fmt = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
  };
  const std::size_t w = data.cols();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out << fmt(data.labels[i]);
    for (std::size_t j = 0; j < w; ++j) {
      const double v = data.features(i, j);
      // The last column is always written so the width survives a round trip.
      if (v != 0.0 || j + 1 == w) out << ' ' << j + 1 << ':' << fmt(v);
    }
    out << '\n';
  }
}

Dataset parse_csv_numeric(std::istream& in, std::size_t target_column) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size() && numeric; ++j) numeric = parse_double(cells[j], row[j]);
    if (!numeric) {
      if (rows.empty() && width == 0) {
        width = cells.size();  // header line
        continue;
      }
      throw ParseError(lineno, "non-numeric cell");
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) throw ParseError(lineno, "ragged row");
    rows.push_back(std::move(row));
  }
  Dataset d;
  if (rows.empty()) return d;
  if (target_column >= width) throw ShapeError("target column out of range");

  const std::size_t m = rows.size(), nf = width - 1;
  d.features = Matrix(m, nf);
  d.labels = Vector(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == target_column) d.labels[i] = rows[i][j];
      else d.features(i, c++) = rows[i][j];
    }
  }
  for (std::size_t j = 0; j < nf; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < m; ++i) mean += d.features(i, j);
    mean /= static_cast<double>(m);
    double var = 0;
    for (std::size_t i = 0; i < m; ++i) var += (d.features(i, j) - mean) * (d.features(i, j) - mean);
    var /= static_cast<double>(m);
    const double sd = std::sqrt(var);
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    for (std::size_t i = 0; i < m; ++i)
      d.features(i, j) = constant ? 0.0 : (d.features(i, j) - mean) / sd;
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& format,
                     std::size_t target_column, LabelMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  if (format == "libsvm") return parse_libsvm(in, mode);
  if (format == "csv") return parse_csv_numeric(in, target_column);
  throw FormatError("unknown dataset format '" + format + "'");
}

// ---- manifests ----

using nlohmann::json;

namespace {

std::pair<double, double> range_or(const json& e, const char* key, double lo, double hi) {
  if (!e.contains(key)) return {lo, hi};
  const auto& r = e.at(key);
  if (!r.is_array() || r.size() != 2) throw FormatError(std::string(key) + " must be [lo, hi]");
  return {r[0].get<double>(), r[1].get<double>()};
}

std::string entry_label(const json& e, const std::string& fallback) {
  return e.contains("label") ? e.at("label").get<std::string>() : fallback;
}

}  // namespace

ProblemSet load_problem_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  json m;
  try {
    m = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw FormatError(std::string("manifest is not valid JSON: ") + ex.what());
  }
  if (m.contains("config") && m.contains("problems") && m.at("problems").is_string()) {
    // Training manifest: the problem set lives in a referenced file.
    std::filesystem::path ref = m.at("problems").get<std::string>();
    if (ref.is_relative()) ref = base_dir / ref;
    return load_problem_manifest_file(ref);
  }
  if (!m.contains("problems") || !m.at("problems").is_array())
    throw FormatError("manifest needs a 'problems' array");

  ProblemSet set;
  try {
    const std::uint64_t seed = m.value("seed", std::uint64_t{0});
    const double init_step = m.contains("init") ? m.at("init").value("step", 1e-3) : 1e-3;
    const Rng root(seed);
    std::size_t index = 0;
    for (const auto& e : m.at("problems")) {
      const std::string kind = e.at("kind").get<std::string>();
      const Rng base = e.contains("seed") ? Rng(e.at("seed").get<std::uint64_t>())
                                          : root.substream("entry", index);
      const std::size_t count = e.value("count", std::size_t{1});
      const std::size_t inits = e.value("inits_per_function", std::size_t{1});
      if (count == 0 || inits == 0) throw FormatError("count and inits_per_function must be positive");

      auto add_with_inits = [&](const Problem& proto, std::size_t fn) {
        for (std::size_t j = 0; j < inits; ++j) {
          Problem p = proto;
          Rng r = base.substream("init", fn * inits + j);
          make_init_pair(p, r, e.value("init_step", init_step));
          p.label = proto.label + "-" + std::to_string(fn) + (inits > 1 ? "." + std::to_string(j) : "");
          set.problems.push_back(std::move(p));
        }
      };

      if (kind == "quadratic") {
        QuadraticSampling s;
        std::tie(s.lambda_min_lo, s.lambda_min_hi) = range_or(e, "lambda_min", 0.1, 1.0);
        std::tie(s.lambda_max_lo, s.lambda_max_hi) = range_or(e, "lambda_max", 1.0, 50.0);
        std::tie(s.b_lo, s.b_hi) = range_or(e, "b", 0.0, 15.0);
        const std::size_t n = e.at("n").get<std::size_t>();
        for (std::size_t i = 0; i < count; ++i) {
          Rng r = base.substream("quadratic", i);
          Problem p = gen_quadratic(n, r, s);
          p.label = entry_label(e, "quadratic-n" + std::to_string(n));
          add_with_inits(p, i);
        }
      } else if (kind == "logistic") {
        const std::size_t n = e.value("n", std::size_t{50});
        const std::size_t mpc = e.value("m_per_class", std::size_t{100});
        const double eta = e.value("eta", 1e-3);
        for (std::size_t i = 0; i < count; ++i) {
          Rng r = base.substream("logistic", i);
          Problem p = gen_logistic_synthetic(n, mpc, eta, r);
          p.label = entry_label(e, "logistic-n" + std::to_string(n));
          add_with_inits(p, i);
        }
      } else if (kind == "ridge" || kind == "logistic_dataset") {
        std::filesystem::path path = e.at("path").get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        const std::string format = e.value("format", path.extension() == ".csv" ? "csv" : "libsvm");
        const std::size_t target = e.value("target_column", std::size_t{0});
        const bool ridge = kind == "ridge";
        const Dataset d = load_dataset(path, format, target, ridge ? LabelMode::Raw : LabelMode::Binary);
        const std::string stem = path.stem().string();
        Problem p = ridge ? make_ridge(d, e.value("lambda", 1.0), entry_label(e, "ridge-" + stem))
                          : make_logistic(d, e.value("eta", 1e-3), entry_label(e, "logistic-" + stem));
        add_with_inits(p, 0);
      } else {
        throw FormatError("unknown problem kind '" + kind + "'");
      }
      ++index;
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad manifest field: ") + ex.what());
  }
  set.manifest = m.dump(2);
  return set;
}

ProblemSet load_problem_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_problem_manifest(ss.str(), path.parent_path());
}

std::string quadratic_suite_manifest(std::size_t n, std::size_t count, std::uint64_t seed,
                                     std::size_t inits_per_function) {
  json m = {{"version", 1},
            {"seed", seed},
            {"init", {{"step", 1e-3}}},
            {"problems",
             json::array({{{"kind", "quadratic"},
                           {"n", n},
                           {"count", count},
                           {"inits_per_function", inits_per_function}}})}};
  return m.dump(2);
}

}  // namespace loa
