#include "loa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "loa/errors.hpp"

namespace loa {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": size mismatch (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Shape: return "ShapeError";
    case ErrorCode::SymmetryViolation: return "SymmetryViolation";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::Eval: return "EvalError";
    case ErrorCode::Dimension: return "DimensionError";
    case ErrorCode::Singular: return "SingularError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Divergence: return "DivergenceError";
    case ErrorCode::Role: return "RoleError";
    case ErrorCode::Capability: return "CapabilityError";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::StationaryStart: return "StationaryStartError";
    case ErrorCode::Format: return "FormatError";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::Usage: return "UsageError";
    case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

// ---- Vector ---------------------------------------------------------------

Vector& Vector::operator+=(const Vector& other) {
  require_same_size(size(), other.size(), "vector add");
  for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_size(size(), other.size(), "vector sub");
  for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) {
  for (double& v : a) v = -v;
  return a;
}
Vector operator*(double s, Vector a) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double sum(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

bool all_finite(const Vector& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector hadamard(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// ---- Matrix ---------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("matrix add: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("matrix sub: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Vector matvec(const Matrix& m, const Vector& v) {
  require_same_size(m.cols(), v.size(), "matvec");
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * v[k];
    out[i] = s;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  require_same_size(m.rows(), v.size(), "matvec_transposed");
  Vector out(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * vi;
  }
  return out;
}

Matrix outer(const Vector& u, const Vector& v) {
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

Matrix hstack(std::span<const Vector> columns) {
  if (columns.empty()) return {};
  const std::size_t n = columns.front().size();
  Matrix m(n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    require_same_size(n, columns[j].size(), "hstack");
    for (std::size_t i = 0; i < n; ++i) m(i, j) = columns[j][i];
  }
  return m;
}

Vector column(const Matrix& m, std::size_t j) {
  if (j >= m.cols()) throw ShapeError("column index out of range");
  Vector v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, j);
  return v;
}

Vector as_vector(const Matrix& column_matrix) {
  if (column_matrix.cols() != 1) throw ShapeError("as_vector: expected a single column");
  return Vector(column_matrix.values());
}

Matrix as_column(const Vector& v) { return Matrix(v.size(), 1, v.values()); }

Matrix relu(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = m(i, j) > 0.0 ? m(i, j) : 0.0;
  return m;
}

static double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

Matrix mean_rows(const Matrix& m) {
  Matrix out(1, m.cols());
  std::vector<double> col(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    out(0, j) = sorted_sum(col) / static_cast<double>(m.rows());
  }
  return out;
}

Matrix broadcast_rows(const Matrix& row, std::size_t n) {
  if (row.rows() != 1) throw ShapeError("broadcast_rows: expected a single row");
  Matrix out(n, row.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < row.cols(); ++j) out(i, j) = row(0, j);
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row count mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

double max_abs(const Matrix& m) {
  double a = 0.0;
  for (double v : m.values()) a = std::max(a, std::abs(v));
  return a;
}

double norm_inf(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

double asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("asymmetry: matrix not square");
  double a = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) a = std::max(a, std::abs(m(i, j) - m(j, i)));
  return a;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  Matrix diff = m - transpose(m);
  return norm_inf(diff) <= rel_tol * norm_inf(m);
}

Vector solve_cholesky(const Matrix& spd, const Vector& rhs) {
  const std::size_t n = spd.rows();
  if (spd.cols() != n) throw ShapeError("solve_cholesky: matrix not square");
  require_same_size(n, rhs.size(), "solve_cholesky");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw SingularError("matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

Vector solve_lu(Matrix a, Vector rhs) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("solve_lu: matrix not square");
  require_same_size(n, rhs.size(), "solve_lu");
  const double scale = std::max(max_abs(a), 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= 1e-14 * scale) throw SingularError("matrix is singular to working precision");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// ---- Symmetric eigendecomposition ----------------------------------------

SymEigen sym_eigen(const Matrix& m, int max_sweeps) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw ShapeError("sym_eigen: matrix not square");
  if (!is_symmetric(m, 1e-10)) throw SymmetryViolation("sym_eigen: input is not symmetric");

  Matrix a = m;
  // Work on the exactly symmetric part so rotations stay consistent.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);

  double frob2 = 0.0;
  for (double x : a.values()) frob2 += x * x;

  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * frob2 || off == 0.0) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw EigenFailure("Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

EigenRange eigen_range(const Matrix& m) {
  const SymEigen e = sym_eigen(m);
  if (e.values.empty()) return {};
  return {e.values[0], e.values[e.values.size() - 1]};
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h) {
  if (!(h > 0.0)) throw UsageError("finite_diff_grad: step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvalError("finite_diff_grad: non-finite objective at coordinate " + std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---- Rng ------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

Rng Rng::substream(std::string_view label) const {
  return Rng(mix64(key_ ^ fnv1a(label)) + kGolden, 0);
}

Rng Rng::substream(std::string_view label, std::uint64_t index) const {
  return Rng(mix64(substream(label).key_ + mix64(index + 1)), 0);
}

std::uint64_t Rng::next_u64() { return mix64(key_ + (++counter_) * kGolden); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  const unsigned __int128 p = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::size_t>(p >> 64);
}

Vector random_normal(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q = Matrix::identity(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Vector v = random_normal(rng, n);
    const double vv = dot(v, v);
    if (vv == 0.0) continue;
    // q ← (I − 2vvᵀ/vᵀv)·q
    const Vector vq = matvec_transposed(q, v);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q(i, j) -= 2.0 * v[i] * vq[j] / vv;
  }
  return q;
}

std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  rng.shuffle(std::span<std::size_t>(p));
  return p;
}

}  // namespace loa
