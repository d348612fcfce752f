#pragma once

// Dense small-scale linear algebra, a counter-based PRNG with labelled
// sub-streams, and a cyclic Jacobi eigensolver for symmetric matrices.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace loa {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s);

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double norm_inf(const Vector& a);
double sum(const Vector& a);
bool all_finite(const Vector& a);
Vector hadamard(const Vector& a, const Vector& b);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& m, const Vector& v);
/// mᵀ·v without materializing the transpose.
Vector matvec_transposed(const Matrix& m, const Vector& v);
Matrix outer(const Vector& u, const Vector& v);
Matrix hstack(std::span<const Vector> columns);
Vector column(const Matrix& m, std::size_t j);
Vector as_vector(const Matrix& column_matrix);
Matrix as_column(const Vector& v);

// Coordinate-wise network helpers.
Matrix relu(Matrix m);
/// Column means as a 1×c row. Each column is summed in sorted order so the
/// result does not depend on the row order of the input.
Matrix mean_rows(const Matrix& m);
Matrix broadcast_rows(const Matrix& row, std::size_t n);
Matrix concat_cols(const Matrix& a, const Matrix& b);

inline double reciprocal(double x) { return 1.0 / x; }
inline double value_of(double x) { return x; }
inline const Vector& plain(const Vector& v) { return v; }
inline const Matrix& plain(const Matrix& m) { return m; }

double max_abs(const Matrix& m);
double norm_inf(const Matrix& m);  // max absolute row sum
bool all_finite(const Matrix& m);
/// ‖M − Mᵀ‖_∞ ≤ rel_tol·‖M‖_∞.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-10);
double asymmetry(const Matrix& m);  // max |m_ij − m_ji|

// Linear solves. Both throw SingularError.
Vector solve_cholesky(const Matrix& spd, const Vector& rhs);
Vector solve_lu(Matrix a, Vector rhs);

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition. Throws SymmetryViolation on a
/// non-symmetric input and EigenFailure when the sweep cap is reached.
SymEigen sym_eigen(const Matrix& m, int max_sweeps = 100);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};
EigenRange eigen_range(const Matrix& m);

/// Central differences (f(x + h e_i) − f(x − h e_i)) / 2h. Throws EvalError
/// when f returns a non-finite value.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h = 1e-6);

/// Counter-based generator: output i of a stream is a SplitMix64 finalizer
/// applied to key + i·φ. Sub-streams derive a fresh key from (key, label),
/// so independent consumers never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng substream(std::string_view label) const;
  Rng substream(std::string_view label, std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();   // standard Gaussian, Box-Muller
  std::size_t below(std::size_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

Vector random_normal(Rng& rng, std::size_t n);
Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols);

/// Product of n Householder reflections built from Gaussian vectors.
Matrix random_orthogonal(Rng& rng, std::size_t n);
std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n);

}  // namespace loa
