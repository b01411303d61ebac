#pragma once

// Dense f64 linear algebra used by everything else in the library.
//
// Storage is column-major. All reference kernels accumulate in a fixed
// order (ascending index) and the library is built with -ffp-contract=off,
// so results are bit-reproducible for a given input.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "auxref/rng.hpp"

namespace auxref {

class DenseVector {
 public:
  explicit DenseVector(std::size_t n);
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  static DenseVector unit(std::size_t n, std::size_t i);

  std::size_t size() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> span() const { return data_; }
  std::span<double> span() { return data_; }
  const std::vector<double>& values() const { return data_; }

 private:
  std::vector<double> data_;
};

class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major);

  static DenseMatrix identity(std::size_t d);
  static DenseMatrix diagonal(std::span<const double> diag);
  // Row-major literal, for tests and small constants.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix outer(const DenseVector& a, const DenseVector& b);
  static DenseMatrix from_columns(std::span<const DenseVector> columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }

  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  DenseVector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  DenseMatrix transpose() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

// ---- vector kernels -------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);
double norm_inf(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

DenseVector operator+(const DenseVector& a, const DenseVector& b);
DenseVector operator-(const DenseVector& a, const DenseVector& b);
DenseVector operator*(double s, const DenseVector& a);
double max_abs_diff(const DenseVector& a, const DenseVector& b);

// ---- matrix kernels -------------------------------------------------------

// Mx as a column sweep: y_i accumulates M(i,j) x_j for j = 0, 1, ...
DenseVector matvec(const DenseMatrix& m, const DenseVector& x);
// Writes M * x into out; the kernel behind matvec and matmul.
void matvec_into(const DenseMatrix& m, std::span<const double> x, std::span<double> out);
// M^T x as one dot product per column of M.
DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& x);
// Column j of the result is bit-identical to matvec(a, b.column(j)).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

double max_abs(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
// ||M - M^T||_max
double symmetry_defect(const DenseMatrix& m);
// ||Q^T Q - I||_max
double orthogonality_defect(const DenseMatrix& q);

// ---- LU -------------------------------------------------------------------

// Partial-pivoting LU. Construction throws SingularMatrix when a pivot falls
// below kSingularPivot in magnitude.
class LuFactorization {
 public:
  static constexpr double kSingularPivot = 1e-300;

  explicit LuFactorization(const DenseMatrix& m);

  std::size_t dim() const { return n_; }
  double determinant() const;
  double log_abs_determinant() const;
  // +1 or -1
  int determinant_sign() const;
  DenseVector solve(const DenseVector& b) const;

 private:
  std::size_t n_;
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  int perm_sign_ = 1;
};

struct LuDetSolve {
  double det;
  DenseVector x;
};

LuDetSolve lu_det_and_solve(const DenseMatrix& m, const DenseVector& b);
double lu_det(const DenseMatrix& m);

// ---- symmetric eigenproblems ----------------------------------------------

struct EigenBounds {
  double lambda_min;
  double lambda_max;
};

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column i pairs with values[i]
};

// Cyclic Jacobi. Throws NotSymmetric unless ||M - M^T||_max <= 1e-10 ||M||_max.
SymmetricEigen sym_eig(const DenseMatrix& m);
EigenBounds sym_eig_bounds(const DenseMatrix& m);

struct PowerIterationResult {
  double sigma_max;
  // relative change of the estimate over the last iteration
  double residual;
  int iterations;
  bool converged;
};

// Largest singular value by power iteration on M^T M.
PowerIterationResult power_iteration_sigma_max(const DenseMatrix& m, int iters, double tol,
                                               SeededRng& rng);

// ---- random fill helpers ----------------------------------------------------

DenseVector random_gaussian_vector(std::size_t n, SeededRng& rng);
DenseMatrix random_gaussian_matrix(std::size_t rows, std::size_t cols, SeededRng& rng);
DenseVector random_unit_vector(std::size_t n, SeededRng& rng);

}  // namespace auxref
