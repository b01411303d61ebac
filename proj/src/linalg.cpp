#include "auxref/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "auxref/errors.hpp"

namespace auxref {
namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteValue(std::string(what) + ": non-finite entry");
  }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

// ---- DenseVector ------------------------------------------------------------

DenseVector::DenseVector(std::size_t n) : data_(n, 0.0) {
  if (n == 0) throw InvalidArgument("DenseVector: length must be >= 1");
}

DenseVector::DenseVector(std::vector<double> values) : data_(std::move(values)) {
  if (data_.empty()) throw InvalidArgument("DenseVector: length must be >= 1");
  require_finite(data_, "DenseVector");
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : DenseVector(std::vector<double>(values)) {}

DenseVector DenseVector::unit(std::size_t n, std::size_t i) {
  DenseVector e(n);
  e[i] = 1.0;
  return e;
}

// ---- DenseMatrix ------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw InvalidArgument("DenseMatrix: empty shape");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  if (rows == 0 || cols == 0) throw InvalidArgument("DenseMatrix: empty shape");
  require_same_size(data_.size(), rows * cols, "DenseMatrix data length");
  require_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t d) {
  DenseMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  require_finite(m.data(), "DenseMatrix::diagonal");
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    require_same_size(row.size(), c, "DenseMatrix::from_rows row length");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  require_finite(m.data(), "DenseMatrix::from_rows");
  return m;
}

DenseMatrix DenseMatrix::outer(const DenseVector& a, const DenseVector& b) {
  DenseMatrix m(a.size(), b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) m(i, j) = a[i] * b[j];
  }
  return m;
}

DenseMatrix DenseMatrix::from_columns(std::span<const DenseVector> columns) {
  if (columns.empty()) throw InvalidArgument("DenseMatrix::from_columns: no columns");
  DenseMatrix m(columns.front().size(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) m.set_column(j, columns[j].span());
  return m;
}

DenseVector DenseMatrix::column(std::size_t j) const {
  auto c = col(j);
  return DenseVector(std::vector<double>(c.begin(), c.end()));
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> values) {
  require_same_size(values.size(), rows_, "set_column");
  std::copy(values.begin(), values.end(), col(j).begin());
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  }
  return t;
}

// ---- vector kernels ---------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

DenseVector operator+(const DenseVector& a, const DenseVector& b) {
  require_same_size(a.size(), b.size(), "vector +");
  DenseVector r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

DenseVector operator-(const DenseVector& a, const DenseVector& b) {
  require_same_size(a.size(), b.size(), "vector -");
  DenseVector r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

DenseVector operator*(double s, const DenseVector& a) {
  DenseVector r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= s;
  return r;
}

double max_abs_diff(const DenseVector& a, const DenseVector& b) {
  require_same_size(a.size(), b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- matrix kernels ---------------------------------------------------------

void matvec_into(const DenseMatrix& m, std::span<const double> x, std::span<double> out) {
  require_same_size(m.cols(), x.size(), "matvec");
  require_same_size(m.rows(), out.size(), "matvec output");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double xj = x[j];
    const auto cj = m.col(j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += cj[i] * xj;
  }
}

DenseVector matvec(const DenseMatrix& m, const DenseVector& x) {
  require_same_size(m.cols(), x.size(), "matvec");
  DenseVector y(m.rows());
  matvec_into(m, x.span(), y.span());
  return y;
}

DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& x) {
  require_same_size(m.rows(), x.size(), "matvec_transposed");
  DenseVector y(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) y[j] = dot(m.col(j), x.span());
  return y;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_size(a.cols(), b.rows(), "matmul");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) matvec_into(a, b.col(j), c.col(j));
  return c;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_size(a.rows(), b.rows(), "matrix + rows");
  require_same_size(a.cols(), b.cols(), "matrix + cols");
  DenseMatrix r = a;
  auto rd = r.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] += bd[i];
  return r;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_size(a.rows(), b.rows(), "matrix - rows");
  require_same_size(a.cols(), b.cols(), "matrix - cols");
  DenseMatrix r = a;
  auto rd = r.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] -= bd[i];
  return r;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix r = a;
  for (double& v : r.data()) v *= s;
  return r;
}

double max_abs(const DenseMatrix& m) { return norm_inf(m.data()); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) { return max_abs(a - b); }

double symmetry_defect(const DenseMatrix& m) {
  if (!m.square()) throw DimensionMismatch("symmetry_defect: matrix not square");
  double worst = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = j + 1; i < m.rows(); ++i) {
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    }
  }
  return worst;
}

double orthogonality_defect(const DenseMatrix& q) {
  if (!q.square()) throw DimensionMismatch("orthogonality_defect: matrix not square");
  double worst = 0.0;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      const double g = dot(q.col(i), q.col(j)) - (i == j ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(g));
    }
  }
  return worst;
}

// ---- LU -----------------------------------------------------------------------

LuFactorization::LuFactorization(const DenseMatrix& m) : n_(m.rows()), lu_(m), perm_(m.rows()) {
  if (!m.square()) throw DimensionMismatch("LU: matrix not square");
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  auto& a = lu_;
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n_; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        p = i;
      }
    }
    if (best < kSingularPivot) {
      throw SingularMatrix("LU: pivot " + std::to_string(best) + " at column " +
                           std::to_string(k));
    }
    if (p != k) {
      for (std::size_t j = 0; j < n_; ++j) std::swap(a(k, j), a(p, j));
      std::swap(perm_[k], perm_[p]);
      perm_sign_ = -perm_sign_;
    }
    const double pivot = a(k, k);
    for (std::size_t i = k + 1; i < n_; ++i) a(i, k) /= pivot;
    for (std::size_t j = k + 1; j < n_; ++j) {
      const double akj = a(k, j);
      if (akj == 0.0) continue;
      for (std::size_t i = k + 1; i < n_; ++i) a(i, j) -= a(i, k) * akj;
    }
  }
}

double LuFactorization::determinant() const {
  double det = perm_sign_;
  for (std::size_t i = 0; i < n_; ++i) det *= lu_(i, i);
  return det;
}

double LuFactorization::log_abs_determinant() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += std::log(std::abs(lu_(i, i)));
  return s;
}

int LuFactorization::determinant_sign() const {
  int sign = perm_sign_;
  for (std::size_t i = 0; i < n_; ++i) {
    if (lu_(i, i) < 0.0) sign = -sign;
  }
  return sign;
}

DenseVector LuFactorization::solve(const DenseVector& b) const {
  require_same_size(b.size(), n_, "LU solve");
  DenseVector x(n_);
  for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
  // L has unit diagonal.
  for (std::size_t j = 0; j < n_; ++j) {
    const double xj = x[j];
    for (std::size_t i = j + 1; i < n_; ++i) x[i] -= lu_(i, j) * xj;
  }
  for (std::size_t j = n_; j-- > 0;) {
    x[j] /= lu_(j, j);
    const double xj = x[j];
    for (std::size_t i = 0; i < j; ++i) x[i] -= lu_(i, j) * xj;
  }
  return x;
}

LuDetSolve lu_det_and_solve(const DenseMatrix& m, const DenseVector& b) {
  if (!m.square()) throw DimensionMismatch("lu_det_and_solve: matrix not square");
  require_same_size(m.rows(), b.size(), "lu_det_and_solve");
  LuFactorization lu(m);
  return {lu.determinant(), lu.solve(b)};
}

double lu_det(const DenseMatrix& m) { return LuFactorization(m).determinant(); }

// ---- symmetric eigenproblems ------------------------------------------------------

SymmetricEigen sym_eig(const DenseMatrix& m) {
  if (!m.square()) throw DimensionMismatch("sym_eig: matrix not square");
  const double scale = max_abs(m);
  if (symmetry_defect(m) > 1e-10 * scale) throw NotSymmetric("sym_eig: matrix not symmetric");

  const std::size_t n = m.rows();
  DenseMatrix a(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  }
  DenseMatrix v = DenseMatrix::identity(n);

  const double frob = norm(a.data());
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t q = 1; q < n; ++q) {
      for (std::size_t p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(2.0 * off) <= 1e-17 * frob || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.set_column(k, v.col(order[k]));
  }
  return out;
}

EigenBounds sym_eig_bounds(const DenseMatrix& m) {
  const auto eig = sym_eig(m);
  return {eig.values.front(), eig.values.back()};
}

PowerIterationResult power_iteration_sigma_max(const DenseMatrix& m, int iters, double tol,
                                               SeededRng& rng) {
  if (!m.square()) throw DimensionMismatch("power_iteration_sigma_max: matrix not square");
  if (max_abs(m) == 0.0) return {0.0, 0.0, 0, true};

  DenseVector x = random_unit_vector(m.cols(), rng);
  double estimate = 0.0;
  double residual = 1.0;
  for (int it = 1; it <= iters; ++it) {
    const DenseVector y = matvec(m, x);
    const double next = norm(y.span());
    residual = std::abs(next - estimate) / next;
    estimate = next;
    DenseVector z = matvec_transposed(m, y);
    const double zn = norm(z.span());
    if (zn == 0.0) return {estimate, 0.0, it, true};
    x = (1.0 / zn) * z;
    if (residual <= tol) return {estimate, residual, it, true};
  }
  return {estimate, residual, iters, false};
}

// ---- random fill helpers ----------------------------------------------------------

DenseVector random_gaussian_vector(std::size_t n, SeededRng& rng) {
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

DenseMatrix random_gaussian_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

DenseVector random_unit_vector(std::size_t n, SeededRng& rng) {
  for (;;) {
    DenseVector v = random_gaussian_vector(n, rng);
    const double nv = norm(v.span());
    if (nv > 1e-12) return (1.0 / nv) * v;
  }
}

}  // namespace auxref
