#pragma once

// Reference computations for the tests. They deliberately avoid the library's
// fast paths: reflections are materialized densely, determinants come from
// Laplace expansion, derivatives from central differences.

#include <cmath>
#include <functional>
#include <vector>

#include "auxref/linalg.hpp"

namespace auxref::oracle {

inline DenseMatrix dense_reflection(const DenseVector& v) {
  const std::size_t d = v.size();
  const double vv = squared_norm(v.span());
  DenseMatrix h = DenseMatrix::identity(d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) h(i, j) -= 2.0 * v[i] * v[j] / vv;
  }
  return h;
}

// f(x) = H(Wx) x with H built as a dense matrix.
inline DenseVector dense_forward(const DenseMatrix& w, const DenseVector& x) {
  return matvec(dense_reflection(matvec(w, x)), x);
}

// J = H(Wx) A - 2 Wx x^T W / ||Wx||^2 with A = I - 2 (x^T W^T x / ||Wx||^2) W,
// assembled term by term from dense products.
inline DenseMatrix dense_jacobian(const DenseMatrix& w, const DenseVector& x) {
  const std::size_t d = x.size();
  const DenseVector u = matvec(w, x);
  const double uu = squared_norm(u.span());
  const double xwx = dot(x.span(), u.span());
  const DenseMatrix a = DenseMatrix::identity(d) - (2.0 * xwx / uu) * w;
  const DenseVector xtw = matvec_transposed(w, x);
  return matmul(dense_reflection(u), a) - (2.0 / uu) * DenseMatrix::outer(u, xtw);
}

inline DenseMatrix central_jacobian(const std::function<DenseVector(const DenseVector&)>& f,
                                    const DenseVector& x, double h) {
  const std::size_t d = x.size();
  DenseMatrix j(d, d);
  for (std::size_t c = 0; c < d; ++c) {
    DenseVector xp = x;
    DenseVector xm = x;
    xp[c] += h;
    xm[c] -= h;
    const DenseVector fp = f(xp);
    const DenseVector fm = f(xm);
    for (std::size_t r = 0; r < d; ++r) j(r, c) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return j;
}

// d(g^T f(x; W)) / dW by central differences, h = 1e-5 max(1, |W_ij|).
inline DenseMatrix central_weight_gradient(const DenseMatrix& w, const DenseVector& x,
                                           const DenseVector& g) {
  DenseMatrix grad(w.rows(), w.cols());
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double h = 1e-5 * std::max(1.0, std::abs(w(r, c)));
      DenseMatrix wp = w;
      DenseMatrix wm = w;
      wp(r, c) += h;
      wm(r, c) -= h;
      const double lp = dot(g.span(), dense_forward(wp, x).span());
      const double lm = dot(g.span(), dense_forward(wm, x).span());
      grad(r, c) = (lp - lm) / (2.0 * h);
    }
  }
  return grad;
}

// Laplace expansion along the first row; fine for d <= 8.
inline double laplace_det(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    DenseMatrix minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t cc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, cc++) = m(i, j);
      }
    }
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    det += sign * m(0, c) * laplace_det(minor);
  }
  return det;
}

inline DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi,
                                  SeededRng& rng) {
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline DenseVector uniform_vector(std::size_t n, double lo, double hi, SeededRng& rng) {
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline DenseMatrix random_symmetric(std::size_t d, SeededRng& rng) {
  const DenseMatrix g = random_gaussian_matrix(d, d, rng);
  return 0.5 * (g + g.transpose());
}

}  // namespace auxref::oracle
