#include "auxref/householder.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "auxref/errors.hpp"
#include "detail/parallel.hpp"

namespace auxref {
namespace {

struct Triangularization {
  std::vector<ReflectionVector> reflectors;  // in the order they were applied
  DenseMatrix r;
};

// Householder QR: H(v_m) ... H(v_1) A = R, hence A = H(v_1) ... H(v_m) R.
// Columns whose subdiagonal part is already negligible get no reflection.
Triangularization triangularize(DenseMatrix a) {
  const std::size_t n = a.rows();
  std::vector<ReflectionVector> reflectors;
  for (std::size_t j = 0; j + 1 < n && j < a.cols(); ++j) {
    const auto cj = a.col(j);
    double off = 0.0;
    for (std::size_t i = j + 1; i < n; ++i) off += cj[i] * cj[i];
    const double total = off + cj[j] * cj[j];
    if (off <= 1e-30 * total) {
      for (std::size_t i = j + 1; i < n; ++i) a(i, j) = 0.0;
      continue;
    }
    const double alpha = -std::copysign(std::sqrt(total), cj[j]);
    DenseVector v(n);
    for (std::size_t i = j; i < n; ++i) v[i] = cj[i];
    v[j] -= alpha;
    ReflectionVector rv(std::move(v));
    for (std::size_t k = j + 1; k < a.cols(); ++k) reflect_in_place(rv, a.col(k));
    a(j, j) = alpha;
    for (std::size_t i = j + 1; i < n; ++i) a(i, j) = 0.0;
    reflectors.push_back(std::move(rv));
  }
  return {std::move(reflectors), std::move(a)};
}

}  // namespace

ReflectionVector::ReflectionVector(DenseVector v)
    : v_(std::move(v)), squared_norm_(auxref::squared_norm(v_.span())) {
  if (!(squared_norm_ > kDegenerateSquaredNorm)) {
    throw DegenerateReflection("reflection vector has squared norm " +
                               std::to_string(squared_norm_));
  }
}

ReflectionChain::ReflectionChain(std::size_t dim, std::vector<ReflectionVector> vs)
    : dim_(dim), vs_() {
  vs_.reserve(vs.size());
  for (auto& v : vs) push_back(std::move(v));
}

void ReflectionChain::push_back(ReflectionVector v) {
  if (v.size() != dim_) {
    throw DimensionMismatch("ReflectionChain: vector of length " + std::to_string(v.size()) +
                            " in chain of dim " + std::to_string(dim_));
  }
  vs_.push_back(std::move(v));
}

void reflect_in_place(const ReflectionVector& v, std::span<double> x) {
  if (x.size() != v.size()) throw DimensionMismatch("reflect: dimension mismatch");
  const double scale = -2.0 * dot(v.vector().span(), x) / v.squared_norm();
  axpy(scale, v.vector().span(), x);
}

DenseVector reflect(const ReflectionVector& v, const DenseVector& x) {
  DenseVector y = x;
  reflect_in_place(v, y.span());
  return y;
}

DenseVector chain_apply(const ReflectionChain& chain, const DenseVector& x) {
  if (x.size() != chain.dim()) throw DimensionMismatch("chain_apply: dimension mismatch");
  DenseVector y = x;
  const auto& vs = chain.vectors();
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) reflect_in_place(*it, y.span());
  return y;
}

DenseMatrix chain_apply_batch(const ReflectionChain& chain, const DenseMatrix& x, int threads) {
  if (x.rows() != chain.dim()) throw DimensionMismatch("chain_apply_batch: dimension mismatch");
  DenseMatrix y = x;
  const auto& vs = chain.vectors();
  detail::parallel_blocks(y.cols(), threads, [&](std::size_t begin, std::size_t end) {
    for (auto it = vs.rbegin(); it != vs.rend(); ++it) {
      for (std::size_t j = begin; j < end; ++j) reflect_in_place(*it, y.col(j));
    }
  });
  return y;
}

DenseMatrix materialize(const ReflectionChain& chain) {
  return chain_apply_batch(chain, DenseMatrix::identity(chain.dim()));
}

DenseMatrix materialize(const ReflectionVector& v) {
  std::vector<ReflectionVector> one{v};
  return materialize(ReflectionChain(v.size(), std::move(one)));
}

ReflectionVector align(const DenseVector& x, const DenseVector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("align: dimension mismatch");
  const double nx = norm(x.span());
  const double ny = norm(y.span());
  if (std::abs(nx - ny) > 1e-8 * nx) {
    throw InvalidArgument("align: ||x|| = " + std::to_string(nx) + " but ||y|| = " +
                          std::to_string(ny));
  }
  return ReflectionVector(x - y);
}

ReflectionChain decompose_orthogonal(const DenseMatrix& q) {
  if (!q.square()) throw DimensionMismatch("decompose_orthogonal: matrix not square");
  const double defect = orthogonality_defect(q);
  if (defect > 1e-8) {
    throw NotOrthogonal("decompose_orthogonal: ||Q^T Q - I||_max = " + std::to_string(defect));
  }
  const std::size_t d = q.rows();
  auto tri = triangularize(q);
  ReflectionChain chain(d, std::move(tri.reflectors));
  // R is orthogonal and upper triangular, so it is diag(+-1); each -1 becomes
  // an axis reflection applied before the QR reflectors.
  for (std::size_t i = 0; i < d; ++i) {
    if (tri.r(i, i) < 0.0) chain.push_back(ReflectionVector(DenseVector::unit(d, i)));
  }
  return chain;
}

DenseMatrix random_orthogonal(std::size_t d, SeededRng& rng) {
  if (d == 0) throw InvalidArgument("random_orthogonal: d must be >= 1");
  auto tri = triangularize(random_gaussian_matrix(d, d, rng));
  DenseMatrix q = materialize(ReflectionChain(d, std::move(tri.reflectors)));
  for (std::size_t j = 0; j < d; ++j) {
    if (tri.r(j, j) < 0.0) {
      for (double& v : q.col(j)) v = -v;
    }
  }
  return q;
}

ReflectionChain random_chain(std::size_t d, std::size_t k, SeededRng& rng) {
  ReflectionChain chain(d);
  while (chain.length() < k) {
    DenseVector v = random_gaussian_vector(d, rng);
    if (squared_norm(v.span()) > 1e-12) chain.push_back(ReflectionVector(std::move(v)));
  }
  return chain;
}

}  // namespace auxref
