#pragma once

// Plain Householder reflections H(v) = I - 2 v v^T / ||v||^2 and sequential
// chains H(v_1) ... H(v_k), the baseline representation of orthogonal maps.

#include <cstddef>
#include <vector>

#include "auxref/linalg.hpp"
#include "auxref/rng.hpp"

namespace auxref {

// Squared-norm floor below which a vector cannot define a reflection.
inline constexpr double kDegenerateSquaredNorm = 1e-24;

class ReflectionVector {
 public:
  // Throws DegenerateReflection if ||v||^2 <= kDegenerateSquaredNorm.
  explicit ReflectionVector(DenseVector v);

  std::size_t size() const { return v_.size(); }
  const DenseVector& vector() const { return v_; }
  double squared_norm() const { return squared_norm_; }

 private:
  DenseVector v_;
  double squared_norm_;
};

// Ordered list v_1 ... v_k acting as H(v_1) ... H(v_k). Application runs
// right to left: v_k touches the input first. An empty chain is the identity.
class ReflectionChain {
 public:
  explicit ReflectionChain(std::size_t dim) : dim_(dim) {}
  ReflectionChain(std::size_t dim, std::vector<ReflectionVector> vs);

  std::size_t dim() const { return dim_; }
  std::size_t length() const { return vs_.size(); }
  bool empty() const { return vs_.empty(); }
  const std::vector<ReflectionVector>& vectors() const { return vs_; }

  // Appends on the right, i.e. the new reflection is applied first.
  void push_back(ReflectionVector v);

 private:
  std::size_t dim_;
  std::vector<ReflectionVector> vs_;
};

DenseVector reflect(const ReflectionVector& v, const DenseVector& x);
// In-place x <- H(v) x on a raw column.
void reflect_in_place(const ReflectionVector& v, std::span<double> x);

DenseVector chain_apply(const ReflectionChain& chain, const DenseVector& x);

// Columns of X are samples. The k reflections run as k sequential rank-one
// updates over the whole batch; `threads` > 1 splits the columns only, so the
// result is bit-identical to the single-threaded run.
DenseMatrix chain_apply_batch(const ReflectionChain& chain, const DenseMatrix& x,
                              int threads = 1);

// The dense product H(v_1) ... H(v_k).
DenseMatrix materialize(const ReflectionChain& chain);
DenseMatrix materialize(const ReflectionVector& v);

// v = x - y, so that H(v) x = y. Requires ||x|| == ||y|| (to 1e-8 relative).
ReflectionVector align(const DenseVector& x, const DenseVector& y);

// Chain of at most 2d reflections whose product is Q.
ReflectionChain decompose_orthogonal(const DenseMatrix& q);

// Q factor of a Gaussian matrix, with R's diagonal made positive.
DenseMatrix random_orthogonal(std::size_t d, SeededRng& rng);

// k reflections around Gaussian vectors.
ReflectionChain random_chain(std::size_t d, std::size_t k, SeededRng& rng);

}  // namespace auxref
