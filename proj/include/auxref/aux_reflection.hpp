#pragma once

// The auxiliary reflection f(x) = H(Wx) x.
//
// f is nonlinear but norm preserving. With W = I - U for an orthogonal U it
// reproduces x -> Ux exactly, so a single auxiliary reflection stands in for
// any chain of Householder reflections.
//
// Conventions at the points where H(Wx) is undefined:
//   * f(0) = 0;
//   * if ||Wx||^2 <= 1e-24 ||W||_max^2 ||x||^2 then f(x) = x (H(0) := I).
// When W = I - U the second case is exactly the fixed-point set of U, so the
// identity f(x) = Ux survives there too. Jacobian-based operations reject
// both points with DegenerateReflection.

#include <optional>

#include "auxref/linalg.hpp"

namespace auxref {

struct JacobianParts {
  DenseMatrix J;  // H(u) A - 2 u x^T W / ||u||^2
  DenseMatrix A;  // I - c W
  DenseVector u;  // W x
  double c;       // 2 x^T W^T x / ||u||^2
};

struct LogAbsDet {
  double logabsdet;
  // +1 or -1; 0 only if the rank-one factor vanishes exactly (logabsdet = -inf).
  int sign;
};

enum class DetPath {
  kAuto,       // eigen path when enabled, LU otherwise
  kLu,         // LU of A per sample
  kSymmetric,  // cached eigendecomposition of a symmetric W
};

class AuxReflection {
 public:
  static constexpr double kDegenerateRatio = 1e-24;

  explicit AuxReflection(DenseMatrix w);

  // W = I - U. Throws NotOrthogonal unless ||U^T U - I||_max <= 1e-8.
  static AuxReflection from_orthogonal(const DenseMatrix& u);

  std::size_t dim() const { return w_.rows(); }
  const DenseMatrix& weights() const { return w_; }

  DenseVector forward(const DenseVector& x) const;
  // Columns are samples. Column j is bit-identical to forward(X[:, j]) for
  // any thread count.
  DenseMatrix forward_batch(const DenseMatrix& x, int threads = 1) const;

  // True when x = 0 or Wx falls under the degeneracy threshold.
  bool is_degenerate(const DenseVector& x) const;

  JacobianParts jacobian(const DenseVector& x) const;

  // log|det J| through the matrix determinant lemma:
  //   det J = -det(A) (1 + 2 v^T A^{-1} u / ||u||^2),  v = W^T x.
  // Throws SingularA if A is singular.
  LogAbsDet log_abs_det_jacobian(const DenseVector& x, DetPath path = DetPath::kAuto) const;

  // J^T g without forming J.
  DenseVector vjp_x(const DenseVector& x, const DenseVector& g) const;
  // d(g^T f(x)) / dW.
  DenseMatrix vjp_w(const DenseVector& x, const DenseVector& g) const;

  // Caches an eigendecomposition of W so det(A) = prod(1 - c lambda_i) and
  // A^{-1} u cost O(d^2) per sample. Throws NotSymmetric for asymmetric W.
  void enable_symmetric_fast_path();
  bool has_symmetric_fast_path() const { return eig_.has_value(); }

 private:
  struct Local {
    DenseVector u;
    double uu;
    double c;
  };

  bool degenerate(double uu, double xx) const;
  Local local(const DenseVector& x) const;

  DenseMatrix w_;
  double w_max_sq_;
  std::optional<SymmetricEigen> eig_;
};

}  // namespace auxref
