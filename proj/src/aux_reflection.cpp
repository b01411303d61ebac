#include "auxref/aux_reflection.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "auxref/errors.hpp"
#include "detail/parallel.hpp"

namespace auxref {

AuxReflection::AuxReflection(DenseMatrix w) : w_(std::move(w)), w_max_sq_(0.0) {
  if (!w_.square()) throw DimensionMismatch("AuxReflection: W must be square");
  const double m = max_abs(w_);
  w_max_sq_ = m * m;
}

AuxReflection AuxReflection::from_orthogonal(const DenseMatrix& u) {
  if (!u.square()) throw DimensionMismatch("from_orthogonal: U must be square");
  const double defect = orthogonality_defect(u);
  if (defect > 1e-8) {
    throw NotOrthogonal("from_orthogonal: ||U^T U - I||_max = " + std::to_string(defect));
  }
  return AuxReflection(DenseMatrix::identity(u.rows()) - u);
}

bool AuxReflection::degenerate(double uu, double xx) const {
  return xx == 0.0 || uu <= kDegenerateRatio * w_max_sq_ * xx;
}

bool AuxReflection::is_degenerate(const DenseVector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("AuxReflection: input dimension mismatch");
  const DenseVector u = matvec(w_, x);
  return degenerate(squared_norm(u.span()), squared_norm(x.span()));
}

AuxReflection::Local AuxReflection::local(const DenseVector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("AuxReflection: input dimension mismatch");
  DenseVector u = matvec(w_, x);
  const double uu = squared_norm(u.span());
  if (degenerate(uu, squared_norm(x.span()))) {
    throw DegenerateReflection("Jacobian undefined: x = 0 or Wx = 0");
  }
  const double c = 2.0 * dot(u.span(), x.span()) / uu;
  return {std::move(u), uu, c};
}

namespace {

// out = H(u) x given u = Wx; handles the two conventions.
void reflect_column(std::span<const double> x, std::span<const double> u, double w_max_sq,
                    std::span<double> out) {
  const double xx = squared_norm(x);
  if (xx == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double uu = squared_norm(u);
  std::copy(x.begin(), x.end(), out.begin());
  if (uu <= AuxReflection::kDegenerateRatio * w_max_sq * xx) return;
  const double c = 2.0 * dot(u, x) / uu;
  axpy(-c, u, out);
}

}  // namespace

DenseVector AuxReflection::forward(const DenseVector& x) const {
  if (x.size() != dim()) throw DimensionMismatch("forward: input dimension mismatch");
  DenseVector u(dim());
  matvec_into(w_, x.span(), u.span());
  DenseVector y(dim());
  reflect_column(x.span(), u.span(), w_max_sq_, y.span());
  return y;
}

DenseMatrix AuxReflection::forward_batch(const DenseMatrix& x, int threads) const {
  if (x.rows() != dim()) throw DimensionMismatch("forward_batch: input dimension mismatch");
  DenseMatrix u(x.rows(), x.cols());
  DenseMatrix y(x.rows(), x.cols());
  detail::parallel_blocks(x.cols(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) matvec_into(w_, x.col(j), u.col(j));
    for (std::size_t j = begin; j < end; ++j) reflect_column(x.col(j), u.col(j), w_max_sq_, y.col(j));
  });
  return y;
}

JacobianParts AuxReflection::jacobian(const DenseVector& x) const {
  auto [u, uu, c] = local(x);
  const std::size_t d = dim();
  DenseMatrix a = DenseMatrix::identity(d) - c * w_;
  // H(u) A = A - (2/uu) u (A^T u)^T and the second term adds (W^T x)^T to the
  // same row factor.
  const DenseVector atu = matvec_transposed(a, u);
  const DenseVector wtx = matvec_transposed(w_, x);
  DenseMatrix j = a;
  for (std::size_t col = 0; col < d; ++col) {
    const double r = -2.0 * (atu[col] + wtx[col]) / uu;
    axpy(r, u.span(), j.col(col));
  }
  return {std::move(j), std::move(a), std::move(u), c};
}

LogAbsDet AuxReflection::log_abs_det_jacobian(const DenseVector& x, DetPath path) const {
  auto [u, uu, c] = local(x);
  const DenseVector v = matvec_transposed(w_, x);

  if (path == DetPath::kAuto) path = eig_ ? DetPath::kSymmetric : DetPath::kLu;

  double log_det_a = 0.0;
  int sign_a = 1;
  double quad = 0.0;  // v^T A^{-1} u
  if (path == DetPath::kLu) {
    const DenseMatrix a = DenseMatrix::identity(dim()) - c * w_;
    try {
      const LuFactorization lu(a);
      log_det_a = lu.log_abs_determinant();
      sign_a = lu.determinant_sign();
      quad = dot(v.span(), lu.solve(u).span());
    } catch (const SingularMatrix& e) {
      throw SingularA(std::string("A = I - cW is singular: ") + e.what());
    }
  } else {
    if (!eig_) throw InvalidArgument("symmetric determinant path not enabled");
    const auto& lam = eig_->values;
    const DenseMatrix& q = eig_->vectors;
    const DenseVector qtu = matvec_transposed(q, u);
    DenseVector scaled(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      const double ai = 1.0 - c * lam[i];
      if (std::abs(ai) < LuFactorization::kSingularPivot) {
        throw SingularA("A = I - cW is singular: eigenvalue " + std::to_string(ai));
      }
      log_det_a += std::log(std::abs(ai));
      if (ai < 0.0) sign_a = -sign_a;
      scaled[i] = qtu[i] / ai;
    }
    quad = dot(v.span(), matvec(q, scaled).span());
  }

  const double factor = 1.0 + 2.0 * quad / uu;
  if (factor == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
  const int sign = -sign_a * (factor < 0.0 ? -1 : 1);
  return {log_det_a + std::log(std::abs(factor)), sign};
}

DenseVector AuxReflection::vjp_x(const DenseVector& x, const DenseVector& g) const {
  if (g.size() != dim()) throw DimensionMismatch("vjp_x: cotangent dimension mismatch");
  auto [u, uu, c] = local(x);
  // A^T z = z - c W^T z
  const DenseVector wtg = matvec_transposed(w_, g);
  const DenseVector wtu = matvec_transposed(w_, u);
  const DenseVector wtx = matvec_transposed(w_, x);
  const double ug = dot(u.span(), g.span());
  const double k = -2.0 * ug / uu;
  DenseVector out = g;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double atu = u[i] - c * wtu[i];
    out[i] += -c * wtg[i] + k * (atu + wtx[i]);
  }
  return out;
}

DenseMatrix AuxReflection::vjp_w(const DenseVector& x, const DenseVector& g) const {
  if (g.size() != dim()) throw DimensionMismatch("vjp_w: cotangent dimension mismatch");
  auto [u, uu, c] = local(x);
  // f = x - c u with u = Wx. Differentiating c through u gives
  //   d(g^T f) = -r^T dW x,  r = (2 g^T u / ||u||^2) f + c g.
  DenseVector f = x;
  axpy(-c, u.span(), f.span());
  const double k = 2.0 * dot(g.span(), u.span()) / uu;
  DenseVector r(dim());
  for (std::size_t i = 0; i < dim(); ++i) r[i] = -(k * f[i] + c * g[i]);
  return DenseMatrix::outer(r, x);
}

void AuxReflection::enable_symmetric_fast_path() { eig_ = sym_eig(w_); }

}  // namespace auxref
