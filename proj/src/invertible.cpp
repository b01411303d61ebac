#include "auxref/invertible.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "auxref/errors.hpp"
#include "detail/parallel.hpp"

namespace auxref {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigma_max_psd(const DenseMatrix& p) {
  SeededRng rng(0x5eedULL);
  const auto est = power_iteration_sigma_max(p, 20000, 1e-10, rng);
  if (est.converged) return est.sigma_max;
  return sym_eig_bounds(p).lambda_max;
}

}  // namespace

InvertibleWeights build_weights(const DenseMatrix& v) {
  if (!v.square()) throw DimensionMismatch("build_weights: V must be square");
  if (v.rows() < 2) throw InvalidArgument("build_weights: d must be >= 2");
  const std::size_t d = v.rows();
  const DenseMatrix p = matmul(v, v.transpose());
  const double sigma = sigma_max_psd(p);
  if (sigma == 0.0) return {v, 0.0, 0.0, DenseMatrix::identity(d)};
  const double normalizer = 2.0 * sigma / InvertibleWeights::kShrink;
  DenseMatrix w = DenseMatrix::identity(d) + (1.0 / normalizer) * p;
  return {v, sigma, normalizer, std::move(w)};
}

InvertibilityCheck check_invertibility_condition(const DenseMatrix& w) {
  if (!w.square()) throw DimensionMismatch("check_invertibility_condition: W must be square");
  const double defect = symmetry_defect(w);
  if (defect > 1e-10 * std::max(1.0, max_abs(w))) {
    return {false, {kNaN, kNaN}, kNaN, "W is not symmetric"};
  }
  const EigenBounds b = sym_eig_bounds(w);
  const double margin = 1.5 * b.lambda_min - b.lambda_max;
  if (!(margin > 0.0)) return {false, b, margin, "1.5 * lambda_min <= lambda_max"};
  return {true, b, margin, {}};
}

double lemma5_certificate(const DenseMatrix& w, const DenseVector& x) {
  const auto check = check_invertibility_condition(w);
  if (!check.ok) throw InvalidArgument("lemma5_certificate: " + check.reason);
  const AuxReflection layer(w);
  const JacobianParts parts = layer.jacobian(x);
  const auto eig = sym_eig(parts.A);
  double best = -std::numeric_limits<double>::infinity();
  for (double lam : eig.values) {
    if (lam == 0.0) throw SingularA("lemma5_certificate: A is singular");
    best = std::max(best, 1.0 / lam);
  }
  return best;
}

void NewtonConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("NewtonConfig: max_iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("NewtonConfig: tol must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw InvalidArgument("NewtonConfig: damping must be in (0, 1]");
  }
}

NewtonResult newton_inverse(const AuxReflection& layer, const DenseVector& y,
                            const NewtonConfig& cfg) {
  cfg.validate();
  if (y.size() != layer.dim()) throw DimensionMismatch("newton_inverse: dimension mismatch");
  if (norm_inf(y.span()) == 0.0) {
    DenseVector zero(y.size());
    return {zero, 0, 0.0, true, {{0, zero, 0.0}}};
  }

  auto residual_of = [&](const DenseVector& x) {
    return norm_inf((layer.forward(x) - y).span());
  };

  DenseVector x = y;
  double res = residual_of(x);
  std::vector<NewtonStep> trace{{0, x, res}};
  int it = 0;
  while (it < cfg.max_iters && !(res <= cfg.tol) && std::isfinite(res)) {
    ++it;
    const DenseVector r = layer.forward(x) - y;
    DenseVector delta(x.size());
    try {
      const JacobianParts parts = layer.jacobian(x);
      delta = LuFactorization(parts.J).solve(r);
    } catch (const SingularMatrix& e) {
      throw SingularJacobian(std::string("newton_inverse: singular Jacobian: ") + e.what(),
                             x.values(), it);
    } catch (const DegenerateReflection& e) {
      throw SingularJacobian(std::string("newton_inverse: Jacobian undefined: ") + e.what(),
                             x.values(), it);
    }

    double step = cfg.damping;
    DenseVector next = x - step * delta;
    double next_res = residual_of(next);
    if (cfg.backtracking) {
      for (int halvings = 0; halvings < 20 && !(next_res < res); ++halvings) {
        step *= 0.5;
        next = x - step * delta;
        next_res = residual_of(next);
      }
    }
    x = std::move(next);
    res = next_res;
    trace.push_back({it, x, res});
  }
  const bool converged = res <= cfg.tol;
  return {std::move(x), it, res, converged, std::move(trace)};
}

RoundtripReport roundtrip_check(const AuxReflection& layer, const DenseMatrix& x,
                                const NewtonConfig& cfg, int threads) {
  cfg.validate();
  std::vector<double> err(x.cols(), 0.0);
  std::vector<char> failed(x.cols(), 0);
  detail::parallel_blocks(x.cols(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const DenseVector xj = x.column(j);
      try {
        const auto result = newton_inverse(layer, layer.forward(xj), cfg);
        err[j] = max_abs_diff(result.x, xj);
        failed[j] = result.converged ? 0 : 1;
      } catch (const SingularJacobian&) {
        err[j] = std::numeric_limits<double>::infinity();
        failed[j] = 1;
      }
    }
  });
  RoundtripReport report{0.0, 0};
  for (std::size_t j = 0; j < x.cols(); ++j) {
    report.max_err = std::max(report.max_err, err[j]);
    report.failures += failed[j];
  }
  return report;
}

}  // namespace auxref
