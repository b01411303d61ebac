#pragma once

// Invertibility of f(x) = H(Wx) x and its numerical inverse.
//
// f is invertible on R^d (d >= 2) when W is symmetric with
// 1.5 * lambda_min(W) > lambda_max(W). The parameterization
// W = I + V V^T / (2 sigma_max(V V^T)) puts every eigenvalue of W in [1, 1.5];
// a (1 - 1e-6) shrink of the normalized term keeps the inequality strict even
// when V V^T is rank deficient.

#include <string>
#include <vector>

#include "auxref/aux_reflection.hpp"
#include "auxref/linalg.hpp"
#include "auxref/rng.hpp"

namespace auxref {

struct InvertibleWeights {
  static constexpr double kShrink = 1.0 - 1e-6;

  DenseMatrix V;
  double sigma_est;   // sigma_max(V V^T); 0 when V = 0
  double normalizer;  // 2 sigma_est / kShrink; W = I + V V^T / normalizer
  DenseMatrix W;

  AuxReflection layer() const { return AuxReflection(W); }
};

// Power iteration (tol 1e-10) estimates sigma_max(V V^T); the Jacobi solver
// takes over if it fails to converge.
InvertibleWeights build_weights(const DenseMatrix& v);

struct InvertibilityCheck {
  bool ok;
  EigenBounds bounds;  // NaN when W is not symmetric
  double margin;       // 1.5 lambda_min - lambda_max
  std::string reason;  // empty when ok
};

InvertibilityCheck check_invertibility_condition(const DenseMatrix& w);

// lambda_max(A^{-1}) for A = I - c W at x. Under the invertibility condition
// this is always below -1/2. Throws InvalidArgument if W fails the condition
// and DegenerateReflection for degenerate x.
double lemma5_certificate(const DenseMatrix& w, const DenseVector& x);

struct NewtonConfig {
  int max_iters = 50;
  double tol = 1e-10;  // on ||f(x) - y||_inf
  double damping = 1.0;
  // Halve the step (up to 20 times) whenever the residual fails to decrease.
  bool backtracking = false;

  void validate() const;
};

struct NewtonStep {
  int iteration;
  DenseVector x;
  double residual;
};

struct NewtonResult {
  DenseVector x;
  int iters_used;
  double final_residual;
  bool converged;
  // trace[0] is the starting point x_0 = y.
  std::vector<NewtonStep> trace;
};

// Solves f(x) = y from x_0 = y with x <- x - damping * J^{-1} (f(x) - y).
// Throws SingularJacobian (carrying the iterate) if J is singular or
// undefined at an iterate. Non-convergence is reported, not thrown.
NewtonResult newton_inverse(const AuxReflection& layer, const DenseVector& y,
                            const NewtonConfig& cfg = {});

struct RoundtripReport {
  double max_err;  // max over columns of ||x_hat - x||_inf
  int failures;    // non-converged or singular columns
};

RoundtripReport roundtrip_check(const AuxReflection& layer, const DenseMatrix& x,
                                const NewtonConfig& cfg = {}, int threads = 1);

}  // namespace auxref
