#pragma once

// Desk-scale experiments: chain-vs-auxiliary timing, a trainability demo and
// the verification sweeps that tie every identity of the library to a
// pass/fail report.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "auxref/linalg.hpp"

namespace auxref {

// ---- benchmark ----------------------------------------------------------------

struct BenchSpec {
  int d = 64;
  int k = 64;
  int batch = 256;
  int reps = 10;
  int warmup = 5;
  std::uint64_t seed = 42;
  int threads = 1;

  void validate() const;
};

struct BenchRecord {
  std::string method;  // "chain" or "auxiliary"
  int d;
  int k;
  int batch;
  int reps;
  int threads;
  double mean_ms;
  double std_ms;
  double checksum;  // sum of all output entries
};

// Both methods compute U X for the same U = H(v_1) ... H(v_k): the chain via
// k sequential rank-one batch updates, the auxiliary reflection via one
// matmul with W = I - U followed by per-column reflections.
std::vector<BenchRecord> run_bench(const BenchSpec& spec);

double checksum_relative_gap(const BenchRecord& a, const BenchRecord& b);

// ---- training demo ----------------------------------------------------------------

struct TrainSpec {
  int d = 8;
  int steps = 3000;
  double lr = 0.1;
  int batch = 64;
  std::uint64_t seed = 0;
  int target_k = 8;
  // W_0 = I + init_noise * (G + G^T) / 2 with G standard Gaussian.
  double init_noise = 0.1;
  // Size of the fixed evaluation set the reported loss is measured on.
  int eval_batch = 256;
  std::optional<DenseMatrix> initial_weights;
  std::optional<DenseMatrix> target;  // overrides the random U*

  void validate() const;
};

struct TrainStep {
  int step;
  double loss;        // on the fixed evaluation set
  double grad_norm;   // Frobenius norm of the minibatch gradient
  double batch_loss;  // on the minibatch the gradient came from
};

struct TrainResult {
  // steps + 1 rows: row i describes W after i updates.
  std::vector<TrainStep> trace;
  DenseMatrix target;
  DenseMatrix initial_weights;
  DenseMatrix final_weights;
  int resampled;  // degenerate training inputs drawn again
};

// Plain gradient descent on 0.5 * mean ||H(Wx)x - U* x||^2 with fresh
// Gaussian minibatches; gradients come from AuxReflection::vjp_w.
TrainResult run_training(const TrainSpec& spec);

// Mean 0.5 ||f(x) - U* x||^2 and its gradient over the columns of X.
struct LossAndGradient {
  double loss;
  DenseMatrix grad;
};
LossAndGradient training_loss_and_gradient(const DenseMatrix& w, const DenseMatrix& target,
                                           const DenseMatrix& x);

// ---- verification ------------------------------------------------------------------

inline const std::vector<std::string>& verification_suites() {
  static const std::vector<std::string> kSuites{"thm1",   "jacobian", "detjac", "lemma5",
                                                "newton", "chain"};
  return kSuites;
}

struct VerificationRequest {
  std::string suite = "all";
  std::vector<int> d_list{2, 4, 8};
  int trials = 50;
  std::uint64_t seed = 42;
  // Tolerance per check name; the key "*" applies to every check.
  std::map<std::string, double> tol_overrides;
};

struct CheckResult {
  std::string suite;
  std::string name;
  int d;
  int trials;
  bool passed;
  double max_error;
  double tolerance;
  // Informational checks are reported but do not gate the suite.
  bool enforced = true;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed;
  std::vector<int> d_list;
  int trials;
  std::vector<CheckResult> checks;
  bool passed;
};

// Throws InvalidArgument for an unknown suite name.
VerificationReport run_verification(const VerificationRequest& request);

// Schema-versioned JSON; identical reports serialize byte-for-byte equal.
std::string to_json(const VerificationReport& report);

// Largest elementwise relative gap between an analytic gradient and its
// finite-difference estimate. Entries of magnitude <= 1e-8 are skipped and
// entries below 1e-4 * max|fd| are measured against that floor.
double elementwise_fd_error(const DenseMatrix& analytic, const DenseMatrix& fd);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace auxref
