#include <cmath>

#include "auxref/aux_reflection.hpp"
#include "auxref/errors.hpp"
#include "auxref/experiments.hpp"
#include "auxref/householder.hpp"

namespace auxref {

void TrainSpec::validate() const {
  if (d < 2) throw InvalidArgument("train: d must be >= 2");
  if (steps < 1) throw InvalidArgument("train: steps must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("train: lr must be >= 0");
  if (batch < 1) throw InvalidArgument("train: batch must be >= 1");
  if (eval_batch < 1) throw InvalidArgument("train: eval_batch must be >= 1");
  if (target_k < 1 && !target) throw InvalidArgument("train: target_k must be >= 1");
  const auto dim = static_cast<std::size_t>(d);
  if (initial_weights && (initial_weights->rows() != dim || initial_weights->cols() != dim)) {
    throw DimensionMismatch("train: initial weights must be d x d");
  }
  if (target && (target->rows() != dim || target->cols() != dim)) {
    throw DimensionMismatch("train: target must be d x d");
  }
}

LossAndGradient training_loss_and_gradient(const DenseMatrix& w, const DenseMatrix& target,
                                           const DenseMatrix& x) {
  const AuxReflection layer(w);
  const DenseMatrix fx = layer.forward_batch(x);
  const DenseMatrix tx = matmul(target, x);
  const double n = static_cast<double>(x.cols());
  DenseMatrix grad(w.rows(), w.cols());
  double loss = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const DenseVector xj = x.column(j);
    const DenseVector r = fx.column(j) - tx.column(j);
    loss += 0.5 * squared_norm(r.span());
    if (layer.is_degenerate(xj)) continue;
    grad = grad + (1.0 / n) * layer.vjp_w(xj, r);
  }
  return {loss / n, std::move(grad)};
}

TrainResult run_training(const TrainSpec& spec) {
  spec.validate();
  const auto d = static_cast<std::size_t>(spec.d);
  SeededRng rng(spec.seed);

  DenseMatrix target = spec.target
                           ? *spec.target
                           : materialize(random_chain(d, static_cast<std::size_t>(spec.target_k), rng));
  DenseMatrix w = DenseMatrix::identity(d);
  if (spec.initial_weights) {
    w = *spec.initial_weights;
  } else {
    const DenseMatrix g = random_gaussian_matrix(d, d, rng);
    w = w + (0.5 * spec.init_noise) * (g + g.transpose());
  }
  const DenseMatrix eval_x =
      random_gaussian_matrix(d, static_cast<std::size_t>(spec.eval_batch), rng);

  TrainResult result{{}, target, w, w, 0};
  result.trace.reserve(static_cast<std::size_t>(spec.steps) + 1);
  for (int step = 0; step <= spec.steps; ++step) {
    const AuxReflection layer(w);
    DenseMatrix batch(d, static_cast<std::size_t>(spec.batch));
    for (std::size_t j = 0; j < batch.cols(); ++j) {
      DenseVector xj = random_gaussian_vector(d, rng);
      while (layer.is_degenerate(xj)) {
        ++result.resampled;
        xj = random_gaussian_vector(d, rng);
      }
      batch.set_column(j, xj.span());
    }
    const double eval_loss = training_loss_and_gradient(w, target, eval_x).loss;
    auto [batch_loss, grad] = training_loss_and_gradient(w, target, batch);
    result.trace.push_back({step, eval_loss, norm(grad.data()), batch_loss});
    if (!std::isfinite(eval_loss)) break;
    if (step < spec.steps) w = w - spec.lr * grad;
  }
  result.final_weights = std::move(w);
  return result;
}

}  // namespace auxref
