#include <chrono>
#include <cmath>
#include <numeric>

#include "auxref/aux_reflection.hpp"
#include "auxref/errors.hpp"
#include "auxref/experiments.hpp"
#include "auxref/householder.hpp"

namespace auxref {
namespace {

double sum_entries(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s;
}

template <typename Fn>
BenchRecord time_method(const std::string& method, const BenchSpec& spec, Fn&& run) {
  using clock = std::chrono::steady_clock;
  double checksum = 0.0;
  for (int i = 0; i < spec.warmup; ++i) checksum = sum_entries(run());
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(spec.reps));
  for (int i = 0; i < spec.reps; ++i) {
    const auto t0 = clock::now();
    const DenseMatrix out = run();
    const auto t1 = clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    checksum = sum_entries(out);
  }
  const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  double var = 0.0;
  for (double t : ms) var += (t - mean) * (t - mean);
  var /= static_cast<double>(ms.size() - 1);
  return {method,      spec.d,   spec.k, spec.batch, spec.reps, spec.threads,
          mean,        std::sqrt(var), checksum};
}

}  // namespace

void BenchSpec::validate() const {
  if (d < 2) throw InvalidArgument("bench: d must be >= 2");
  if (k < 1) throw InvalidArgument("bench: k must be >= 1");
  if (batch < 1) throw InvalidArgument("bench: batch must be >= 1");
  if (reps < 3) throw InvalidArgument("bench: reps must be >= 3");
  if (warmup < 0) throw InvalidArgument("bench: warmup must be >= 0");
  if (threads < 1) throw InvalidArgument("bench: threads must be >= 1");
}

std::vector<BenchRecord> run_bench(const BenchSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  const auto d = static_cast<std::size_t>(spec.d);
  const ReflectionChain chain = random_chain(d, static_cast<std::size_t>(spec.k), rng);
  const AuxReflection layer = AuxReflection::from_orthogonal(materialize(chain));
  const DenseMatrix x = random_gaussian_matrix(d, static_cast<std::size_t>(spec.batch), rng);

  std::vector<BenchRecord> records;
  records.push_back(
      time_method("chain", spec, [&] { return chain_apply_batch(chain, x, spec.threads); }));
  records.push_back(
      time_method("auxiliary", spec, [&] { return layer.forward_batch(x, spec.threads); }));
  return records;
}

double checksum_relative_gap(const BenchRecord& a, const BenchRecord& b) {
  const double scale = std::max(std::abs(a.checksum), std::abs(b.checksum));
  if (scale == 0.0) return 0.0;
  return std::abs(a.checksum - b.checksum) / scale;
}

}  // namespace auxref
