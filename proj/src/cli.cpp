#include "auxref/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "auxref/aux_reflection.hpp"
#include "auxref/errors.hpp"
#include "auxref/experiments.hpp"
#include "auxref/householder.hpp"
#include "auxref/invertible.hpp"

namespace auxref::cli {
namespace {

int default_threads() {
  if (const char* env = std::getenv("AUXREF_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t >= 1) return t;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

bool write_file(const std::string& path, const std::string& content, std::ostream& err) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (f) f << content;
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

struct VerifyArgs {
  std::string suite = "all";
  std::vector<int> d{2, 4, 8};
  int trials = 50;
  std::uint64_t seed = 42;
  std::optional<double> tol;
  std::string json;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  VerificationRequest req;
  req.suite = a.suite;
  req.d_list = a.d;
  req.trials = a.trials;
  req.seed = a.seed;
  if (a.tol) req.tol_overrides["*"] = *a.tol;

  VerificationReport report;
  try {
    report = run_verification(req);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  out << std::left << std::setw(10) << "suite" << std::setw(28) << "check" << std::setw(5) << "d"
      << std::setw(8) << "trials" << std::setw(26) << "max_error" << std::setw(26) << "tolerance"
      << "result\n";
  for (const auto& c : report.checks) {
    const char* verdict = c.passed ? "PASS" : (c.enforced ? "FAIL" : "info");
    out << std::setw(10) << c.suite << std::setw(28) << c.name << std::setw(5) << c.d
        << std::setw(8) << c.trials << std::setw(26) << format_double(c.max_error)
        << std::setw(26) << format_double(c.tolerance) << verdict << "\n";
  }
  out << (report.passed ? "all checks passed\n" : "some checks FAILED\n");

  if (!a.json.empty() && !write_file(a.json, to_json(report), err)) return kExitFailure;
  return report.passed ? kExitOk : kExitFailure;
}

int cmd_bench(const BenchSpec& spec, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
  const auto records = run_bench(spec);
  std::ostringstream csv;
  csv << "method,d,k,batch,reps,threads,mean_ms,std_ms,checksum\n";
  for (const auto& r : records) {
    csv << r.method << ',' << r.d << ',' << r.k << ',' << r.batch << ',' << r.reps << ','
        << r.threads << ',' << format_double(r.mean_ms) << ',' << format_double(r.std_ms) << ','
        << format_double(r.checksum) << '\n';
  }
  out << csv.str();
  const auto& chain = records.at(0);
  const auto& aux = records.at(1);
  out << "speedup chain/auxiliary: " << format_double(chain.mean_ms / aux.mean_ms) << "\n";
  const double gap = checksum_relative_gap(chain, aux);
  out << "checksum relative gap: " << format_double(gap) << "\n";
  if (!out_path.empty() && !write_file(out_path, csv.str(), err)) return kExitFailure;
  if (!(gap <= 1e-6)) {
    err << "error: chain and auxiliary checksums disagree\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_train(const TrainSpec& spec, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
  const TrainResult result = run_training(spec);
  std::ostringstream csv;
  csv << "step,loss,grad_norm\n";
  for (const auto& s : result.trace) {
    csv << s.step << ',' << format_double(s.loss) << ',' << format_double(s.grad_norm) << '\n';
  }
  if (!out_path.empty() && !write_file(out_path, csv.str(), err)) return kExitFailure;
  const auto& last = result.trace.back();
  if (!std::isfinite(last.loss) || !std::isfinite(last.grad_norm)) {
    err << "error: non-finite loss at step " << last.step << "\n";
    return kExitFailure;
  }
  out << "initial loss: " << format_double(result.trace.front().loss) << "\n";
  out << "final loss: " << format_double(last.loss) << "\n";
  if (result.resampled > 0) out << "resampled degenerate inputs: " << result.resampled << "\n";
  return kExitOk;
}

struct InvertArgs {
  int d = 4;
  std::uint64_t seed = 42;
  bool orthogonal = false;
  double tol = 1e-10;
  int max_iters = 50;
};

int cmd_invert(const InvertArgs& a, std::ostream& out, std::ostream& err) {
  if (a.d < 2) {
    err << "error: --d must be >= 2\n";
    return kExitUsage;
  }
  const auto d = static_cast<std::size_t>(a.d);
  SeededRng rng(a.seed);
  DenseMatrix w(d, d);
  if (a.orthogonal) {
    w = AuxReflection::from_orthogonal(random_orthogonal(d, rng)).weights();
  } else {
    DenseMatrix v(d, d);
    for (double& e : v.data()) e = rng.uniform();
    w = build_weights(v).W;
  }
  const AuxReflection layer(w);
  DenseVector x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = rng.uniform();
  const DenseVector y = layer.forward(x);

  NewtonConfig cfg;
  cfg.max_iters = a.max_iters;
  // Drive the residual below the requested error so the final check on x
  // is not limited by the stopping rule.
  cfg.tol = std::min(a.tol, 1e-10);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto print_vec = [&](const DenseVector& v) {
    out << "[";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
    out << "]";
  };
  out << "x    ";
  print_vec(x);
  out << "\nf(x) ";
  print_vec(y);
  out << "\n";

  NewtonResult res{x, 0, 0.0, false, {}};
  try {
    res = newton_inverse(layer, y, cfg);
  } catch (const SingularJacobian& e) {
    err << "error: " << e.what() << " at iteration " << e.iteration() << "\n";
    return kExitFailure;
  }
  const int total = static_cast<int>(res.trace.size()) - 1;
  for (const auto& step : res.trace) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), "[%02d/%02d]", step.iteration, total);
    out << tag << " |x_i| = " << format_double(norm(step.x.span()))
        << "  residual = " << format_double(step.residual) << "\n";
  }
  const double error = max_abs_diff(res.x, x);
  out << "iterations: " << res.iters_used << "\n";
  out << "final residual: " << format_double(res.final_residual) << "\n";
  out << "max abs error: " << format_double(error) << "\n";
  if (!(error <= a.tol)) {
    err << "error: inverse not recovered to tol " << format_double(a.tol)
        << " (residual " << format_double(res.final_residual) << ")\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Auxiliary Householder reflections: verification, benchmark, training, inversion",
               "auxref"};
  app.require_subcommand(1);

  VerifyArgs verify;
  auto* sv = app.add_subcommand("verify", "run the verification suites");
  sv->add_option("--suite", verify.suite, "all|thm1|jacobian|detjac|lemma5|newton|chain");
  sv->add_option("--d", verify.d, "comma-separated dimensions")->delimiter(',');
  sv->add_option("--trials", verify.trials)->check(CLI::PositiveNumber);
  sv->add_option("--seed", verify.seed);
  sv->add_option("--tol", verify.tol, "tolerance override for every check");
  sv->add_option("--json", verify.json, "write the JSON report here");

  BenchSpec bench;
  bench.threads = default_threads();
  std::string bench_out;
  auto* sb = app.add_subcommand("bench", "time chain vs auxiliary reflection");
  sb->add_option("--d", bench.d)->check(CLI::Range(2, 1 << 20));
  sb->add_option("--k", bench.k)->check(CLI::Range(1, 1 << 20));
  sb->add_option("--batch", bench.batch)->check(CLI::Range(1, 1 << 24));
  sb->add_option("--reps", bench.reps, "timed repetitions (>= 3)")->check(CLI::Range(3, 1 << 20));
  sb->add_option("--warmup", bench.warmup)->check(CLI::Range(0, 1 << 20));
  sb->add_option("--threads", bench.threads)->check(CLI::Range(1, 1024));
  sb->add_option("--seed", bench.seed);
  sb->add_option("--out", bench_out, "CSV output path");

  TrainSpec train;
  train.seed = 42;
  std::string train_out;
  auto* st = app.add_subcommand("train", "fit an auxiliary reflection to a random orthogonal map");
  st->add_option("--d", train.d)->check(CLI::Range(2, 1 << 16));
  st->add_option("--steps", train.steps)->check(CLI::Range(1, 1 << 30));
  st->add_option("--lr", train.lr)->check(CLI::NonNegativeNumber);
  st->add_option("--batch", train.batch)->check(CLI::Range(1, 1 << 24));
  st->add_option("--target-k", train.target_k)->check(CLI::Range(1, 1 << 16));
  st->add_option("--init-noise", train.init_noise)->check(CLI::NonNegativeNumber);
  st->add_option("--seed", train.seed);
  st->add_option("--out", train_out, "CSV output path");

  InvertArgs invert;
  auto* si = app.add_subcommand("invert", "invert one auxiliary reflection with Newton's method");
  si->add_option("--d", invert.d)->check(CLI::Range(2, 1 << 16));
  si->add_option("--seed", invert.seed);
  auto* constrained = si->add_flag("--constrained", "W = I + VV^T / (2 sigma_max) (default)");
  auto* orth = si->add_flag("--orthogonal", invert.orthogonal, "W = I - U, U random orthogonal");
  constrained->excludes(orth);
  si->add_option("--tol", invert.tol)->check(CLI::PositiveNumber);
  si->add_option("--max-iters", invert.max_iters)->check(CLI::Range(1, 1 << 20));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (sv->parsed()) return cmd_verify(verify, out, err);
    if (sb->parsed()) return cmd_bench(bench, bench_out, out, err);
    if (st->parsed()) return cmd_train(train, train_out, out, err);
    if (si->parsed()) return cmd_invert(invert, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace auxref::cli
