#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "auxref/aux_reflection.hpp"
#include "auxref/errors.hpp"
#include "auxref/experiments.hpp"
#include "auxref/householder.hpp"
#include "auxref/invertible.hpp"

namespace py = pybind11;
using namespace auxref;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseVector to_vector(const Array& a) {
  if (a.ndim() != 1) throw DimensionMismatch("expected a 1-D array");
  return DenseVector(std::vector<double>(a.data(), a.data() + a.size()));
}

// numpy is row-major, DenseMatrix column-major.
DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionMismatch("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  DenseMatrix m(rows, cols);
  auto r = a.unchecked<2>();
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = r(i, j);
  }
  return m;
}

py::array_t<double> from_vector(const DenseVector& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.span().begin(), v.span().end(), out.mutable_data());
  return out;
}

py::array_t<double> from_matrix(const DenseMatrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) w(i, j) = m(i, j);
  }
  return out;
}

// Chains travel as (k, d) arrays whose rows are v_1 ... v_k.
ReflectionChain to_chain(const Array& a) {
  if (a.ndim() != 2) throw DimensionMismatch("chain must be a (k, d) array");
  const auto k = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  std::vector<ReflectionVector> vs;
  vs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    vs.emplace_back(DenseVector(std::vector<double>(a.data() + i * d, a.data() + (i + 1) * d)));
  }
  return ReflectionChain(d, std::move(vs));
}

py::array_t<double> from_chain(const ReflectionChain& c) {
  py::array_t<double> out({static_cast<py::ssize_t>(c.length()), static_cast<py::ssize_t>(c.dim())});
  double* p = out.mutable_data();
  for (const auto& v : c.vectors()) p = std::copy(v.vector().span().begin(), v.vector().span().end(), p);
  return out;
}

DetPath to_path(const std::string& s) {
  if (s == "auto") return DetPath::kAuto;
  if (s == "lu") return DetPath::kLu;
  if (s == "symmetric") return DetPath::kSymmetric;
  throw InvalidArgument("path must be 'auto', 'lu' or 'symmetric'");
}

}  // namespace

PYBIND11_MODULE(_auxref, m) {
  m.doc() = "Auxiliary Householder reflections f(x) = H(Wx) x";

  auto base = py::register_exception<Error>(m, "AuxrefError", PyExc_RuntimeError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);
  py::register_exception<NonFiniteValue>(m, "NonFiniteValue", base);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<SingularMatrix>(m, "SingularMatrix", base);
  py::register_exception<NotSymmetric>(m, "NotSymmetric", base);
  py::register_exception<NotOrthogonal>(m, "NotOrthogonal", base);
  py::register_exception<DegenerateReflection>(m, "DegenerateReflection", base);
  py::register_exception<SingularA>(m, "SingularA", base);
  py::register_exception<SingularJacobian>(m, "SingularJacobian", base);

  py::class_<AuxReflection>(m, "AuxReflection")
      .def(py::init([](const Array& w) { return AuxReflection(to_matrix(w)); }), py::arg("W"))
      .def_static(
          "from_orthogonal",
          [](const Array& u) { return AuxReflection::from_orthogonal(to_matrix(u)); },
          py::arg("U"))
      .def_property_readonly("dim", &AuxReflection::dim)
      .def_property_readonly("weights",
                             [](const AuxReflection& l) { return from_matrix(l.weights()); })
      .def(
          "forward",
          [](const AuxReflection& l, const Array& x) { return from_vector(l.forward(to_vector(x))); },
          py::arg("x"))
      .def(
          "forward_batch",
          [](const AuxReflection& l, const Array& x, int threads) {
            const DenseMatrix xm = to_matrix(x);
            DenseMatrix y(1, 1);
            {
              py::gil_scoped_release release;
              y = l.forward_batch(xm, threads);
            }
            return from_matrix(y);
          },
          py::arg("X"), py::arg("threads") = 1)
      .def(
          "is_degenerate",
          [](const AuxReflection& l, const Array& x) { return l.is_degenerate(to_vector(x)); },
          py::arg("x"))
      .def(
          "jacobian",
          [](const AuxReflection& l, const Array& x) {
            const JacobianParts p = l.jacobian(to_vector(x));
            py::dict d;
            d["J"] = from_matrix(p.J);
            d["A"] = from_matrix(p.A);
            d["u"] = from_vector(p.u);
            d["c"] = p.c;
            return d;
          },
          py::arg("x"))
      .def(
          "log_abs_det_jacobian",
          [](const AuxReflection& l, const Array& x, const std::string& path) {
            const LogAbsDet r = l.log_abs_det_jacobian(to_vector(x), to_path(path));
            return py::make_tuple(r.logabsdet, r.sign);
          },
          py::arg("x"), py::arg("path") = "auto")
      .def(
          "vjp_x",
          [](const AuxReflection& l, const Array& x, const Array& g) {
            return from_vector(l.vjp_x(to_vector(x), to_vector(g)));
          },
          py::arg("x"), py::arg("g"))
      .def(
          "vjp_w",
          [](const AuxReflection& l, const Array& x, const Array& g) {
            return from_matrix(l.vjp_w(to_vector(x), to_vector(g)));
          },
          py::arg("x"), py::arg("g"))
      .def("enable_symmetric_fast_path", &AuxReflection::enable_symmetric_fast_path)
      .def_property_readonly("has_symmetric_fast_path", &AuxReflection::has_symmetric_fast_path);

  // ---- householder ----
  m.def(
      "reflect",
      [](const Array& v, const Array& x) {
        return from_vector(reflect(ReflectionVector(to_vector(v)), to_vector(x)));
      },
      py::arg("v"), py::arg("x"));
  m.def(
      "chain_apply",
      [](const Array& vs, const Array& x) { return from_vector(chain_apply(to_chain(vs), to_vector(x))); },
      py::arg("vs"), py::arg("x"));
  m.def(
      "chain_apply_batch",
      [](const Array& vs, const Array& x, int threads) {
        const ReflectionChain c = to_chain(vs);
        const DenseMatrix xm = to_matrix(x);
        DenseMatrix y(1, 1);
        {
          py::gil_scoped_release release;
          y = chain_apply_batch(c, xm, threads);
        }
        return from_matrix(y);
      },
      py::arg("vs"), py::arg("X"), py::arg("threads") = 1);
  m.def(
      "materialize", [](const Array& vs) { return from_matrix(materialize(to_chain(vs))); },
      py::arg("vs"));
  m.def(
      "align",
      [](const Array& x, const Array& y) { return from_vector(align(to_vector(x), to_vector(y)).vector()); },
      py::arg("x"), py::arg("y"));
  m.def(
      "decompose_orthogonal", [](const Array& q) { return from_chain(decompose_orthogonal(to_matrix(q))); },
      py::arg("Q"));
  m.def(
      "random_orthogonal",
      [](std::size_t d, std::uint64_t seed) {
        SeededRng rng(seed);
        return from_matrix(random_orthogonal(d, rng));
      },
      py::arg("d"), py::arg("seed") = 0);
  m.def(
      "random_chain",
      [](std::size_t d, std::size_t k, std::uint64_t seed) {
        SeededRng rng(seed);
        return from_chain(random_chain(d, k, rng));
      },
      py::arg("d"), py::arg("k"), py::arg("seed") = 0);

  // ---- invertible ----
  m.def(
      "build_weights",
      [](const Array& v) {
        const InvertibleWeights iw = build_weights(to_matrix(v));
        py::dict d;
        d["W"] = from_matrix(iw.W);
        d["sigma_est"] = iw.sigma_est;
        d["normalizer"] = iw.normalizer;
        return d;
      },
      py::arg("V"));
  m.def(
      "check_invertibility_condition",
      [](const Array& w) {
        const InvertibilityCheck c = check_invertibility_condition(to_matrix(w));
        py::dict d;
        d["ok"] = c.ok;
        d["lambda_min"] = c.bounds.lambda_min;
        d["lambda_max"] = c.bounds.lambda_max;
        d["margin"] = c.margin;
        d["reason"] = c.reason;
        return d;
      },
      py::arg("W"));
  m.def(
      "lemma5_certificate",
      [](const Array& w, const Array& x) { return lemma5_certificate(to_matrix(w), to_vector(x)); },
      py::arg("W"), py::arg("x"));
  m.def(
      "newton_inverse",
      [](const AuxReflection& layer, const Array& y, int max_iters, double tol, double damping,
         bool backtracking) {
        NewtonConfig cfg;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        cfg.damping = damping;
        cfg.backtracking = backtracking;
        const NewtonResult r = newton_inverse(layer, to_vector(y), cfg);
        std::vector<double> residuals;
        for (const auto& s : r.trace) residuals.push_back(s.residual);
        py::dict d;
        d["x"] = from_vector(r.x);
        d["iters_used"] = r.iters_used;
        d["final_residual"] = r.final_residual;
        d["converged"] = r.converged;
        d["residuals"] = residuals;
        return d;
      },
      py::arg("layer"), py::arg("y"), py::arg("max_iters") = 50, py::arg("tol") = 1e-10,
      py::arg("damping") = 1.0, py::arg("backtracking") = false);

  // ---- experiments ----
  m.def(
      "run_verification_json",
      [](const std::string& suite, const std::vector<int>& d_list, int trials, std::uint64_t seed) {
        VerificationRequest req;
        req.suite = suite;
        req.d_list = d_list;
        req.trials = trials;
        req.seed = seed;
        py::gil_scoped_release release;
        return to_json(run_verification(req));
      },
      py::arg("suite") = "all", py::arg("d_list") = std::vector<int>{2, 4, 8},
      py::arg("trials") = 50, py::arg("seed") = 42);
  m.def(
      "run_bench",
      [](int d, int k, int batch, int reps, int warmup, std::uint64_t seed, int threads) {
        BenchSpec spec;
        spec.d = d;
        spec.k = k;
        spec.batch = batch;
        spec.reps = reps;
        spec.warmup = warmup;
        spec.seed = seed;
        spec.threads = threads;
        std::vector<BenchRecord> recs;
        {
          py::gil_scoped_release release;
          recs = run_bench(spec);
        }
        py::list out;
        for (const auto& r : recs) {
          py::dict row;
          row["method"] = r.method;
          row["d"] = r.d;
          row["k"] = r.k;
          row["batch"] = r.batch;
          row["reps"] = r.reps;
          row["threads"] = r.threads;
          row["mean_ms"] = r.mean_ms;
          row["std_ms"] = r.std_ms;
          row["checksum"] = r.checksum;
          out.append(row);
        }
        return out;
      },
      py::arg("d") = 64, py::arg("k") = 64, py::arg("batch") = 256, py::arg("reps") = 10,
      py::arg("warmup") = 5, py::arg("seed") = 42, py::arg("threads") = 1);
  m.def(
      "run_training",
      [](int d, int steps, double lr, int batch, std::uint64_t seed, int target_k, double init_noise) {
        TrainSpec spec;
        spec.d = d;
        spec.steps = steps;
        spec.lr = lr;
        spec.batch = batch;
        spec.seed = seed;
        spec.target_k = target_k;
        spec.init_noise = init_noise;
        TrainResult r{{}, DenseMatrix(1, 1), DenseMatrix(1, 1), DenseMatrix(1, 1), 0};
        {
          py::gil_scoped_release release;
          r = run_training(spec);
        }
        std::vector<double> loss;
        std::vector<double> grad_norm;
        for (const auto& s : r.trace) {
          loss.push_back(s.loss);
          grad_norm.push_back(s.grad_norm);
        }
        py::dict out;
        out["loss"] = loss;
        out["grad_norm"] = grad_norm;
        out["target"] = from_matrix(r.target);
        out["initial_weights"] = from_matrix(r.initial_weights);
        out["final_weights"] = from_matrix(r.final_weights);
        out["resampled"] = r.resampled;
        return out;
      },
      py::arg("d") = 8, py::arg("steps") = 3000, py::arg("lr") = 0.1, py::arg("batch") = 64,
      py::arg("seed") = 0, py::arg("target_k") = 8, py::arg("init_noise") = 0.1);
}
